#include "oracles.hpp"

#include <stdexcept>

namespace sigdr::testing {

TruncatedTensor riemann_signature_oracle(const TimeSeries& ts, int level,
                                         int subdivisions_per_segment) {
  if (subdivisions_per_segment < 1)
    throw std::invalid_argument("riemann_signature_oracle: need >= 1 subdivision");
  const int d = ts.dim();
  TruncatedTensor integrals = TruncatedTensor::unit(d, level);
  Eigen::VectorXd prev(integrals.size());

  for (int seg = 1; seg < ts.length(); ++seg) {
    const Eigen::VectorXd delta = (ts.values.row(seg) - ts.values.row(seg - 1)).transpose() /
                                  static_cast<double>(subdivisions_per_segment);
    for (int step = 0; step < subdivisions_per_segment; ++step) {
      prev = integrals.coeffs();
      if (level >= 1) integrals.level_block(1) += delta;
      for (int k = 2; k <= level; ++k) {
        auto cur = integrals.level_block(k);
        const auto lower = integrals.level_block(k - 1);  // already advanced
        const std::int64_t lower_off = integrals.level_offset(k - 1);
        for (std::int64_t u = 0; u < lower.size(); ++u) {
          const double avg = 0.5 * (prev[lower_off + u] + lower[u]);
          for (int j = 0; j < d; ++j) cur[u * d + j] += avg * delta[j];
        }
      }
    }
  }
  return integrals;
}

double linear_kernel_series(double z, int terms) {
  double sum = 1.0;
  double term = 1.0;
  for (int k = 1; k <= terms; ++k) {
    term *= z / (static_cast<double>(k) * static_cast<double>(k));
    sum += term;
  }
  return sum;
}

}  // namespace sigdr::testing
