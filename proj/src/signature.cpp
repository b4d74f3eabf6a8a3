#include "sigdr/signature.hpp"

#include <stdexcept>

namespace sigdr {

TruncatedTensor signature(const TimeSeries& ts, int level) {
  const int l = ts.length();
  if (l < 2) throw std::invalid_argument("signature: need at least 2 samples");
  TruncatedTensor sig = TruncatedTensor::unit(ts.dim(), level);
  Eigen::VectorXd workspace;
  Eigen::VectorXd delta(ts.dim());
  for (int k = 1; k < l; ++k) {
    delta = (ts.values.row(k) - ts.values.row(k - 1)).transpose();
    if (delta.isZero(0.0)) continue;  // exp(0) is the unit
    chen_step(sig, delta, workspace);
  }
  return sig;
}

std::vector<TruncatedTensor> pathwise_signature(const TimeSeries& ts, int level) {
  const int l = ts.length();
  if (l < 2) throw std::invalid_argument("pathwise_signature: need at least 2 samples");
  std::vector<TruncatedTensor> stream;
  stream.reserve(static_cast<std::size_t>(l));
  TruncatedTensor sig = TruncatedTensor::unit(ts.dim(), level);
  stream.push_back(sig);
  Eigen::VectorXd workspace;
  Eigen::VectorXd delta(ts.dim());
  for (int k = 1; k < l; ++k) {
    delta = (ts.values.row(k) - ts.values.row(k - 1)).transpose();
    if (!delta.isZero(0.0)) chen_step(sig, delta, workspace);
    stream.push_back(sig);
  }
  return stream;
}

}  // namespace sigdr
