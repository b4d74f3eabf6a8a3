#include "sigdr/measures.hpp"

#include "sigdr/parallel.hpp"
#include "sigdr/signature.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace sigdr {

namespace {

// Union of member timestamps, with members re-interpolated when grids
// differ. Returns the common grid and the (possibly resampled) members.
std::pair<Eigen::VectorXd, std::vector<TimeSeries>> align_group(const EmpiricalMeasure& group) {
  bool aligned = true;
  const auto& first = group.series.front();
  for (const auto& ts : group.series) {
    if (ts.length() != first.length() || ts.times != first.times) {
      aligned = false;
      break;
    }
  }
  if (aligned) return {first.times, group.series};

  std::vector<double> stamps;
  for (const auto& ts : group.series)
    stamps.insert(stamps.end(), ts.times.data(), ts.times.data() + ts.times.size());
  std::sort(stamps.begin(), stamps.end());
  stamps.erase(std::unique(stamps.begin(), stamps.end()), stamps.end());
  Eigen::VectorXd grid =
      Eigen::Map<const Eigen::VectorXd>(stamps.data(), static_cast<int>(stamps.size()));

  std::vector<TimeSeries> members;
  members.reserve(group.series.size());
  for (std::size_t p = 0; p < group.series.size(); ++p) {
    const auto& ts = group.series[p];
    if (ts.times[0] > grid[0] || ts.times[ts.length() - 1] < grid[grid.size() - 1])
      throw std::invalid_argument(
          "pathwise_expected_signature: series " + std::to_string(p) +
          " does not span the group's time range and cannot be aligned");
    members.push_back(resample_linear(ts, grid));
  }
  return {std::move(grid), std::move(members)};
}

}  // namespace

std::int64_t ses_feature_count(int dim, int inner_level, int outer_level, const SesOptions& opts) {
  const std::int64_t c =
      term_count(dim, inner_level) - 1 + (opts.outer_time_augment ? 1 : 0);
  if (c > (std::int64_t{1} << 30))
    throw std::invalid_argument("ses_features: pathwise-expected-signature channel count " +
                                std::to_string(c) + " is unusable");
  return term_count(static_cast<int>(c), outer_level);
}

TruncatedTensor expected_signature(const EmpiricalMeasure& group, int level) {
  if (group.series.empty()) throw std::invalid_argument("expected_signature: empty group");
  std::vector<TruncatedTensor> sigs;
  sigs.reserve(group.series.size());
  for (const auto& ts : group.series) sigs.push_back(signature(ts, level));
  return pairwise_mean(sigs);
}

TensorSeries pathwise_expected_signature(const EmpiricalMeasure& group, int level) {
  if (group.series.empty())
    throw std::invalid_argument("pathwise_expected_signature: empty group");
  auto [grid, members] = align_group(group);
  const int l = static_cast<int>(grid.size());
  const int d = group.dim();

  std::vector<TruncatedTensor> running(members.size(), TruncatedTensor::unit(d, level));
  TensorSeries out;
  out.times = grid;
  out.steps.reserve(static_cast<std::size_t>(l));
  out.steps.push_back(pairwise_mean(running));

  Eigen::VectorXd workspace;
  Eigen::VectorXd delta(d);
  for (int k = 1; k < l; ++k) {
    for (std::size_t p = 0; p < members.size(); ++p) {
      delta = (members[p].values.row(k) - members[p].values.row(k - 1)).transpose();
      if (!delta.isZero(0.0)) chen_step(running[p], delta, workspace);
    }
    out.steps.push_back(pairwise_mean(running));
  }
  return out;
}

FeatureVector ses_features(const EmpiricalMeasure& group, int inner_level, int outer_level,
                           const SesOptions& opts) {
  const TensorSeries pes = pathwise_expected_signature(group, inner_level);
  const int d = group.dim();
  const std::int64_t c = term_count(d, inner_level) - 1;  // level-0 channel dropped
  const std::int64_t feature_len = ses_feature_count(d, inner_level, outer_level, opts);
  if (feature_len > opts.feature_cap)
    throw std::invalid_argument("ses_features: feature count " + std::to_string(feature_len) +
                                " exceeds cap " + std::to_string(opts.feature_cap));

  const int l = static_cast<int>(pes.steps.size());
  Eigen::MatrixXd path(l, c);
  for (int k = 0; k < l; ++k) {
    path.row(k) = pes.steps[static_cast<std::size_t>(k)].coeffs().tail(c).transpose();
  }
  if (opts.rescale_levels) {
    const auto& shape = pes.steps.front();
    double factorial = 1.0;
    for (int lev = 1; lev <= inner_level; ++lev) {
      factorial *= lev;
      path.middleCols(shape.level_offset(lev) - 1, shape.level_size(lev)) *= factorial;
    }
  }

  TimeSeries outer_path(pes.times, std::move(path));
  if (opts.outer_time_augment) outer_path = time_augment(outer_path);

  FeatureVector fv;
  fv.coefficients = signature(outer_path, outer_level).coeffs();
  fv.inner_level = inner_level;
  fv.outer_level = outer_level;
  fv.raw_dim = d;
  return fv;
}

Eigen::MatrixXd ses_feature_matrix(const std::vector<EmpiricalMeasure>& groups, int inner_level,
                                   int outer_level, const SesOptions& opts) {
  if (groups.empty()) throw std::invalid_argument("ses_feature_matrix: no groups");
  const std::int64_t cols = ses_feature_count(groups.front().dim(), inner_level, outer_level, opts);
  if (cols > opts.feature_cap)
    throw std::invalid_argument("ses_feature_matrix: feature count " + std::to_string(cols) +
                                " exceeds cap " + std::to_string(opts.feature_cap));
  Eigen::MatrixXd out(static_cast<int>(groups.size()), cols);
  parallel_for(static_cast<std::int64_t>(groups.size()), [&](std::int64_t i) {
    out.row(static_cast<int>(i)) =
        ses_features(groups[static_cast<std::size_t>(i)], inner_level, outer_level, opts)
            .coefficients.transpose();
  });
  return out;
}

void save_feature_matrix_csv(const Eigen::MatrixXd& features, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write feature CSV: " + path);
  out << "group_id";
  for (int c = 0; c < features.cols(); ++c) out << ",f_" << c;
  out << "\n";
  char buf[40];
  for (int r = 0; r < features.rows(); ++r) {
    out << r;
    for (int c = 0; c < features.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", features(r, c));
      out << ',' << buf;
    }
    out << "\n";
  }
}

Eigen::MatrixXd load_feature_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty feature CSV: " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    bool first = true;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      if (!first) row.push_back(std::stod(line.substr(start, comma - start)));
      first = false;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("feature CSV has no rows: " + path);
  Eigen::MatrixXd out(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size())
      throw std::runtime_error("ragged feature CSV: " + path);
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      out(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
  }
  return out;
}

}  // namespace sigdr
