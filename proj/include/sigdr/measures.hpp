#pragma once

#include "sigdr/streams.hpp"
#include "sigdr/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sigdr {

// The pathwise expected signature sampled on a group's common time grid;
// step 0 is the unit tensor.
struct TensorSeries {
  std::vector<TruncatedTensor> steps;
  Eigen::VectorXd times;  // the common grid the steps live on
};

struct FeatureVector {
  Eigen::VectorXd coefficients;
  int inner_level = 0;  // truncation of the pathwise expected signature
  int outer_level = 0;  // truncation of the outer signature
  int raw_dim = 0;      // dimension of the underlying series
};

struct SesOptions {
  // Rescale the level-k channels of the pathwise expected signature by k!
  // to counteract factorial decay before the outer signature.
  bool rescale_levels = false;
  // Time-augment the tensor-valued path before the outer signature.
  bool outer_time_augment = false;
  // Hard cap on the outer feature count; exceeding it is an error.
  std::int64_t feature_cap = 1000000;
};

// Length of the ses_features output for a given raw dimension and levels.
std::int64_t ses_feature_count(int dim, int inner_level, int outer_level,
                               const SesOptions& opts = {});

// Arithmetic mean over member series of signature(., level), accumulated in
// member order with pairwise summation.
TruncatedTensor expected_signature(const EmpiricalMeasure& group, int level);

// Pathwise expected signature (running mean of prefix signatures). Members
// on unequal grids are first linearly resampled onto the union of observed
// timestamps within the group; a member whose time range does not cover the
// union is reported by index.
TensorSeries pathwise_expected_signature(const EmpiricalMeasure& group, int level);

// Signature-of-the-pathwise-expected-signature features: the PES at
// inner_level is flattened (constant level-0 coordinate dropped), treated
// as a path in R^c with c = term_count(d, inner_level) - 1, and its
// signature at outer_level is returned.
FeatureVector ses_features(const EmpiricalMeasure& group, int inner_level, int outer_level,
                           const SesOptions& opts = {});

// One row of ses_features per group, computed in parallel.
Eigen::MatrixXd ses_feature_matrix(const std::vector<EmpiricalMeasure>& groups, int inner_level,
                                   int outer_level, const SesOptions& opts = {});

// Feature matrix CSV: header group_id,f_0,..., one row per group.
void save_feature_matrix_csv(const Eigen::MatrixXd& features, const std::string& path);
Eigen::MatrixXd load_feature_matrix_csv(const std::string& path);

}  // namespace sigdr
