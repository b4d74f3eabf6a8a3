#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace sigdr {

// Number of coefficients of T^{<=level}(R^dim), i.e. sum_{k<=level} dim^k.
// Throws std::overflow_error if the count does not fit in int64.
std::int64_t term_count(int dim, int level);

// Element of the truncated tensor algebra T^{<=n}(R^d). Coefficients are
// stored densely, one contiguous block per tensor level; the level-k block
// holds the d^k coefficients in lexicographic word order, so the word
// (i_1,...,i_k) lives at flat index i_1*d^{k-1} + ... + i_k (0-based
// letters). Level 0 is stored explicitly so the space is closed under
// linear combinations.
class TruncatedTensor {
 public:
  TruncatedTensor(int dim, int level);  // zero tensor

  static TruncatedTensor unit(int dim, int level);  // (1, 0, 0, ...)

  int dim() const { return dim_; }
  int level() const { return level_; }
  std::int64_t size() const { return coeffs_.size(); }

  Eigen::VectorXd& coeffs() { return coeffs_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }

  std::int64_t level_offset(int k) const { return offsets_[static_cast<std::size_t>(k)]; }
  std::int64_t level_size(int k) const {
    return offsets_[static_cast<std::size_t>(k) + 1] - offsets_[static_cast<std::size_t>(k)];
  }
  Eigen::VectorBlock<Eigen::VectorXd> level_block(int k) {
    return coeffs_.segment(level_offset(k), level_size(k));
  }
  Eigen::VectorBlock<const Eigen::VectorXd> level_block(int k) const {
    return coeffs_.segment(level_offset(k), level_size(k));
  }

  // Coefficient addressed by a word of 0-based letters; {} is level 0.
  double coeff(std::initializer_list<int> word) const;

  TruncatedTensor& operator+=(const TruncatedTensor& rhs);
  TruncatedTensor& operator-=(const TruncatedTensor& rhs);
  TruncatedTensor& operator*=(double s);

 private:
  int dim_;
  int level_;
  std::vector<std::int64_t> offsets_;  // level+2 entries, offsets_[k] = start of level k
  Eigen::VectorXd coeffs_;
};

TruncatedTensor operator+(TruncatedTensor lhs, const TruncatedTensor& rhs);
TruncatedTensor operator-(TruncatedTensor lhs, const TruncatedTensor& rhs);
TruncatedTensor operator*(TruncatedTensor t, double s);
TruncatedTensor operator*(double s, TruncatedTensor t);

// Truncated tensor product: C_k = sum_{i+j=k} A_i (x) B_j, levels above the
// common truncation discarded. Dimension or level mismatch throws.
TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b);

// Tensor exponential (1, v, v^{(x)2}/2!, ..., v^{(x)n}/n!). Non-finite
// entries throw.
TruncatedTensor tensor_exp(const Eigen::Ref<const Eigen::VectorXd>& v, int level);

// Inner product of T^{<=n}(R^d): sum over levels of the Euclidean dot
// product of the coefficient blocks.
double inner(const TruncatedTensor& a, const TruncatedTensor& b);

// In-place Chen step sig <- sig (x) exp(v). workspace is resized as needed
// and holds the running powers v^{(x)j}/j!; reusing it across steps avoids
// reallocation in signature streams. Equivalent to
// tensor_mul(sig, tensor_exp(v, sig.level())).
void chen_step(TruncatedTensor& sig, const Eigen::Ref<const Eigen::VectorXd>& v,
               Eigen::VectorXd& workspace);

// Mean of a sequence of same-shape tensors, accumulated pairwise in the
// given fixed order.
TruncatedTensor pairwise_mean(const std::vector<TruncatedTensor>& items);

}  // namespace sigdr
