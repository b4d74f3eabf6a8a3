#include "sigdr/tensor.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace sigdr {

namespace {

void check_same_shape(const TruncatedTensor& a, const TruncatedTensor& b, const char* op) {
  if (a.dim() != b.dim() || a.level() != b.level()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch, (d=" +
                                std::to_string(a.dim()) + ",n=" + std::to_string(a.level()) +
                                ") vs (d=" + std::to_string(b.dim()) + ",n=" +
                                std::to_string(b.level()) + ")");
  }
}

// Fills out[0..level-1] with the blocks of exp(v) for levels 1..level:
// block j-1 holds v^{(x)j}/j! (d^j coefficients, contiguous).
void write_exp_blocks(const Eigen::Ref<const Eigen::VectorXd>& v, int level, Eigen::VectorXd& out) {
  const int d = static_cast<int>(v.size());
  const std::int64_t total = term_count(d, level) - 1;
  if (out.size() < total) out.resize(total);
  if (level < 1) return;
  out.head(d) = v;
  std::int64_t off = 0;
  std::int64_t prev_size = d;
  for (int j = 2; j <= level; ++j) {
    const std::int64_t cur = off + prev_size;
    // word (u, w): entry at cur + u*d + w = prev[u] * v[w] / j
    Eigen::Map<Eigen::MatrixXd> block(out.data() + cur, d, prev_size);
    Eigen::Map<const Eigen::VectorXd> prev(out.data() + off, prev_size);
    block.noalias() = (v / static_cast<double>(j)) * prev.transpose();
    off = cur;
    prev_size *= d;
  }
}

}  // namespace

std::int64_t term_count(int dim, int level) {
  if (dim < 1) throw std::invalid_argument("term_count: dim must be >= 1");
  if (level < 0) throw std::invalid_argument("term_count: level must be >= 0");
  std::int64_t total = 1;
  std::int64_t pow = 1;
  const std::int64_t cap = std::numeric_limits<std::int64_t>::max();
  for (int k = 1; k <= level; ++k) {
    if (pow > cap / dim) throw std::overflow_error("term_count: coefficient count overflows int64");
    pow *= dim;
    if (total > cap - pow) throw std::overflow_error("term_count: coefficient count overflows int64");
    total += pow;
  }
  return total;
}

TruncatedTensor::TruncatedTensor(int dim, int level) : dim_(dim), level_(level) {
  const std::int64_t total = term_count(dim, level);  // validates dim/level
  offsets_.resize(static_cast<std::size_t>(level) + 2);
  offsets_[0] = 0;
  std::int64_t pow = 1;
  for (int k = 0; k <= level; ++k) {
    offsets_[static_cast<std::size_t>(k) + 1] = offsets_[static_cast<std::size_t>(k)] + pow;
    pow *= dim;
  }
  coeffs_ = Eigen::VectorXd::Zero(total);
}

TruncatedTensor TruncatedTensor::unit(int dim, int level) {
  TruncatedTensor t(dim, level);
  t.coeffs_[0] = 1.0;
  return t;
}

double TruncatedTensor::coeff(std::initializer_list<int> word) const {
  const int k = static_cast<int>(word.size());
  if (k > level_) throw std::invalid_argument("coeff: word longer than truncation level");
  std::int64_t idx = 0;
  for (int letter : word) {
    if (letter < 0 || letter >= dim_) throw std::invalid_argument("coeff: letter out of range");
    idx = idx * dim_ + letter;
  }
  return coeffs_[level_offset(k) + idx];
}

TruncatedTensor& TruncatedTensor::operator+=(const TruncatedTensor& rhs) {
  check_same_shape(*this, rhs, "tensor add");
  coeffs_ += rhs.coeffs_;
  return *this;
}

TruncatedTensor& TruncatedTensor::operator-=(const TruncatedTensor& rhs) {
  check_same_shape(*this, rhs, "tensor subtract");
  coeffs_ -= rhs.coeffs_;
  return *this;
}

TruncatedTensor& TruncatedTensor::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

TruncatedTensor operator+(TruncatedTensor lhs, const TruncatedTensor& rhs) { return lhs += rhs; }
TruncatedTensor operator-(TruncatedTensor lhs, const TruncatedTensor& rhs) { return lhs -= rhs; }
TruncatedTensor operator*(TruncatedTensor t, double s) { return t *= s; }
TruncatedTensor operator*(double s, TruncatedTensor t) { return t *= s; }

TruncatedTensor tensor_mul(const TruncatedTensor& a, const TruncatedTensor& b) {
  check_same_shape(a, b, "tensor_mul");
  const int d = a.dim();
  const int n = a.level();
  TruncatedTensor c(d, n);
  for (int k = 0; k <= n; ++k) {
    auto ck = c.level_block(k);
    for (int i = 0; i <= k; ++i) {
      const int j = k - i;
      const auto ai = a.level_block(i);
      const auto bj = b.level_block(j);
      if (j == 0) {
        ck += ai * bj[0];
      } else if (i == 0) {
        ck += bj * ai[0];
      } else {
        // word (u in d^i, w in d^j) -> flat u*d^j + w: column-major map with
        // d^j rows makes entry (w, u) land exactly there.
        Eigen::Map<Eigen::MatrixXd> block(ck.data(), bj.size(), ai.size());
        block.noalias() += bj * ai.transpose();
      }
    }
  }
  return c;
}

TruncatedTensor tensor_exp(const Eigen::Ref<const Eigen::VectorXd>& v, int level) {
  if (!v.allFinite()) throw std::invalid_argument("tensor_exp: non-finite input");
  if (v.size() < 1) throw std::invalid_argument("tensor_exp: empty vector");
  TruncatedTensor t = TruncatedTensor::unit(static_cast<int>(v.size()), level);
  if (level >= 1) {
    Eigen::VectorXd blocks;
    write_exp_blocks(v, level, blocks);
    t.coeffs().tail(t.size() - 1) = blocks.head(t.size() - 1);
  }
  return t;
}

double inner(const TruncatedTensor& a, const TruncatedTensor& b) {
  check_same_shape(a, b, "inner");
  return a.coeffs().dot(b.coeffs());
}

void chen_step(TruncatedTensor& sig, const Eigen::Ref<const Eigen::VectorXd>& v,
               Eigen::VectorXd& workspace) {
  const int d = sig.dim();
  const int n = sig.level();
  if (v.size() != d) throw std::invalid_argument("chen_step: increment dimension mismatch");
  if (!v.allFinite()) throw std::invalid_argument("chen_step: non-finite increment");
  if (n < 1) return;  // level 0 is fixed by exp(v)_0 = 1
  write_exp_blocks(v, n, workspace);

  // C_k = S_k + sum_{j=1..k} S_{k-j} (x) v^{(x)j}/j!. Updating levels from
  // the top down lets C_k overwrite S_k while lower levels are still the
  // original factors.
  for (int k = n; k >= 1; --k) {
    auto ck = sig.level_block(k);
    std::int64_t eoff = 0;
    std::int64_t esize = d;
    for (int j = 1; j <= k; ++j) {
      const int i = k - j;
      Eigen::Map<const Eigen::VectorXd> ej(workspace.data() + eoff, esize);
      const auto si = sig.level_block(i);
      if (i == 0) {
        ck += ej * si[0];
      } else {
        Eigen::Map<Eigen::MatrixXd> block(ck.data(), ej.size(), si.size());
        block.noalias() += ej * si.transpose();
      }
      eoff += esize;
      esize *= d;
    }
  }
}

TruncatedTensor pairwise_mean(const std::vector<TruncatedTensor>& items) {
  if (items.empty()) throw std::invalid_argument("pairwise_mean: empty input");
  // Adjacent pairing over the fixed input order, repeated until one term
  // remains.
  std::vector<TruncatedTensor> acc(items);
  std::size_t m = acc.size();
  while (m > 1) {
    std::size_t out = 0;
    std::size_t i = 0;
    for (; i + 1 < m; i += 2, ++out) {
      if (out != i) acc[out] = acc[i];
      acc[out] += acc[i + 1];
    }
    if (i < m) {
      if (out != i) acc[out] = std::move(acc[i]);
      ++out;
    }
    m = out;
  }
  acc[0] *= 1.0 / static_cast<double>(items.size());
  return acc[0];
}

}  // namespace sigdr
