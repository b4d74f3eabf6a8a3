#include "sigdr/sigkernel.hpp"

#include "sigdr/errors.hpp"
#include "sigdr/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sigdr {

namespace {

Eigen::MatrixXd increments(const TimeSeries& ts) {
  const int l = ts.length();
  return ts.values.bottomRows(l - 1) - ts.values.topRows(l - 1);
}

// Core scheme on precomputed increment rows. Memory is two rolling grid
// rows plus one row of increment dot products, refreshed per data interval
// so the working set stays cache-resident for long series.
double pde_solve_increments(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                            int refinement) {
  const int f = 1 << refinement;
  const double inv_ff = 1.0 / (static_cast<double>(f) * static_cast<double>(f));

  const std::int64_t rows = static_cast<std::int64_t>(f) * dx.rows();
  const std::int64_t cols = static_cast<std::int64_t>(f) * dy.rows();
  Eigen::VectorXd prev = Eigen::VectorXd::Ones(cols + 1);
  Eigen::VectorXd cur(cols + 1);
  Eigen::VectorXd dot_row(dy.rows());
  Eigen::VectorXd coef(cols);

  int last_a = -1;
  for (std::int64_t i = 0; i < rows; ++i) {
    const int a = static_cast<int>(i / f);
    if (a != last_a) {
      dot_row.noalias() = dy * dx.row(a).transpose() * inv_ff;
      for (std::int64_t j = 0; j < cols; ++j) coef[j] = dot_row[static_cast<int>(j / f)];
      last_a = a;
    }
    cur[0] = 1.0;
    double left = 1.0;  // cur[j]
    for (std::int64_t j = 0; j < cols; ++j) {
      left = prev[j + 1] + left + (coef[j] - 1.0) * prev[j];
      cur[j + 1] = left;
    }
    prev.swap(cur);
  }
  return prev[cols];
}

// Mean of a kernel block, summed in both traversal orders and averaged so
// the result is bitwise invariant under transposition (mmd_sq(a,b) must
// equal mmd_sq(b,a) exactly).
double block_mean(const Eigen::MatrixXd& k) {
  double row_major = 0.0, col_major = 0.0;
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    for (Eigen::Index j = 0; j < k.cols(); ++j) row_major += k(i, j);
  for (Eigen::Index j = 0; j < k.cols(); ++j)
    for (Eigen::Index i = 0; i < k.rows(); ++i) col_major += k(i, j);
  return 0.5 * (row_major + col_major) / static_cast<double>(k.size());
}

// Mean of the pairwise kernel evaluations within one group (all N^2 ordered
// pairs; the matrix is symmetric so only the upper triangle is solved).
double within_group_mean(const std::vector<Eigen::MatrixXd>& incs, int refinement) {
  const int n = static_cast<int>(incs.size());
  Eigen::MatrixXd k(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = p; q < n; ++q) {
      k(p, q) = pde_solve_increments(incs[static_cast<std::size_t>(p)],
                                     incs[static_cast<std::size_t>(q)], refinement);
      k(q, p) = k(p, q);
    }
  }
  return block_mean(k);
}

double cross_group_mean(const std::vector<Eigen::MatrixXd>& a,
                        const std::vector<Eigen::MatrixXd>& b, int refinement) {
  Eigen::MatrixXd k(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (std::size_t p = 0; p < a.size(); ++p) {
    for (std::size_t q = 0; q < b.size(); ++q) {
      k(static_cast<int>(p), static_cast<int>(q)) = pde_solve_increments(a[p], b[q], refinement);
    }
  }
  return block_mean(k);
}

std::vector<std::vector<Eigen::MatrixXd>> group_increments(
    const std::vector<EmpiricalMeasure>& groups) {
  std::vector<std::vector<Eigen::MatrixXd>> incs(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    incs[i].reserve(groups[i].series.size());
    for (const auto& ts : groups[i].series) incs[i].push_back(increments(ts));
  }
  return incs;
}

void check_uniform_dim(const std::vector<EmpiricalMeasure>& groups, const char* op) {
  if (groups.empty()) throw std::invalid_argument(std::string(op) + ": no groups");
  const int d = groups.front().dim();
  for (const auto& g : groups) {
    if (g.dim() != d) throw std::invalid_argument(std::string(op) + ": group dimension mismatch");
  }
}

}  // namespace

double pde_solve(const TimeSeries& x, const TimeSeries& y, int refinement) {
  if (x.dim() != y.dim()) throw std::invalid_argument("pde_solve: dimension mismatch");
  if (refinement < 0) throw std::invalid_argument("pde_solve: refinement must be >= 0");
  return pde_solve_increments(increments(x), increments(y), refinement);
}

double mmd_sq(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int refinement) {
  if (a.dim() != b.dim()) throw std::invalid_argument("mmd_sq: dimension mismatch");
  std::vector<Eigen::MatrixXd> ia, ib;
  for (const auto& ts : a.series) ia.push_back(increments(ts));
  for (const auto& ts : b.series) ib.push_back(increments(ts));
  const double e_aa = within_group_mean(ia, refinement);
  const double e_bb = within_group_mean(ib, refinement);
  const double e_ab = cross_group_mean(ia, ib, refinement);
  return e_aa + e_bb - 2.0 * e_ab;
}

GramMatrix mmd_gram(const std::vector<EmpiricalMeasure>& groups, int refinement) {
  check_uniform_dim(groups, "mmd_gram");
  const int m = static_cast<int>(groups.size());
  const auto incs = group_increments(groups);

  Eigen::VectorXd within(m);
  parallel_for(m, [&](std::int64_t i) {
    within[static_cast<int>(i)] = within_group_mean(incs[static_cast<std::size_t>(i)], refinement);
  });

  // Strictly-upper pairs as flat work units.
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) pairs.emplace_back(i, j);

  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(m, m);
  parallel_for(static_cast<std::int64_t>(pairs.size()), [&](std::int64_t p) {
    const auto [i, j] = pairs[static_cast<std::size_t>(p)];
    cross(i, j) = cross_group_mean(incs[static_cast<std::size_t>(i)],
                                   incs[static_cast<std::size_t>(j)], refinement);
  });

  GramMatrix gram;
  gram.kind = GramKind::mmd_sq;
  gram.refinement = refinement;
  gram.entries = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const double v = within[i] + within[j] - 2.0 * cross(i, j);
      gram.entries(i, j) = v;
      gram.entries(j, i) = v;
    }
  }
  return gram;
}

Eigen::MatrixXd mmd_cross(const std::vector<EmpiricalMeasure>& rows,
                          const std::vector<EmpiricalMeasure>& cols, int refinement) {
  check_uniform_dim(rows, "mmd_cross");
  check_uniform_dim(cols, "mmd_cross");
  if (rows.front().dim() != cols.front().dim())
    throw std::invalid_argument("mmd_cross: dimension mismatch between sides");
  const auto ir = group_increments(rows);
  const auto ic = group_increments(cols);

  Eigen::VectorXd wr(static_cast<int>(rows.size())), wc(static_cast<int>(cols.size()));
  parallel_for(static_cast<std::int64_t>(rows.size()), [&](std::int64_t i) {
    wr[static_cast<int>(i)] = within_group_mean(ir[static_cast<std::size_t>(i)], refinement);
  });
  parallel_for(static_cast<std::int64_t>(cols.size()), [&](std::int64_t j) {
    wc[static_cast<int>(j)] = within_group_mean(ic[static_cast<std::size_t>(j)], refinement);
  });

  Eigen::MatrixXd out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  parallel_for(static_cast<std::int64_t>(rows.size() * cols.size()), [&](std::int64_t p) {
    const int i = static_cast<int>(p / static_cast<std::int64_t>(cols.size()));
    const int j = static_cast<int>(p % static_cast<std::int64_t>(cols.size()));
    out(i, j) = wr[i] + wc[j] -
                2.0 * cross_group_mean(ir[static_cast<std::size_t>(i)],
                                       ic[static_cast<std::size_t>(j)], refinement);
  });
  return out;
}

GramMatrix kes_gram(const GramMatrix& mmd, double sigma) {
  if (mmd.kind != GramKind::mmd_sq)
    throw std::invalid_argument("kes_gram: expected a squared-MMD matrix");
  if (!(sigma > 0.0)) throw std::invalid_argument("kes_gram: sigma must be positive");
  const int m = static_cast<int>(mmd.entries.rows());
  GramMatrix gram;
  gram.kind = GramKind::kernel;
  gram.sigma = sigma;
  gram.refinement = mmd.refinement;
  gram.entries.resize(m, m);
  const double s2 = sigma * sigma;
  for (int i = 0; i < m; ++i) {
    gram.entries(i, i) = 1.0;
    for (int j = i + 1; j < m; ++j) {
      double v = mmd.entries(i, j);
      if (v < -1e-6)
        throw NumericalError("kes_gram: squared MMD " + std::to_string(v) + " for pair (" +
                             std::to_string(i) + "," + std::to_string(j) +
                             ") is negative beyond tolerance");
      if (v < 0.0) v = 0.0;
      const double k = std::exp(-s2 * v);
      gram.entries(i, j) = k;
      gram.entries(j, i) = k;
    }
  }
  return gram;
}

GramMatrix kes_gram(const std::vector<EmpiricalMeasure>& groups, double sigma, int refinement) {
  return kes_gram(mmd_gram(groups, refinement), sigma);
}

void save_gram_csv(const GramMatrix& gram, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write Gram CSV: " + path);
  char buf[40];
  out << (gram.kind == GramKind::kernel ? "kernel" : "mmd_sq") << ',';
  std::snprintf(buf, sizeof(buf), "%.17g", gram.sigma);
  out << buf << ',' << gram.refinement << ',' << gram.entries.rows() << "\n";
  for (int i = 0; i < gram.entries.rows(); ++i) {
    for (int j = 0; j < gram.entries.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", gram.entries(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

GramMatrix load_gram_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open Gram CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty Gram CSV: " + path);
  std::istringstream header(line);
  std::string kind, sigma_s, refinement_s, size_s;
  if (!std::getline(header, kind, ',') || !std::getline(header, sigma_s, ',') ||
      !std::getline(header, refinement_s, ',') || !std::getline(header, size_s))
    throw std::runtime_error("bad Gram CSV header: " + path);
  GramMatrix gram;
  if (kind == "kernel")
    gram.kind = GramKind::kernel;
  else if (kind == "mmd_sq")
    gram.kind = GramKind::mmd_sq;
  else
    throw std::runtime_error("bad Gram kind '" + kind + "' in " + path);
  gram.sigma = std::stod(sigma_s);
  gram.refinement = std::stoi(refinement_s);
  const int m = std::stoi(size_s);
  gram.entries.resize(m, m);
  for (int i = 0; i < m; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("truncated Gram CSV: " + path);
    std::istringstream row(line);
    std::string cell;
    for (int j = 0; j < m; ++j) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("short Gram row in " + path);
      gram.entries(i, j) = std::stod(cell);
    }
  }
  return gram;
}

}  // namespace sigdr
