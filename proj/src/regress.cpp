#include "sigdr/regress.hpp"

#include "sigdr/errors.hpp"
#include "sigdr/rng.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <stdexcept>

namespace sigdr {

std::string method_name(Method m) {
  switch (m) {
    case Method::ses: return "ses";
    case Method::kes: return "kes";
    case Method::dr_rbf: return "dr-rbf";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "ses") return Method::ses;
  if (name == "kes") return Method::kes;
  if (name == "dr-rbf" || name == "dr_rbf") return Method::dr_rbf;
  throw std::invalid_argument("unknown method '" + name + "' (expected ses, kes or dr-rbf)");
}

// ---------------------------------------------------------------------------
// KRR

KrrModel krr_fit(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double alpha) {
  const int m = static_cast<int>(gram.rows());
  if (gram.cols() != m) throw std::invalid_argument("krr_fit: Gram matrix must be square");
  if (y.size() != m) throw std::invalid_argument("krr_fit: label count mismatch");
  if (!(alpha > 0.0)) throw std::invalid_argument("krr_fit: alpha must be positive");

  const Eigen::MatrixXd a = gram + alpha * Eigen::MatrixXd::Identity(m, m);
  const double trace_scale = gram.trace() / static_cast<double>(m);
  const double resid_tol = 1e-10 * std::max(1.0, y.norm());

  double jitter = 1e-10 * trace_scale;
  const double max_jitter = 1e-4 * trace_scale;
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(a + jitter * Eigen::MatrixXd::Identity(m, m));
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd w = llt.solve(y);
      // Refine against the unjittered system so the dual weights solve
      // (G + alpha I) w = y to well below the contract tolerance.
      for (int it = 0; it < 6; ++it) {
        Eigen::VectorXd r = y - a * w;
        if (r.norm() <= resid_tol) break;
        w += llt.solve(r);
      }
      if ((y - a * w).norm() <= 1e-8 * std::max(1.0, y.norm())) {
        KrrModel model;
        model.dual_weights = std::move(w);
        model.alpha = alpha;
        model.jitter = jitter;
        return model;
      }
    }
    if (jitter >= max_jitter) break;
    jitter *= 10.0;
  }
  throw NumericalError("krr_fit: factorization failed up to the maximum jitter");
}

double krr_predict(const KrrModel& model, const Eigen::Ref<const Eigen::VectorXd>& k_star) {
  if (k_star.size() != model.dual_weights.size())
    throw std::invalid_argument("krr_predict: kernel vector length mismatch");
  return k_star.dot(model.dual_weights) + model.label_offset;
}

Eigen::VectorXd krr_predict_rows(const KrrModel& model, const Eigen::MatrixXd& k_star_rows) {
  if (k_star_rows.cols() != model.dual_weights.size())
    throw std::invalid_argument("krr_predict: kernel row length mismatch");
  Eigen::VectorXd out = k_star_rows * model.dual_weights;
  out.array() += model.label_offset;
  return out;
}

// ---------------------------------------------------------------------------
// Lasso

namespace {
double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}
}  // namespace

LassoModel lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                     int max_sweeps, double tol, std::vector<double>* objective_trace) {
  const int m = static_cast<int>(x.rows());
  const int f = static_cast<int>(x.cols());
  if (y.size() != m) throw std::invalid_argument("lasso_fit: label count mismatch");
  if (alpha < 0.0) throw std::invalid_argument("lasso_fit: alpha must be >= 0");
  const double inv_m = 1.0 / static_cast<double>(m);

  Eigen::VectorXd col_ms(f);  // (1/M) x_j . x_j
  for (int j = 0; j < f; ++j) col_ms[j] = x.col(j).squaredNorm() * inv_m;

  LassoModel model;
  model.alpha = alpha;
  model.weights = Eigen::VectorXd::Zero(f);
  model.intercept = y.mean();
  Eigen::VectorXd r = (y.array() - model.intercept).matrix();

  bool converged = false;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int j = 0; j < f; ++j) {
      if (col_ms[j] == 0.0) continue;  // constant column; the intercept owns it
      const double rho = x.col(j).dot(r) * inv_m + col_ms[j] * model.weights[j];
      const double w_new = soft_threshold(rho, alpha) / col_ms[j];
      const double delta = w_new - model.weights[j];
      if (delta != 0.0) {
        r -= delta * x.col(j);
        model.weights[j] = w_new;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    const double b_shift = r.mean();
    if (b_shift != 0.0) {
      model.intercept += b_shift;
      r.array() -= b_shift;
      max_delta = std::max(max_delta, std::abs(b_shift));
    }
    if (objective_trace)
      objective_trace->push_back(0.5 * inv_m * r.squaredNorm() +
                                 alpha * model.weights.lpNorm<1>());
    if (max_delta < tol) {
      converged = true;
      ++sweep;
      break;
    }
  }
  model.sweeps = sweep;
  model.converged = converged;
  return model;
}

Eigen::VectorXd lasso_predict(const LassoModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.weights.size())
    throw std::invalid_argument("lasso_predict: feature count mismatch");
  return (x * model.weights).array() + model.intercept;
}

// ---------------------------------------------------------------------------
// Metrics

double mean_squared_error(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0)
    throw std::invalid_argument("mean_squared_error: length mismatch or empty");
  return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
}

double mean_absolute_percentage_error(const Eigen::VectorXd& y_true,
                                      const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0)
    throw std::invalid_argument("mape: length mismatch or empty");
  double acc = 0.0;
  for (int i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 0.0)
      throw std::invalid_argument("mape: zero true value at index " + std::to_string(i));
    acc += std::abs((y_true[i] - y_pred[i]) / y_true[i]);
  }
  return 100.0 * acc / static_cast<double>(y_true.size());
}

Metrics compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  return {mean_squared_error(y_true, y_pred),
          mean_absolute_percentage_error(y_true, y_pred)};
}

// ---------------------------------------------------------------------------
// DR-RBF baseline

namespace {

// Stacked representation: dimension-major d*l vector, padded by repeating
// the last sample, truncated past l.
Eigen::VectorXd stack_series(const TimeSeries& ts, int stack_length) {
  const int d = ts.dim();
  const int l = ts.length();
  Eigen::VectorXd out(static_cast<std::int64_t>(d) * stack_length);
  for (int c = 0; c < d; ++c) {
    for (int i = 0; i < stack_length; ++i) {
      out[static_cast<std::int64_t>(c) * stack_length + i] = ts.values(std::min(i, l - 1), c);
    }
  }
  return out;
}

// Squared distances between all stacked series, plus the group boundaries.
struct StackedDistances {
  Eigen::MatrixXd sq;          // (sum N_i) x (sum N_i)
  std::vector<int> offsets;    // group i occupies [offsets[i], offsets[i+1])
};

StackedDistances stacked_sq_distances(const std::vector<EmpiricalMeasure>& groups,
                                      int stack_length) {
  int total = 0;
  StackedDistances out;
  out.offsets.push_back(0);
  for (const auto& g : groups) {
    total += g.size();
    out.offsets.push_back(total);
  }
  const int d = groups.front().dim();
  Eigen::MatrixXd all(total, static_cast<std::int64_t>(d) * stack_length);
  int row = 0;
  for (const auto& g : groups)
    for (const auto& ts : g.series) all.row(row++) = stack_series(ts, stack_length).transpose();

  const Eigen::VectorXd norms = all.rowwise().squaredNorm();
  out.sq.noalias() = -2.0 * (all * all.transpose());
  out.sq.colwise() += norms;
  out.sq.rowwise() += norms.transpose();
  out.sq = out.sq.cwiseMax(0.0);
  return out;
}

Eigen::MatrixXd embedding_distances_from(const StackedDistances& sd, double l1,
                                         int group_count) {
  const double gamma2 = 1.0 / (2.0 * l1 * l1);
  const Eigen::MatrixXd k1 = (-gamma2 * sd.sq).array().exp().matrix();
  Eigen::VectorXd within(group_count);
  for (int i = 0; i < group_count; ++i) {
    const int b = sd.offsets[static_cast<std::size_t>(i)];
    const int n = sd.offsets[static_cast<std::size_t>(i) + 1] - b;
    within[i] = k1.block(b, b, n, n).mean();
  }
  Eigen::MatrixXd dists = Eigen::MatrixXd::Zero(group_count, group_count);
  for (int i = 0; i < group_count; ++i) {
    const int bi = sd.offsets[static_cast<std::size_t>(i)];
    const int ni = sd.offsets[static_cast<std::size_t>(i) + 1] - bi;
    for (int j = i + 1; j < group_count; ++j) {
      const int bj = sd.offsets[static_cast<std::size_t>(j)];
      const int nj = sd.offsets[static_cast<std::size_t>(j) + 1] - bj;
      const double c = k1.block(bi, bj, ni, nj).mean();
      const double v = within[i] + within[j] - 2.0 * c;
      dists(i, j) = v;
      dists(j, i) = v;
    }
  }
  return dists;
}

int max_series_length(const std::vector<EmpiricalMeasure>& groups) {
  int l = 0;
  for (const auto& g : groups)
    for (const auto& ts : g.series) l = std::max(l, ts.length());
  return l;
}

}  // namespace

Eigen::MatrixXd rbf_embedding_sq_distances(const std::vector<EmpiricalMeasure>& groups, double l1,
                                           int stack_length) {
  if (groups.empty()) throw std::invalid_argument("rbf_embedding_sq_distances: no groups");
  if (!(l1 > 0.0)) throw std::invalid_argument("rbf_embedding_sq_distances: l1 must be positive");
  const auto sd = stacked_sq_distances(groups, stack_length);
  return embedding_distances_from(sd, l1, static_cast<int>(groups.size()));
}

GramMatrix baseline_rbf_gram_from_distances(const Eigen::MatrixXd& sq_dists, double l2) {
  if (!(l2 > 0.0)) throw std::invalid_argument("baseline_rbf_gram: l2 must be positive");
  GramMatrix gram;
  gram.kind = GramKind::kernel;
  gram.sigma = std::sqrt(1.0 / (2.0 * l2 * l2));
  gram.entries = (-(1.0 / (2.0 * l2 * l2)) * sq_dists.cwiseMax(0.0)).array().exp().matrix();
  gram.entries.diagonal().setOnes();
  return gram;
}

GramMatrix baseline_rbf_gram(const std::vector<EmpiricalMeasure>& groups, double l1, double l2) {
  return baseline_rbf_gram_from_distances(
      rbf_embedding_sq_distances(groups, l1, max_series_length(groups)), l2);
}

// ---------------------------------------------------------------------------
// Grids, folds, fingerprints

HyperGrid HyperGrid::defaults(Method m) {
  auto logspace = [](int lo, int hi) {
    std::vector<double> v;
    for (int e = lo; e <= hi; ++e) v.push_back(std::pow(10.0, e));
    return v;
  };
  HyperGrid g;
  switch (m) {
    case Method::kes:
      g.l2 = logspace(-3, 3);
      g.alpha = logspace(-3, 3);
      break;
    case Method::ses:
      g.alpha = logspace(-5, 5);
      g.inner_level = {2, 3};
      g.outer_level = {2};
      break;
    case Method::dr_rbf:
      g.l1 = logspace(-3, 3);
      g.l2 = logspace(-3, 3);
      g.alpha = logspace(-3, 3);
      break;
  }
  return g;
}

std::vector<int> fold_assignment(int m, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("fold_assignment: need at least 2 folds");
  if (folds > m) throw std::invalid_argument("fold_assignment: more folds than items");
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  auto rng = derive_rng(seed, 0x666f6c64ULL);
  auto bounded = [&rng](std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v;
    do {
      v = rng();
    } while (v >= limit);
    return v % n;
  };
  for (int i = m - 1; i > 0; --i) {
    const auto j = static_cast<int>(bounded(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) fold_of[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = i % folds;
  return fold_of;
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

void hash_double(std::uint64_t& h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int s = 0; s < 64; s += 8) {
    h ^= (bits >> s) & 0xff;
    h *= 1099511628211ULL;
  }
}

std::uint64_t dataset_fingerprint(const Dataset& ds) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int i = 0; i < ds.labels.size(); ++i) hash_double(h, ds.labels[i]);
  for (const auto& g : ds.groups) {
    for (const auto& ts : g.series) {
      for (int i = 0; i < ts.times.size(); ++i) hash_double(h, ts.times[i]);
      for (int i = 0; i < ts.values.rows(); ++i)
        for (int c = 0; c < ts.values.cols(); ++c) hash_double(h, ts.values(i, c));
    }
  }
  return h;
}

bool prefer_on_tie(const HyperParams& cand, const HyperParams& best) {
  if (cand.alpha != best.alpha) return cand.alpha > best.alpha;
  if (cand.l2 != best.l2) return cand.l2 > best.l2;
  if (cand.l1 != best.l1) return cand.l1 > best.l1;
  if (cand.inner_level != best.inner_level) return cand.inner_level < best.inner_level;
  return cand.outer_level < best.outer_level;
}

double sigma_from_lengthscale(double l2) {
  if (!(l2 > 0.0)) throw std::invalid_argument("lengthscale must be positive");
  return std::sqrt(1.0 / (2.0 * l2 * l2));
}

// Column treatment ahead of the Lasso: centering only. Rescaling every
// column to unit variance re-inflates near-constant noise coordinates and
// makes spurious interpolants cheap in the L1 norm, which measurably
// destroys the sparse structure on the synthetic tasks; the raw signature
// scales are kept so low-information columns stay expensive to select.
void center_columns(const Eigen::MatrixXd& x, const std::vector<int>& rows,
                    Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
  const int f = static_cast<int>(x.cols());
  mean = Eigen::VectorXd::Zero(f);
  for (int r : rows) mean += x.row(r).transpose();
  mean /= static_cast<double>(rows.size());
  scale = Eigen::VectorXd::Ones(f);
}

Eigen::MatrixXd apply_column_scaling(const Eigen::MatrixXd& x, const std::vector<int>& rows,
                                     const Eigen::VectorXd& mean, const Eigen::VectorXd& scale) {
  Eigen::MatrixXd out(static_cast<int>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<int>(i)) =
        ((x.row(rows[i]).transpose() - mean).array() / scale.array()).transpose();
  return out;
}

std::vector<int> all_rows(int m) {
  std::vector<int> rows(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// DistributionRegressor

DistributionRegressor::DistributionRegressor(Dataset train, RegressorConfig config)
    : raw_train_(std::move(train)), config_(config) {
  if (raw_train_.size() < 2)
    throw std::invalid_argument("DistributionRegressor: need at least 2 training groups");
  if (config_.prep.standardize) scaler_ = ChannelScaler::fit(raw_train_.groups);
  train_groups_ = preprocess(raw_train_.groups);
  y_ = raw_train_.labels;
  stack_length_ = max_series_length(train_groups_);
}

std::vector<EmpiricalMeasure> DistributionRegressor::preprocess(
    const std::vector<EmpiricalMeasure>& raw) const {
  std::vector<EmpiricalMeasure> out;
  out.reserve(raw.size());
  for (const auto& g : raw) {
    std::vector<TimeSeries> members;
    members.reserve(g.series.size());
    for (const auto& ts : g.series) {
      TimeSeries cur = scaler_ ? scaler_->apply(ts) : ts;
      if (config_.prep.lead_lag) cur = lead_lag(cur);
      if (config_.prep.time_augment) cur = time_augment(cur);
      members.push_back(std::move(cur));
    }
    out.emplace_back(std::move(members));
  }
  return out;
}

const Eigen::MatrixXd& DistributionRegressor::train_mmd() {
  if (!mmd_) mmd_ = mmd_gram(train_groups_, config_.refinement).entries;
  return *mmd_;
}

const Eigen::MatrixXd& DistributionRegressor::train_features(int inner_level, int outer_level) {
  const auto key = std::make_pair(inner_level, outer_level);
  auto it = features_.find(key);
  if (it == features_.end()) {
    it = features_
             .emplace(key, ses_feature_matrix(train_groups_, inner_level, outer_level, config_.ses))
             .first;
  }
  return it->second;
}

const Eigen::MatrixXd& DistributionRegressor::train_rbf_distances(double l1) {
  auto it = rbf_dists_.find(l1);
  if (it == rbf_dists_.end()) {
    it = rbf_dists_
             .emplace(l1, rbf_embedding_sq_distances(train_groups_, l1, stack_length_))
             .first;
  }
  return it->second;
}

double DistributionRegressor::cv_score_kernel(const Eigen::MatrixXd& kernel, double alpha) const {
  const int m = static_cast<int>(kernel.rows());
  double pooled = 0.0;
  for (int f = 0; f < config_.folds; ++f) {
    std::vector<int> tr, va;
    for (int i = 0; i < m; ++i) (fold_of_[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
    if (va.empty() || tr.empty()) continue;
    Eigen::MatrixXd g_tt(static_cast<int>(tr.size()), static_cast<int>(tr.size()));
    for (std::size_t a = 0; a < tr.size(); ++a)
      for (std::size_t b = 0; b < tr.size(); ++b)
        g_tt(static_cast<int>(a), static_cast<int>(b)) = kernel(tr[a], tr[b]);
    Eigen::VectorXd y_tr(static_cast<int>(tr.size()));
    for (std::size_t a = 0; a < tr.size(); ++a) y_tr[static_cast<int>(a)] = y_[tr[a]];
    const double offset = y_tr.mean();
    KrrModel model = krr_fit(g_tt, (y_tr.array() - offset).matrix(), alpha);
    model.label_offset = offset;
    Eigen::MatrixXd g_vt(static_cast<int>(va.size()), static_cast<int>(tr.size()));
    for (std::size_t a = 0; a < va.size(); ++a)
      for (std::size_t b = 0; b < tr.size(); ++b)
        g_vt(static_cast<int>(a), static_cast<int>(b)) = kernel(va[a], tr[b]);
    const Eigen::VectorXd pred = krr_predict_rows(model, g_vt);
    for (std::size_t a = 0; a < va.size(); ++a)
      pooled += (pred[static_cast<int>(a)] - y_[va[a]]) * (pred[static_cast<int>(a)] - y_[va[a]]);
  }
  return pooled / static_cast<double>(m);
}

double DistributionRegressor::cv_score_features(const Eigen::MatrixXd& features,
                                                double alpha) const {
  const int m = static_cast<int>(features.rows());
  double pooled = 0.0;
  for (int f = 0; f < config_.folds; ++f) {
    std::vector<int> tr, va;
    for (int i = 0; i < m; ++i) (fold_of_[static_cast<std::size_t>(i)] == f ? va : tr).push_back(i);
    if (va.empty() || tr.empty()) continue;
    Eigen::VectorXd mean, scale;
    center_columns(features, tr, mean, scale);
    const Eigen::MatrixXd x_tr = apply_column_scaling(features, tr, mean, scale);
    const Eigen::MatrixXd x_va = apply_column_scaling(features, va, mean, scale);
    Eigen::VectorXd y_tr(static_cast<int>(tr.size()));
    for (std::size_t a = 0; a < tr.size(); ++a) y_tr[static_cast<int>(a)] = y_[tr[a]];
    const LassoModel model = lasso_fit(x_tr, y_tr, alpha);
    const Eigen::VectorXd pred = lasso_predict(model, x_va);
    for (std::size_t a = 0; a < va.size(); ++a)
      pooled += (pred[static_cast<int>(a)] - y_[va[a]]) * (pred[static_cast<int>(a)] - y_[va[a]]);
  }
  return pooled / static_cast<double>(m);
}

CvResult DistributionRegressor::grid_search(const HyperGrid& grid) {
  const int m = raw_train_.size();
  if (config_.folds < 2 || config_.folds > m)
    throw std::invalid_argument("grid_search: folds must be in [2, number of groups]");
  fold_of_ = fold_assignment(m, config_.folds, config_.fold_seed);

  CvResult result;
  bool have_best = false;
  auto consider = [&](const HyperParams& p, double score) {
    ++result.evaluations;
    if (!have_best || score < result.cv_mse ||
        (score == result.cv_mse && prefer_on_tie(p, result.best))) {
      result.best = p;
      result.cv_mse = score;
      have_best = true;
    }
  };
  auto log_skip = [&](const HyperParams& p, const std::exception& e) {
    ++result.skipped;
    ++result.evaluations;
    std::cerr << "grid point skipped (l1=" << p.l1 << ", l2=" << p.l2 << ", alpha=" << p.alpha
              << ", n=" << p.inner_level << ", m=" << p.outer_level << "): " << e.what() << "\n";
  };

  switch (config_.method) {
    case Method::kes: {
      if (grid.l2.empty() || grid.alpha.empty())
        throw std::invalid_argument("grid_search: KES grid needs l2 and alpha values");
      const Eigen::MatrixXd& mmd = train_mmd();
      for (double l2 : grid.l2) {
        Eigen::MatrixXd kernel;
        try {
          kernel = kes_gram(GramMatrix{mmd, GramKind::mmd_sq, 0.0, config_.refinement},
                            sigma_from_lengthscale(l2))
                       .entries;
        } catch (const NumericalError& e) {
          for (double alpha : grid.alpha) log_skip({0, l2, alpha, 0, 0}, e);
          continue;
        }
        for (double alpha : grid.alpha) {
          HyperParams p{0, l2, alpha, 0, 0};
          try {
            consider(p, cv_score_kernel(kernel, alpha));
          } catch (const NumericalError& e) {
            log_skip(p, e);
          }
        }
      }
      break;
    }
    case Method::ses: {
      if (grid.alpha.empty() || grid.inner_level.empty() || grid.outer_level.empty())
        throw std::invalid_argument("grid_search: SES grid needs alpha and levels");
      for (int n : grid.inner_level) {
        for (int mo : grid.outer_level) {
          const Eigen::MatrixXd* features = nullptr;
          try {
            features = &train_features(n, mo);
          } catch (const std::exception& e) {
            for (double alpha : grid.alpha) log_skip({0, 0, alpha, n, mo}, e);
            continue;
          }
          for (double alpha : grid.alpha) {
            HyperParams p{0, 0, alpha, n, mo};
            try {
              consider(p, cv_score_features(*features, alpha));
            } catch (const NumericalError& e) {
              log_skip(p, e);
            }
          }
        }
      }
      break;
    }
    case Method::dr_rbf: {
      if (grid.l1.empty() || grid.l2.empty() || grid.alpha.empty())
        throw std::invalid_argument("grid_search: DR-RBF grid needs l1, l2 and alpha values");
      for (double l1 : grid.l1) {
        const Eigen::MatrixXd& dists = train_rbf_distances(l1);
        for (double l2 : grid.l2) {
          const Eigen::MatrixXd kernel = baseline_rbf_gram_from_distances(dists, l2).entries;
          for (double alpha : grid.alpha) {
            HyperParams p{l1, l2, alpha, 0, 0};
            try {
              consider(p, cv_score_kernel(kernel, alpha));
            } catch (const NumericalError& e) {
              log_skip(p, e);
            }
          }
        }
      }
      break;
    }
  }
  if (!have_best) throw NumericalError("grid_search: every grid point failed");
  return result;
}

void DistributionRegressor::fit(const HyperParams& params) {
  params_ = params;
  const int m = raw_train_.size();
  switch (config_.method) {
    case Method::kes: {
      const Eigen::MatrixXd kernel =
          kes_gram(GramMatrix{train_mmd(), GramKind::mmd_sq, 0.0, config_.refinement},
                   sigma_from_lengthscale(params.l2))
              .entries;
      const double offset = y_.mean();
      krr_ = krr_fit(kernel, (y_.array() - offset).matrix(), params.alpha);
      krr_.label_offset = offset;
      break;
    }
    case Method::dr_rbf: {
      const Eigen::MatrixXd kernel =
          baseline_rbf_gram_from_distances(train_rbf_distances(params.l1), params.l2).entries;
      const double offset = y_.mean();
      krr_ = krr_fit(kernel, (y_.array() - offset).matrix(), params.alpha);
      krr_.label_offset = offset;
      break;
    }
    case Method::ses: {
      const Eigen::MatrixXd& features = train_features(params.inner_level, params.outer_level);
      center_columns(features, all_rows(m), column_mean_, column_scale_);
      const Eigen::MatrixXd x = apply_column_scaling(features, all_rows(m), column_mean_, column_scale_);
      lasso_ = lasso_fit(x, y_, params.alpha);
      break;
    }
  }
  fitted_ = true;
}

Eigen::VectorXd DistributionRegressor::predict(const std::vector<EmpiricalMeasure>& groups) const {
  if (!fitted_) throw std::logic_error("DistributionRegressor::predict before fit");
  const auto pre = preprocess(groups);
  switch (config_.method) {
    case Method::kes: {
      const Eigen::MatrixXd cross = mmd_cross(pre, train_groups_, config_.refinement);
      const double s2 = 1.0 / (2.0 * params_.l2 * params_.l2);
      const Eigen::MatrixXd k_star = (-s2 * cross.cwiseMax(0.0)).array().exp().matrix();
      return krr_predict_rows(krr_, k_star);
    }
    case Method::dr_rbf: {
      std::vector<EmpiricalMeasure> combined = pre;
      combined.insert(combined.end(), train_groups_.begin(), train_groups_.end());
      const Eigen::MatrixXd dists =
          rbf_embedding_sq_distances(combined, params_.l1, stack_length_);
      const int t = static_cast<int>(pre.size());
      const Eigen::MatrixXd block = dists.block(0, t, t, raw_train_.size());
      const double s2 = 1.0 / (2.0 * params_.l2 * params_.l2);
      const Eigen::MatrixXd k_star = (-s2 * block.cwiseMax(0.0)).array().exp().matrix();
      return krr_predict_rows(krr_, k_star);
    }
    case Method::ses: {
      const Eigen::MatrixXd features =
          ses_feature_matrix(pre, params_.inner_level, params_.outer_level, config_.ses);
      const Eigen::MatrixXd x = apply_column_scaling(
          features, all_rows(static_cast<int>(pre.size())), column_mean_, column_scale_);
      return lasso_predict(lasso_, x);
    }
  }
  throw std::logic_error("unreachable");
}

std::string DistributionRegressor::to_json() const {
  nlohmann::json j;
  j["method"] = method_name(config_.method);
  j["refinement"] = config_.refinement;
  j["preprocessing"] = {{"standardize", config_.prep.standardize},
                        {"lead_lag", config_.prep.lead_lag},
                        {"time_augment", config_.prep.time_augment}};
  j["hyperparameters"] = {{"l1", params_.l1},
                          {"l2", params_.l2},
                          {"alpha", params_.alpha},
                          {"inner_level", params_.inner_level},
                          {"outer_level", params_.outer_level}};
  char fp[24];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(dataset_fingerprint(raw_train_)));
  j["dataset_fingerprint"] = fp;
  if (scaler_) {
    j["channel_scaler"] = {
        {"mean", std::vector<double>(scaler_->mean.data(), scaler_->mean.data() + scaler_->mean.size())},
        {"scale",
         std::vector<double>(scaler_->scale.data(), scaler_->scale.data() + scaler_->scale.size())}};
  }
  if (fitted_) {
    if (config_.method == Method::ses) {
      j["weights"] = std::vector<double>(lasso_.weights.data(),
                                         lasso_.weights.data() + lasso_.weights.size());
      j["intercept"] = lasso_.intercept;
      j["converged"] = lasso_.converged;
      j["column_scaler"] = {
          {"mean",
           std::vector<double>(column_mean_.data(), column_mean_.data() + column_mean_.size())},
          {"scale",
           std::vector<double>(column_scale_.data(), column_scale_.data() + column_scale_.size())}};
    } else {
      j["dual_weights"] = std::vector<double>(
          krr_.dual_weights.data(), krr_.dual_weights.data() + krr_.dual_weights.size());
      j["label_offset"] = krr_.label_offset;
      j["jitter"] = krr_.jitter;
      if (config_.method == Method::dr_rbf) j["stack_length"] = stack_length_;
    }
  }
  return j.dump(2);
}

CvResult grid_search_cv(const Dataset& train, Method method, const HyperGrid& grid, int folds,
                        const RegressorConfig& base_config) {
  RegressorConfig config = base_config;
  config.method = method;
  config.folds = folds;
  DistributionRegressor reg(train, config);
  return reg.grid_search(grid);
}

}  // namespace sigdr
