#pragma once

#include "sigdr/measures.hpp"
#include "sigdr/sigkernel.hpp"
#include "sigdr/streams.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sigdr {

enum class Method { ses, kes, dr_rbf };

std::string method_name(Method m);
Method parse_method(const std::string& name);

// ---------------------------------------------------------------------------
// Kernel ridge regression

struct KrrModel {
  Eigen::VectorXd dual_weights;
  double alpha = 0.0;
  double label_offset = 0.0;  // added back at prediction time
  double jitter = 0.0;        // diagonal boost that made the factorization succeed
};

// Solves (G + alpha I) w = y by Cholesky with jitter escalation (1e-10 up
// to 1e-4 of trace(G)/M, x10 per failure) followed by iterative refinement
// against the unjittered system. No label centering is applied here.
KrrModel krr_fit(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double alpha);

double krr_predict(const KrrModel& model, const Eigen::Ref<const Eigen::VectorXd>& k_star);
Eigen::VectorXd krr_predict_rows(const KrrModel& model, const Eigen::MatrixXd& k_star_rows);

// ---------------------------------------------------------------------------
// Lasso by cyclic coordinate descent

struct LassoModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double alpha = 0.0;
  bool converged = true;
  int sweeps = 0;
};

// Minimizes (1/2M) |y - b - X w|^2 + alpha |w|_1 with an unpenalized
// intercept; columns are taken as given (the caller owns any centering or
// scaling convention). Stops when the largest
// weight change in a sweep falls below tol or after max_sweeps sweeps
// (non-convergence is flagged on the model, not an error). When
// objective_trace is given, the objective value after each sweep is
// appended.
LassoModel lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double alpha,
                     int max_sweeps = 10000, double tol = 1e-8,
                     std::vector<double>* objective_trace = nullptr);

Eigen::VectorXd lasso_predict(const LassoModel& model, const Eigen::MatrixXd& x);

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  double mse = 0.0;
  double mape = 0.0;  // percent
};

double mean_squared_error(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);
// Requires all y_true entries nonzero.
double mean_absolute_percentage_error(const Eigen::VectorXd& y_true,
                                      const Eigen::VectorXd& y_pred);
Metrics compute_metrics(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

// ---------------------------------------------------------------------------
// DR-RBF mean-embedding baseline

// Series are stacked into d*l vectors (padded by repeating the last value,
// truncated past l); k1 is an RBF with gamma^2 = 1/(2 l1^2) and group
// distances use the kernel mean-embedding identity. Entries are
// exp(-dist/(2 l2^2)).
GramMatrix baseline_rbf_gram(const std::vector<EmpiricalMeasure>& groups, double l1, double l2);

// The two halves separately, so cross-validation can reuse the expensive
// embedding distances across the l2 and alpha grid.
Eigen::MatrixXd rbf_embedding_sq_distances(const std::vector<EmpiricalMeasure>& groups, double l1,
                                           int stack_length);
GramMatrix baseline_rbf_gram_from_distances(const Eigen::MatrixXd& sq_dists, double l2);

// ---------------------------------------------------------------------------
// Hyperparameters and cross-validation

struct HyperParams {
  double l1 = 0.0;     // DR-RBF level-1 lengthscale
  double l2 = 0.0;     // outer Gaussian lengthscale (KES, DR-RBF)
  double alpha = 0.0;  // ridge / lasso regularization
  int inner_level = 0;
  int outer_level = 0;
};

struct HyperGrid {
  std::vector<double> l1;
  std::vector<double> l2;
  std::vector<double> alpha;
  std::vector<int> inner_level;
  std::vector<int> outer_level;

  static HyperGrid defaults(Method m);
};

struct Preprocessing {
  bool standardize = true;  // per-channel z-scoring with training statistics
  bool lead_lag = false;
  bool time_augment = false;
};

struct RegressorConfig {
  Method method = Method::ses;
  Preprocessing prep;
  int refinement = 0;
  SesOptions ses;
  int folds = 5;
  std::uint64_t fold_seed = 0;
};

struct CvResult {
  HyperParams best;
  double cv_mse = 0.0;
  int evaluations = 0;
  int skipped = 0;  // grid points that failed numerically
};

// End-to-end distribution regressor for one training set: applies the
// preprocessing, caches the expensive method-specific intermediates (MMD
// matrix, feature matrices, embedding distances) and exposes grid-search,
// refit and prediction on new groups.
class DistributionRegressor {
 public:
  DistributionRegressor(Dataset train, RegressorConfig config);

  // Exhaustive k-fold CV over the grid; ties are broken toward stronger
  // regularization (larger alpha, then larger l2, larger l1, smaller inner
  // then outer level). Points failing numerically are skipped; all points
  // failing is an error.
  CvResult grid_search(const HyperGrid& grid);

  void fit(const HyperParams& params);
  Eigen::VectorXd predict(const std::vector<EmpiricalMeasure>& groups) const;

  bool fitted() const { return fitted_; }
  const HyperParams& params() const { return params_; }
  const RegressorConfig& config() const { return config_; }

  // Serialized model: method, hyperparameters, weights, preprocessing
  // statistics and a fingerprint of the training data.
  std::string to_json() const;

 private:
  std::vector<EmpiricalMeasure> preprocess(const std::vector<EmpiricalMeasure>& raw) const;
  const Eigen::MatrixXd& train_mmd();
  const Eigen::MatrixXd& train_features(int inner_level, int outer_level);
  const Eigen::MatrixXd& train_rbf_distances(double l1);
  double cv_score_kernel(const Eigen::MatrixXd& kernel, double alpha) const;
  double cv_score_features(const Eigen::MatrixXd& features, double alpha) const;

  Dataset raw_train_;
  RegressorConfig config_;
  std::optional<ChannelScaler> scaler_;
  std::vector<EmpiricalMeasure> train_groups_;  // preprocessed
  Eigen::VectorXd y_;
  std::vector<int> fold_of_;
  int stack_length_ = 0;  // DR-RBF common stacked length

  std::optional<Eigen::MatrixXd> mmd_;
  std::map<std::pair<int, int>, Eigen::MatrixXd> features_;
  std::map<double, Eigen::MatrixXd> rbf_dists_;

  bool fitted_ = false;
  HyperParams params_;
  KrrModel krr_;
  LassoModel lasso_;
  Eigen::VectorXd column_mean_, column_scale_;  // feature standardization (SES)
};

// Convenience wrapper: grid-search CV on a dataset in one call.
CvResult grid_search_cv(const Dataset& train, Method method, const HyperGrid& grid, int folds,
                        const RegressorConfig& base_config);

// Deterministic k-fold assignment of m items (Fisher-Yates with a pinned
// generator).
std::vector<int> fold_assignment(int m, int folds, std::uint64_t seed);

// FNV-1a hash of a byte stream, used to fingerprint datasets in model files.
std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace sigdr
