#include "sigdr/errors.hpp"
#include "sigdr/experiment.hpp"
#include "sigdr/measures.hpp"
#include "sigdr/parallel.hpp"
#include "sigdr/regress.hpp"
#include "sigdr/rng.hpp"
#include "sigdr/sigkernel.hpp"
#include "sigdr/streams.hpp"
#include "sigdr/synthdata.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> method;
  std::optional<int> refinement;
  std::optional<double> drop_rate;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config JSON")->required();
  cmd->add_option("--seed", flags.seed, "Override config seed");
  cmd->add_option("--threads", flags.threads, "Worker threads (default: hardware)");
  cmd->add_option("--out", flags.out_dir, "Output directory");
  cmd->add_option("--method", flags.method, "ses, kes or dr-rbf");
  cmd->add_option("--refinement", flags.refinement, "PDE solver dyadic refinement");
  cmd->add_option("--drop-rate", flags.drop_rate, "Override generator drop_rate");
}

int resolve_threads(const std::optional<int>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SIGDR_THREADS")) {
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
      throw std::invalid_argument("SIGDR_THREADS is not an integer");
    }
  }
  return 0;
}

// Flags win over config fields.
sigdr::ExperimentConfig load_config(const CommonFlags& flags) {
  auto cfg = sigdr::ExperimentConfig::from_file(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  if (flags.method) cfg.method = sigdr::parse_method(*flags.method);
  if (flags.refinement) cfg.refinement = *flags.refinement;
  if (flags.drop_rate) cfg.generator_config["drop_rate"] = *flags.drop_rate;
  cfg.threads = resolve_threads(flags.threads);
  if (cfg.threads > 0) sigdr::set_worker_threads(cfg.threads);
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_generate(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const sigdr::Dataset ds = sigdr::build_dataset(cfg, std::nullopt);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string data_path = cfg.out_dir + "/data.csv";
  const std::string labels_path = cfg.out_dir + "/labels.csv";
  sigdr::save_dataset_csv(ds, data_path, labels_path);
  json manifest;
  manifest["generator"] = cfg.generator;
  manifest["generator_config"] = cfg.generator_config;
  manifest["seed"] = cfg.seed;
  manifest["groups"] = ds.size();
  manifest["dimension"] = ds.dim();
  std::ofstream mf(cfg.out_dir + "/manifest.json");
  mf << manifest.dump(2) << "\n";
  std::cout << "wrote " << data_path << ", " << labels_path << " (" << ds.size() << " groups)\n";
  return 0;
}

// Preprocessed groups as the experiment pipeline would see them.
std::vector<sigdr::EmpiricalMeasure> preprocessed_groups(const sigdr::ExperimentConfig& cfg,
                                                         const sigdr::Dataset& ds) {
  const sigdr::Preprocessing prep = cfg.effective_prep();
  std::optional<sigdr::ChannelScaler> scaler;
  if (prep.standardize) scaler = sigdr::ChannelScaler::fit(ds.groups);
  std::vector<sigdr::EmpiricalMeasure> out;
  out.reserve(ds.groups.size());
  for (const auto& g : ds.groups) {
    std::vector<sigdr::TimeSeries> members;
    for (const auto& ts : g.series) {
      sigdr::TimeSeries cur = scaler ? scaler->apply(ts) : ts;
      if (prep.lead_lag) cur = sigdr::lead_lag(cur);
      if (prep.time_augment) cur = sigdr::time_augment(cur);
      members.push_back(std::move(cur));
    }
    out.emplace_back(std::move(members));
  }
  return out;
}

int cmd_features(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const sigdr::Dataset ds = sigdr::build_dataset(cfg, std::nullopt);
  const auto groups = preprocessed_groups(cfg, ds);
  const sigdr::HyperGrid grid = cfg.effective_grid();
  const int inner = grid.inner_level.empty() ? 2 : grid.inner_level.front();
  const int outer = grid.outer_level.empty() ? 2 : grid.outer_level.front();
  const Eigen::MatrixXd features = sigdr::ses_feature_matrix(groups, inner, outer, cfg.ses);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/features.csv";
  sigdr::save_feature_matrix_csv(features, path);
  std::cout << "wrote " << path << " (" << features.rows() << " x " << features.cols() << ")\n";
  return 0;
}

int cmd_gram(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const sigdr::Dataset ds = sigdr::build_dataset(cfg, std::nullopt);
  const auto groups = preprocessed_groups(cfg, ds);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/gram.csv";

  sigdr::GramMatrix gram;
  if (cfg.method == sigdr::Method::kes) {
    gram = sigdr::mmd_gram(groups, cfg.refinement);
    // With an l2 in the grid of size one, export the kernel; otherwise the
    // reusable squared-MMD matrix.
    const sigdr::HyperGrid grid = cfg.effective_grid();
    if (grid.l2.size() == 1) {
      const double sigma = std::sqrt(1.0 / (2.0 * grid.l2.front() * grid.l2.front()));
      gram = sigdr::kes_gram(gram, sigma);
    }
  } else if (cfg.method == sigdr::Method::dr_rbf) {
    const sigdr::HyperGrid grid = cfg.effective_grid();
    if (grid.l1.size() != 1 || grid.l2.size() != 1)
      throw std::invalid_argument("gram with dr-rbf needs single l1 and l2 grid values");
    gram = sigdr::baseline_rbf_gram(groups, grid.l1.front(), grid.l2.front());
  } else {
    throw std::invalid_argument("gram supports methods kes and dr-rbf");
  }
  sigdr::save_gram_csv(gram, path);
  std::cout << "wrote " << path << " (" << gram.entries.rows() << " x " << gram.entries.cols()
            << ")\n";
  return 0;
}

int cmd_fit(const std::string& out_dir, std::optional<int> threads,
            const std::string& features_path, const std::string& gram_path,
            const std::string& labels_path, double alpha) {
  if (threads && *threads > 0) sigdr::set_worker_threads(*threads);
  Eigen::VectorXd y;
  // Parse labels (group_id,label rows).
  {
    std::ifstream in(labels_path);
    if (!in) throw std::runtime_error("cannot open labels CSV: " + labels_path);
    std::string line;
    std::getline(in, line);
    std::vector<double> vals;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw std::runtime_error("bad labels row: " + line);
      vals.push_back(std::stod(line.substr(comma + 1)));
    }
    y.resize(static_cast<int>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) y[static_cast<int>(i)] = vals[i];
  }

  json model;
  std::string fingerprint_source;
  if (!features_path.empty()) {
    const Eigen::MatrixXd features = sigdr::load_feature_matrix_csv(features_path);
    if (features.rows() != y.size())
      throw std::invalid_argument("feature rows and labels disagree");
    Eigen::VectorXd mean = features.colwise().mean();
    Eigen::VectorXd scale(features.cols());
    for (int j = 0; j < features.cols(); ++j) {
      const double var = (features.col(j).array() - mean[j]).square().mean();
      scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    Eigen::MatrixXd x = (features.rowwise() - mean.transpose()).array().rowwise() /
                        scale.transpose().array();
    const sigdr::LassoModel lasso = sigdr::lasso_fit(x, y, alpha);
    model["method"] = "ses";
    model["alpha"] = alpha;
    model["weights"] = std::vector<double>(lasso.weights.data(),
                                           lasso.weights.data() + lasso.weights.size());
    model["intercept"] = lasso.intercept;
    model["converged"] = lasso.converged;
    model["column_scaler"] = {
        {"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
        {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())}};
    const Eigen::VectorXd pred = sigdr::lasso_predict(lasso, x);
    model["train_mse"] = sigdr::mean_squared_error(y, pred);
    fingerprint_source = read_file(features_path);
  } else if (!gram_path.empty()) {
    const sigdr::GramMatrix gram = sigdr::load_gram_csv(gram_path);
    if (gram.kind != sigdr::GramKind::kernel)
      throw std::invalid_argument("fit needs a kernel-kind Gram (apply a lengthscale first)");
    if (gram.entries.rows() != y.size())
      throw std::invalid_argument("Gram size and labels disagree");
    const double offset = y.mean();
    sigdr::KrrModel krr = sigdr::krr_fit(gram.entries, (y.array() - offset).matrix(), alpha);
    krr.label_offset = offset;
    model["method"] = "krr";
    model["alpha"] = alpha;
    model["sigma"] = gram.sigma;
    model["refinement"] = gram.refinement;
    model["dual_weights"] = std::vector<double>(
        krr.dual_weights.data(), krr.dual_weights.data() + krr.dual_weights.size());
    model["label_offset"] = krr.label_offset;
    model["jitter"] = krr.jitter;
    const Eigen::VectorXd pred = sigdr::krr_predict_rows(krr, gram.entries);
    model["train_mse"] = sigdr::mean_squared_error(y, pred);
    fingerprint_source = read_file(gram_path);
  } else {
    throw std::invalid_argument("fit needs --features or --gram");
  }
  char fp[24];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(sigdr::fnv1a_hash(fingerprint_source)));
  model["dataset_fingerprint"] = fp;

  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/model.json";
  std::ofstream out(path);
  out << model.dump(2) << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_run(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const sigdr::Report report = sigdr::run_experiment(cfg);
  sigdr::emit_report(report, cfg.out_dir);
  for (const auto& run : report.runs) {
    std::cout << sigdr::method_name(cfg.method);
    if (run.sweep_value) std::cout << " [" << cfg.sweep->parameter << "=" << *run.sweep_value << "]";
    std::cout << ": mse " << run.mean_mse << " +/- " << run.std_mse;
    if (!std::isnan(run.mean_mape)) std::cout << ", mape " << run.mean_mape << "%";
    std::cout << " (" << run.total_seconds << " s)\n";
  }
  std::cout << "report written to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_bench(std::uint64_t seed, const std::string& out_dir, std::optional<int> threads) {
  if (threads && *threads > 0) sigdr::set_worker_threads(*threads);
  const sigdr::BenchResult bench = sigdr::run_bench(seed);
  std::filesystem::create_directories(out_dir);
  sigdr::write_bench_csv(bench, out_dir + "/bench.csv");
  std::cout << "ses features vs group size: exponent " << bench.ses_group_size_exponent << "\n";
  std::cout << "kes gram vs group size:     exponent " << bench.kes_group_size_exponent << "\n";
  std::cout << "pde solve vs length:        exponent " << bench.pde_length_exponent << "\n";
  std::cout << "wrote " << out_dir << "/bench.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distribution regression on groups of time series (SES / KES / DR-RBF)"};
  app.require_subcommand(1);

  CommonFlags generate_flags, features_flags, gram_flags, run_flags;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic dataset as CSV");
  add_common(generate, generate_flags);
  auto* features = app.add_subcommand("features", "Export the SES feature matrix");
  add_common(features, features_flags);
  auto* gram = app.add_subcommand("gram", "Export a Gram matrix (KES MMD/kernel or DR-RBF)");
  add_common(gram, gram_flags);

  auto* fit = app.add_subcommand("fit", "Fit from an exported feature or Gram CSV");
  std::string fit_features, fit_gram, fit_labels, fit_out = ".";
  double fit_alpha = 1.0;
  std::optional<int> fit_threads;
  fit->add_option("--features", fit_features, "Feature matrix CSV (SES path)");
  fit->add_option("--gram", fit_gram, "Kernel Gram CSV (KES / DR-RBF path)");
  fit->add_option("--labels", fit_labels, "Labels CSV")->required();
  fit->add_option("--alpha", fit_alpha, "Regularization strength");
  fit->add_option("--out", fit_out, "Output directory");
  fit->add_option("--threads", fit_threads, "Worker threads");

  auto* run = app.add_subcommand("run", "Run the end-to-end experiment protocol");
  add_common(run, run_flags);

  auto* bench = app.add_subcommand("bench", "Measure complexity scaling trends");
  std::uint64_t bench_seed = 0;
  std::string bench_out = ".";
  std::optional<int> bench_threads;
  bench->add_option("--seed", bench_seed, "Seed for the synthetic workloads");
  bench->add_option("--out", bench_out, "Output directory");
  bench->add_option("--threads", bench_threads, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(generate_flags);
    if (features->parsed()) return cmd_features(features_flags);
    if (gram->parsed()) return cmd_gram(gram_flags);
    if (fit->parsed()) return cmd_fit(fit_out, fit_threads, fit_features, fit_gram, fit_labels, fit_alpha);
    if (run->parsed()) return cmd_run(run_flags);
    if (bench->parsed()) return cmd_bench(bench_seed, bench_out, bench_threads);
  } catch (const sigdr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
