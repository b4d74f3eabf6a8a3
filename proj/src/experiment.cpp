#include "sigdr/experiment.hpp"

#include "sigdr/parallel.hpp"
#include "sigdr/rng.hpp"
#include "sigdr/signature.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

namespace sigdr {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void check_known_keys(const nlohmann::json& j, const std::set<std::string>& known,
                      const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw std::invalid_argument("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

CircuitConfig circuit_from_json(const nlohmann::json& j, std::uint64_t seed) {
  check_known_keys(j,
                   {"groups", "devices", "periods", "points_per_period", "omega", "phase_min",
                    "phase_max", "drop_rate"},
                   "generator_config (circuit)");
  CircuitConfig c;
  read_if(j, "groups", c.groups);
  read_if(j, "devices", c.devices);
  read_if(j, "periods", c.periods);
  read_if(j, "points_per_period", c.points_per_period);
  read_if(j, "omega", c.omega);
  read_if(j, "phase_min", c.phase_min);
  read_if(j, "phase_max", c.phase_max);
  read_if(j, "drop_rate", c.drop_rate);
  c.seed = seed;
  return c;
}

GasConfig gas_from_json(const nlohmann::json& j, std::uint64_t seed) {
  check_known_keys(j,
                   {"groups", "particles", "box_side", "radius_factor", "temp_min", "temp_max",
                    "steps", "dt"},
                   "generator_config (ideal_gas)");
  GasConfig c;
  read_if(j, "groups", c.groups);
  read_if(j, "particles", c.particles);
  read_if(j, "box_side", c.box_side);
  read_if(j, "radius_factor", c.radius_factor);
  read_if(j, "temp_min", c.temp_min);
  read_if(j, "temp_max", c.temp_max);
  read_if(j, "steps", c.steps);
  read_if(j, "dt", c.dt);
  c.seed = seed;
  return c;
}

RoughVolConfig rough_vol_from_json(const nlohmann::json& j, std::uint64_t seed) {
  check_known_keys(j,
                   {"groups", "paths", "length", "hurst", "reversion_min", "reversion_max",
                    "fou_mean", "fou_vol"},
                   "generator_config (rough_vol)");
  RoughVolConfig c;
  read_if(j, "groups", c.groups);
  read_if(j, "paths", c.paths);
  read_if(j, "length", c.length);
  read_if(j, "hurst", c.hurst);
  read_if(j, "reversion_min", c.reversion_min);
  read_if(j, "reversion_max", c.reversion_max);
  read_if(j, "fou_mean", c.fou_mean);
  read_if(j, "fou_vol", c.fou_vol);
  c.seed = seed;
  return c;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  check_known_keys(j,
                   {"generator", "generator_config", "data_csv", "labels_csv", "method",
                    "preprocessing", "grid", "ses", "refinement", "repeats", "train_fraction",
                    "folds", "seed", "out_dir", "threads", "sweep"},
                   "experiment config");
  ExperimentConfig cfg;
  read_if(j, "generator", cfg.generator);
  if (j.contains("generator_config")) cfg.generator_config = j.at("generator_config");
  read_if(j, "data_csv", cfg.data_csv);
  read_if(j, "labels_csv", cfg.labels_csv);
  if (j.contains("method")) cfg.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("preprocessing")) {
    const auto& p = j.at("preprocessing");
    check_known_keys(p, {"standardize", "lead_lag", "time_augment"}, "preprocessing");
    Preprocessing prep;
    read_if(p, "standardize", prep.standardize);
    read_if(p, "lead_lag", prep.lead_lag);
    read_if(p, "time_augment", prep.time_augment);
    cfg.prep = prep;
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_known_keys(g, {"l1", "l2", "alpha", "inner_level", "outer_level"}, "grid");
    read_if(g, "l1", cfg.grid.l1);
    read_if(g, "l2", cfg.grid.l2);
    read_if(g, "alpha", cfg.grid.alpha);
    read_if(g, "inner_level", cfg.grid.inner_level);
    read_if(g, "outer_level", cfg.grid.outer_level);
  }
  if (j.contains("ses")) {
    const auto& s = j.at("ses");
    check_known_keys(s, {"rescale_levels", "outer_time_augment", "feature_cap"}, "ses");
    read_if(s, "rescale_levels", cfg.ses.rescale_levels);
    read_if(s, "outer_time_augment", cfg.ses.outer_time_augment);
    read_if(s, "feature_cap", cfg.ses.feature_cap);
  }
  read_if(j, "refinement", cfg.refinement);
  read_if(j, "repeats", cfg.repeats);
  read_if(j, "train_fraction", cfg.train_fraction);
  read_if(j, "folds", cfg.folds);
  read_if(j, "seed", cfg.seed);
  read_if(j, "out_dir", cfg.out_dir);
  read_if(j, "threads", cfg.threads);
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_known_keys(s, {"parameter", "values"}, "sweep");
    SweepSpec sweep;
    sweep.parameter = s.at("parameter").get<std::string>();
    sweep.values = s.at("values").get<std::vector<double>>();
    if (sweep.values.empty()) throw std::invalid_argument("sweep.values must be non-empty");
    cfg.sweep = sweep;
  }

  if (cfg.generator.empty() && cfg.data_csv.empty())
    throw std::invalid_argument("config needs either a generator or CSV paths");
  if (!cfg.generator.empty() && cfg.generator != "csv" && cfg.generator != "circuit" &&
      cfg.generator != "ideal_gas" && cfg.generator != "rough_vol")
    throw std::invalid_argument("unknown generator '" + cfg.generator + "'");
  if (cfg.generator == "csv" && (cfg.data_csv.empty() || cfg.labels_csv.empty()))
    throw std::invalid_argument("csv source needs data_csv and labels_csv");
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must be in (0,1)");
  if (cfg.folds < 2) throw std::invalid_argument("folds must be >= 2");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("bad JSON in " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  if (!generator.empty()) j["generator"] = generator;
  if (!generator_config.empty()) j["generator_config"] = generator_config;
  if (!data_csv.empty()) j["data_csv"] = data_csv;
  if (!labels_csv.empty()) j["labels_csv"] = labels_csv;
  j["method"] = method_name(method);
  const Preprocessing p = effective_prep();
  j["preprocessing"] = {{"standardize", p.standardize},
                        {"lead_lag", p.lead_lag},
                        {"time_augment", p.time_augment}};
  const HyperGrid g = effective_grid();
  j["grid"] = {{"l1", g.l1},
               {"l2", g.l2},
               {"alpha", g.alpha},
               {"inner_level", g.inner_level},
               {"outer_level", g.outer_level}};
  j["ses"] = {{"rescale_levels", ses.rescale_levels},
              {"outer_time_augment", ses.outer_time_augment},
              {"feature_cap", ses.feature_cap}};
  j["refinement"] = refinement;
  j["repeats"] = repeats;
  j["train_fraction"] = train_fraction;
  j["folds"] = folds;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["threads"] = threads;
  if (sweep) j["sweep"] = {{"parameter", sweep->parameter}, {"values", sweep->values}};
  return j;
}

Preprocessing ExperimentConfig::effective_prep() const {
  if (prep) return *prep;
  Preprocessing p;
  if (generator == "ideal_gas") {
    p.lead_lag = true;
    p.time_augment = true;
  } else if (generator == "rough_vol") {
    // Volatility paths are already O(1); z-scoring the channel inflates the
    // per-step increments and saturates the signature kernel.
    p.standardize = false;
    p.time_augment = true;
  }
  // circuit and csv: standardization only
  return p;
}

HyperGrid ExperimentConfig::effective_grid() const {
  HyperGrid g = HyperGrid::defaults(method);
  if (!grid.l1.empty()) g.l1 = grid.l1;
  if (!grid.l2.empty()) g.l2 = grid.l2;
  if (!grid.alpha.empty()) g.alpha = grid.alpha;
  if (!grid.inner_level.empty()) g.inner_level = grid.inner_level;
  if (!grid.outer_level.empty()) g.outer_level = grid.outer_level;
  return g;
}

Dataset build_dataset(const ExperimentConfig& cfg, const std::optional<double>& sweep_value) {
  if (cfg.generator.empty() || cfg.generator == "csv")
    return load_dataset_csv(cfg.data_csv, cfg.labels_csv);

  nlohmann::json gc = cfg.generator_config;
  if (sweep_value) {
    if (!cfg.sweep) throw std::logic_error("sweep value without sweep spec");
    gc[cfg.sweep->parameter] = *sweep_value;
  }
  // The dataset seed is shared across sweep values so curves vary only in
  // the swept parameter.
  const std::uint64_t data_seed = mix64(cfg.seed ^ 0xda7a5eedULL);
  if (cfg.generator == "circuit") return gen_circuit(circuit_from_json(gc, data_seed));
  if (cfg.generator == "ideal_gas") return gen_ideal_gas(gas_from_json(gc, data_seed));
  if (cfg.generator == "rough_vol") return gen_rough_vol(rough_vol_from_json(gc, data_seed));
  throw std::invalid_argument("unknown generator '" + cfg.generator + "'");
}

std::pair<std::vector<int>, std::vector<int>> train_test_split(int m, double train_fraction,
                                                               std::uint64_t seed,
                                                               std::uint64_t repeat) {
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  auto rng = derive_rng(seed, 0x73706c69ULL, repeat);
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
  int train_count = static_cast<int>(std::llround(train_fraction * m));
  train_count = std::max(1, std::min(m - 1, train_count));
  std::vector<int> train(idx.begin(), idx.begin() + train_count);
  std::vector<int> test(idx.begin() + train_count, idx.end());
  return {std::move(train), std::move(test)};
}

namespace {

Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
  std::vector<EmpiricalMeasure> groups;
  groups.reserve(indices.size());
  Eigen::VectorXd labels(static_cast<int>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    groups.push_back(ds.groups[static_cast<std::size_t>(indices[i])]);
    labels[static_cast<int>(i)] = ds.labels[indices[i]];
  }
  return Dataset(std::move(groups), std::move(labels));
}

RunResult run_once(const ExperimentConfig& cfg, const std::optional<double>& sweep_value) {
  RunResult run;
  run.sweep_value = sweep_value;
  const double t_start = now_seconds();
  const Dataset ds = build_dataset(cfg, sweep_value);
  run.generate_seconds = now_seconds() - t_start;
  if (ds.size() < 3) throw std::invalid_argument("dataset too small for a train/test split");

  for (int rep = 0; rep < cfg.repeats; ++rep) {
    RepeatResult rr;
    rr.repeat = rep;

    auto [train_idx, test_idx] =
        train_test_split(ds.size(), cfg.train_fraction, cfg.seed, static_cast<std::uint64_t>(rep));
    const Dataset train = subset(ds, train_idx);
    const Dataset test = subset(ds, test_idx);

    RegressorConfig rc;
    rc.method = cfg.method;
    rc.prep = cfg.effective_prep();
    rc.refinement = cfg.refinement;
    rc.ses = cfg.ses;
    rc.folds = std::min(cfg.folds, train.size());
    rc.fold_seed = mix64(cfg.seed ^ (0xf01d0000ULL + static_cast<std::uint64_t>(rep)));

    DistributionRegressor reg(train, rc);

    double t0 = now_seconds();
    const CvResult cv = reg.grid_search(cfg.effective_grid());
    rr.cv_seconds = now_seconds() - t0;
    rr.best = cv.best;
    rr.cv_mse = cv.cv_mse;

    t0 = now_seconds();
    reg.fit(cv.best);
    rr.fit_seconds = now_seconds() - t0;

    t0 = now_seconds();
    const Eigen::VectorXd pred = reg.predict(test.groups);
    rr.predict_seconds = now_seconds() - t0;

    rr.mse = mean_squared_error(test.labels, pred);
    try {
      rr.mape = mean_absolute_percentage_error(test.labels, pred);
    } catch (const std::invalid_argument&) {
      rr.mape = std::numeric_limits<double>::quiet_NaN();
    }
    run.repeats.push_back(rr);
  }

  std::vector<double> mses, mapes;
  for (const auto& rr : run.repeats) {
    mses.push_back(rr.mse);
    if (!std::isnan(rr.mape)) mapes.push_back(rr.mape);
  }
  run.mean_mse = 0.0;
  for (double v : mses) run.mean_mse += v;
  run.mean_mse /= static_cast<double>(mses.size());
  run.std_mse = sample_std(mses, run.mean_mse);
  if (!mapes.empty()) {
    for (double v : mapes) run.mean_mape += v;
    run.mean_mape /= static_cast<double>(mapes.size());
    run.std_mape = sample_std(mapes, run.mean_mape);
  } else {
    run.mean_mape = std::numeric_limits<double>::quiet_NaN();
    run.std_mape = std::numeric_limits<double>::quiet_NaN();
  }
  run.total_seconds = now_seconds() - t_start;
  return run;
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) set_worker_threads(cfg.threads);
  Report report;
  report.config = cfg.to_json();
  if (cfg.sweep) {
    for (double value : cfg.sweep->values) report.runs.push_back(run_once(cfg, value));
  } else {
    report.runs.push_back(run_once(cfg, std::nullopt));
  }
  return report;
}

nlohmann::json report_to_json(const Report& report) {
  nlohmann::json j;
  j["config"] = report.config;
  j["runs"] = nlohmann::json::array();
  for (const auto& run : report.runs) {
    nlohmann::json r;
    if (run.sweep_value) r["sweep_value"] = *run.sweep_value;
    r["mean_mse"] = run.mean_mse;
    r["std_mse"] = run.std_mse;
    if (!std::isnan(run.mean_mape)) {
      r["mean_mape"] = run.mean_mape;
      r["std_mape"] = run.std_mape;
    }
    r["generate_seconds"] = run.generate_seconds;
    r["total_seconds"] = run.total_seconds;
    r["repeats"] = nlohmann::json::array();
    for (const auto& rr : run.repeats) {
      nlohmann::json e;
      e["repeat"] = rr.repeat;
      e["mse"] = rr.mse;
      if (!std::isnan(rr.mape)) e["mape"] = rr.mape;
      e["cv_mse"] = rr.cv_mse;
      e["best"] = {{"l1", rr.best.l1},
                   {"l2", rr.best.l2},
                   {"alpha", rr.best.alpha},
                   {"inner_level", rr.best.inner_level},
                   {"outer_level", rr.best.outer_level}};
      e["cv_seconds"] = rr.cv_seconds;
      e["fit_seconds"] = rr.fit_seconds;
      e["predict_seconds"] = rr.predict_seconds;
      r["repeats"].push_back(e);
    }
    j["runs"].push_back(r);
  }
  return j;
}

void emit_report(const Report& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/report.json");
    if (!out) throw std::runtime_error("cannot write report.json in " + out_dir);
    out << report_to_json(report).dump(2) << "\n";
  }
  {
    std::ofstream out(out_dir + "/summary.csv");
    if (!out) throw std::runtime_error("cannot write summary.csv in " + out_dir);
    const bool swept = report.runs.size() > 1 || (report.runs.size() == 1 && report.runs.front().sweep_value);
    out << (swept ? "sweep_value,repeat,mse,mape,fit_seconds\n" : "repeat,mse,mape,fit_seconds\n");
    for (const auto& run : report.runs) {
      for (const auto& rr : run.repeats) {
        if (swept) out << format_double(run.sweep_value.value_or(0.0)) << ',';
        out << rr.repeat << ',' << format_double(rr.mse) << ','
            << (std::isnan(rr.mape) ? "" : format_double(rr.mape)) << ','
            << format_double(rr.fit_seconds) << "\n";
      }
    }
  }
  if (report.runs.size() > 1 || (report.runs.size() == 1 && report.runs.front().sweep_value)) {
    std::ofstream out(out_dir + "/curve.csv");
    if (!out) throw std::runtime_error("cannot write curve.csv in " + out_dir);
    out << "value,mean_mse,std_mse,mean_mape,std_mape\n";
    for (const auto& run : report.runs) {
      out << format_double(run.sweep_value.value_or(0.0)) << ',' << format_double(run.mean_mse)
          << ',' << format_double(run.std_mse) << ','
          << (std::isnan(run.mean_mape) ? "" : format_double(run.mean_mape)) << ','
          << (std::isnan(run.std_mape) ? "" : format_double(run.std_mape)) << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// bench

namespace {

// Wall-clock of fn(), repeated until the accumulated time is long enough to
// trust, reported per call.
template <typename F>
double time_call(F&& fn) {
  int calls = 1;
  for (;;) {
    const double t0 = now_seconds();
    for (int i = 0; i < calls; ++i) fn();
    const double elapsed = now_seconds() - t0;
    if (elapsed > 0.2 || calls >= 1 << 14) return elapsed / calls;
    calls *= 4;
  }
}

double fit_log_slope(const std::vector<double>& sizes, const std::vector<double>& times) {
  const auto n = static_cast<double>(sizes.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double x = std::log(sizes[i]);
    const double y = std::log(times[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<EmpiricalMeasure> random_walk_groups(int groups, int group_size, int length, int dim,
                                                 std::uint64_t seed) {
  std::vector<EmpiricalMeasure> out;
  out.reserve(static_cast<std::size_t>(groups));
  for (int g = 0; g < groups; ++g) {
    auto rng = derive_rng(seed, static_cast<std::uint64_t>(g));
    std::vector<TimeSeries> members;
    members.reserve(static_cast<std::size_t>(group_size));
    for (int p = 0; p < group_size; ++p) {
      Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(length, 0.0, 1.0);
      Eigen::MatrixXd v(length, dim);
      v.row(0).setZero();
      const double step = 1.0 / std::sqrt(static_cast<double>(length));
      for (int i = 1; i < length; ++i)
        for (int c = 0; c < dim; ++c) v(i, c) = v(i - 1, c) + step * gaussian(rng);
      members.emplace_back(std::move(t), std::move(v));
    }
    out.emplace_back(std::move(members));
  }
  return out;
}

}  // namespace

BenchResult run_bench(std::uint64_t seed) {
  BenchResult bench;
  const int saved_threads = worker_threads();
  set_worker_threads(1);  // scaling exponents want serial timings

  {
    std::vector<double> sizes, times;
    for (int n : {8, 16, 32, 64}) {
      const auto groups = random_walk_groups(4, n, 100, 2, mix64(seed ^ 0x5e5ULL));
      const double t = time_call([&] { ses_feature_matrix(groups, 2, 2); });
      sizes.push_back(n);
      times.push_back(t);
      bench.samples.push_back({"ses_vs_group_size", static_cast<double>(n), t});
    }
    bench.ses_group_size_exponent = fit_log_slope(sizes, times);
  }
  {
    std::vector<double> sizes, times;
    for (int n : {4, 8, 16, 32}) {
      const auto groups = random_walk_groups(4, n, 30, 2, mix64(seed ^ 0x6e5ULL));
      const double t = time_call([&] { mmd_gram(groups, 0); });
      sizes.push_back(n);
      times.push_back(t);
      bench.samples.push_back({"kes_vs_group_size", static_cast<double>(n), t});
    }
    bench.kes_group_size_exponent = fit_log_slope(sizes, times);
  }
  {
    std::vector<double> sizes, times;
    for (int l : {128, 256, 512, 1024}) {
      const auto groups = random_walk_groups(2, 1, l, 2, mix64(seed ^ 0x7de5ULL));
      const TimeSeries& x = groups[0].series[0];
      const TimeSeries& y = groups[1].series[0];
      const double t = time_call([&] { pde_solve(x, y, 0); });
      sizes.push_back(l);
      times.push_back(t);
      bench.samples.push_back({"pde_vs_length", static_cast<double>(l), t});
    }
    bench.pde_length_exponent = fit_log_slope(sizes, times);
  }

  set_worker_threads(saved_threads);
  return bench;
}

void write_bench_csv(const BenchResult& bench, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bench CSV: " + path);
  out << "quantity,size,seconds\n";
  for (const auto& s : bench.samples)
    out << s.quantity << ',' << format_double(s.size) << ',' << format_double(s.seconds) << "\n";
  out << "exponent,ses_vs_group_size," << format_double(bench.ses_group_size_exponent) << "\n";
  out << "exponent,kes_vs_group_size," << format_double(bench.kes_group_size_exponent) << "\n";
  out << "exponent,pde_vs_length," << format_double(bench.pde_length_exponent) << "\n";
}

}  // namespace sigdr
