#pragma once

#include "sigdr/regress.hpp"
#include "sigdr/streams.hpp"
#include "sigdr/synthdata.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sigdr {

struct SweepSpec {
  std::string parameter;  // a generator_config key, e.g. "drop_rate"
  std::vector<double> values;
};

// A full experiment: dataset source, method, preprocessing, grids and the
// repeated-split evaluation protocol.
struct ExperimentConfig {
  std::string generator;  // "circuit" | "ideal_gas" | "rough_vol" | "csv"
  nlohmann::json generator_config = nlohmann::json::object();
  std::string data_csv;
  std::string labels_csv;

  Method method = Method::kes;
  std::optional<Preprocessing> prep;  // per-generator defaults when unset
  HyperGrid grid;                     // method defaults when empty
  SesOptions ses;
  int refinement = 0;

  int repeats = 5;
  double train_fraction = 0.8;
  int folds = 5;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int threads = 0;
  std::optional<SweepSpec> sweep;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
  nlohmann::json to_json() const;

  // Effective preprocessing, falling back to the generator's convention
  // (circuit: none; ideal gas: lead-lag + time; rough volatility: time).
  Preprocessing effective_prep() const;
  HyperGrid effective_grid() const;
};

struct RepeatResult {
  int repeat = 0;
  double mse = 0.0;
  double mape = 0.0;  // NaN when a zero label makes MAPE undefined
  HyperParams best;
  double cv_mse = 0.0;
  double cv_seconds = 0.0;
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

struct RunResult {
  std::optional<double> sweep_value;
  std::vector<RepeatResult> repeats;
  double mean_mse = 0.0, std_mse = 0.0;
  double mean_mape = 0.0, std_mape = 0.0;
  double generate_seconds = 0.0;
  double total_seconds = 0.0;
};

struct Report {
  nlohmann::json config;
  std::vector<RunResult> runs;
};

// Builds the dataset for one run (generator seeded from the experiment seed,
// or CSV paths), applying the sweep override when given.
Dataset build_dataset(const ExperimentConfig& cfg, const std::optional<double>& sweep_value);

// Per repeat: split, grid-search on the training split, refit the winner,
// evaluate on the held-out groups. All randomness derives from (seed,
// repeat index).
Report run_experiment(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const Report& report);

// Writes report.json, summary.csv and (for sweep configs) curve.csv.
void emit_report(const Report& report, const std::string& out_dir);

// Deterministic train/test split of m groups.
std::pair<std::vector<int>, std::vector<int>> train_test_split(int m, double train_fraction,
                                                               std::uint64_t seed,
                                                               std::uint64_t repeat);

// ---------------------------------------------------------------------------
// Complexity measurements backing the `bench` subcommand.

struct BenchSample {
  std::string quantity;  // "ses_vs_group_size" | "kes_vs_group_size" | "pde_vs_length"
  double size = 0.0;
  double seconds = 0.0;
};

struct BenchResult {
  double ses_group_size_exponent = 0.0;
  double kes_group_size_exponent = 0.0;
  double pde_length_exponent = 0.0;
  std::vector<BenchSample> samples;
};

BenchResult run_bench(std::uint64_t seed);
void write_bench_csv(const BenchResult& bench, const std::string& path);

}  // namespace sigdr
