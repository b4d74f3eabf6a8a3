#pragma once

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace sigdr {

// A d-dimensional time series with strictly increasing timestamps,
// interpreted downstream as the piecewise-linear path through its samples.
struct TimeSeries {
  Eigen::VectorXd times;   // length l >= 2, strictly increasing
  Eigen::MatrixXd values;  // l x d, all entries finite

  TimeSeries() = default;
  TimeSeries(Eigen::VectorXd t, Eigen::MatrixXd v);

  int length() const { return static_cast<int>(times.size()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

// A group of series of uniform dimension, representing the empirical
// measure (1/N) sum_p delta_{x^p}. Lengths and time grids may differ.
struct EmpiricalMeasure {
  std::vector<TimeSeries> series;

  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::vector<TimeSeries> members);

  int size() const { return static_cast<int>(series.size()); }
  int dim() const { return series.empty() ? 0 : series.front().dim(); }
};

// Labeled groups.
struct Dataset {
  std::vector<EmpiricalMeasure> groups;
  Eigen::VectorXd labels;

  Dataset() = default;
  Dataset(std::vector<EmpiricalMeasure> g, Eigen::VectorXd y);

  int size() const { return static_cast<int>(groups.size()); }
  int dim() const { return groups.empty() ? 0 : groups.front().dim(); }
};

// Adjoins the normalized timestamp (t - t_1)/(t_l - t_1) as coordinate 0;
// the remaining coordinates are unchanged.
TimeSeries time_augment(const TimeSeries& ts);

// Lead-lag transform: output dimension 2d, length 2l-1, channels ordered
// (lead_1, lag_1, lead_2, lag_2, ...). Original timestamps are discarded
// in favour of a synthetic uniform grid 1..2l-1; only the knot ordering
// matters for signatures.
TimeSeries lead_lag(const TimeSeries& ts);

// Drops each interior sample independently with probability drop_rate;
// endpoints are always kept and surviving timestamps are unchanged.
TimeSeries subsample(const TimeSeries& ts, double drop_rate, std::mt19937_64& rng);

// Linear interpolation of the series onto new_times, which must be strictly
// increasing and contained in [times.front(), times.back()].
TimeSeries resample_linear(const TimeSeries& ts, const Eigen::VectorXd& new_times);

// Per-channel affine scaler (z-scoring) fitted on a training collection and
// applied to any series of the same dimension. Channels with zero spread
// are left unscaled.
struct ChannelScaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static ChannelScaler fit(const std::vector<EmpiricalMeasure>& groups);
  TimeSeries apply(const TimeSeries& ts) const;
  EmpiricalMeasure apply(const EmpiricalMeasure& g) const;
};

// Dataset CSV interchange. Data file header: group_id,series_id,time,dim_0,
// ...,dim_{d-1}, one row per sample, rows in any order (sorted by time
// within each series on load; duplicate timestamps within a series are an
// error). Labels file header: group_id,label.
Dataset load_dataset_csv(const std::string& data_path, const std::string& labels_path);
void save_dataset_csv(const Dataset& ds, const std::string& data_path,
                      const std::string& labels_path);

}  // namespace sigdr
