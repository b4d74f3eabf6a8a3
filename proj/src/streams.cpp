#include "sigdr/streams.hpp"

#include "sigdr/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sigdr {

TimeSeries::TimeSeries(Eigen::VectorXd t, Eigen::MatrixXd v)
    : times(std::move(t)), values(std::move(v)) {
  if (times.size() < 2) throw std::invalid_argument("TimeSeries: need at least 2 samples");
  if (values.rows() != times.size())
    throw std::invalid_argument("TimeSeries: values row count must match timestamps");
  if (values.cols() < 1) throw std::invalid_argument("TimeSeries: dimension must be >= 1");
  if (!times.allFinite() || !values.allFinite())
    throw std::invalid_argument("TimeSeries: non-finite entries");
  for (int i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("TimeSeries: timestamps must be strictly increasing");
  }
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<TimeSeries> members) : series(std::move(members)) {
  if (series.empty()) throw std::invalid_argument("EmpiricalMeasure: at least one series required");
  const int d = series.front().dim();
  for (const auto& ts : series) {
    if (ts.dim() != d)
      throw std::invalid_argument("EmpiricalMeasure: member dimensions must agree");
  }
}

Dataset::Dataset(std::vector<EmpiricalMeasure> g, Eigen::VectorXd y)
    : groups(std::move(g)), labels(std::move(y)) {
  if (static_cast<int>(groups.size()) != labels.size())
    throw std::invalid_argument("Dataset: group and label counts differ");
  if (!labels.allFinite()) throw std::invalid_argument("Dataset: non-finite label");
  if (!groups.empty()) {
    const int d = groups.front().dim();
    for (const auto& g2 : groups) {
      if (g2.dim() != d) throw std::invalid_argument("Dataset: group dimensions must agree");
    }
  }
}

TimeSeries time_augment(const TimeSeries& ts) {
  const int l = ts.length();
  const double t0 = ts.times[0];
  const double span = ts.times[l - 1] - t0;
  Eigen::MatrixXd out(l, ts.dim() + 1);
  out.col(0) = (ts.times.array() - t0) / span;
  out.rightCols(ts.dim()) = ts.values;
  return TimeSeries(ts.times, std::move(out));
}

TimeSeries lead_lag(const TimeSeries& ts) {
  const int l = ts.length();
  const int d = ts.dim();
  const int m = 2 * l - 1;
  Eigen::MatrixXd out(m, 2 * d);
  for (int p = 1; p <= m; ++p) {
    // 1-based rule: lead_p = x_k for p = 2k-1 or 2k-2; lag_p = x_k for
    // p = 2k-1 or 2k.
    const int lead_k = (p % 2 == 1) ? (p + 1) / 2 : (p + 2) / 2;
    const int lag_k = (p % 2 == 1) ? (p + 1) / 2 : p / 2;
    for (int c = 0; c < d; ++c) {
      out(p - 1, 2 * c) = ts.values(lead_k - 1, c);
      out(p - 1, 2 * c + 1) = ts.values(lag_k - 1, c);
    }
  }
  return TimeSeries(Eigen::VectorXd::LinSpaced(m, 1.0, static_cast<double>(m)), std::move(out));
}

TimeSeries subsample(const TimeSeries& ts, double drop_rate, std::mt19937_64& rng) {
  if (!(drop_rate >= 0.0 && drop_rate < 1.0))
    throw std::invalid_argument("subsample: drop_rate must be in [0,1)");
  const int l = ts.length();
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(l));
  keep.push_back(0);
  for (int i = 1; i < l - 1; ++i) {
    if (uniform01(rng) >= drop_rate) keep.push_back(i);
  }
  keep.push_back(l - 1);
  if (static_cast<int>(keep.size()) < 2)
    throw std::invalid_argument("subsample: fewer than 2 surviving samples");
  Eigen::VectorXd t(keep.size());
  Eigen::MatrixXd v(keep.size(), ts.dim());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    t[static_cast<int>(i)] = ts.times[keep[i]];
    v.row(static_cast<int>(i)) = ts.values.row(keep[i]);
  }
  return TimeSeries(std::move(t), std::move(v));
}

TimeSeries resample_linear(const TimeSeries& ts, const Eigen::VectorXd& new_times) {
  if (new_times.size() < 2) throw std::invalid_argument("resample_linear: need >= 2 timestamps");
  if (new_times[0] < ts.times[0] || new_times[new_times.size() - 1] > ts.times[ts.length() - 1])
    throw std::invalid_argument("resample_linear: target grid escapes the series time range");
  Eigen::MatrixXd v(new_times.size(), ts.dim());
  int seg = 0;
  for (int i = 0; i < new_times.size(); ++i) {
    const double t = new_times[i];
    while (seg < ts.length() - 2 && ts.times[seg + 1] < t) ++seg;
    const double t0 = ts.times[seg], t1 = ts.times[seg + 1];
    const double w = (t - t0) / (t1 - t0);
    v.row(i) = (1.0 - w) * ts.values.row(seg) + w * ts.values.row(seg + 1);
  }
  return TimeSeries(new_times, std::move(v));
}

ChannelScaler ChannelScaler::fit(const std::vector<EmpiricalMeasure>& groups) {
  if (groups.empty()) throw std::invalid_argument("ChannelScaler::fit: no groups");
  const int d = groups.front().dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(d);
  std::int64_t count = 0;
  for (const auto& g : groups) {
    for (const auto& ts : g.series) {
      if (ts.dim() != d) throw std::invalid_argument("ChannelScaler::fit: dimension mismatch");
      sum += ts.values.colwise().sum().transpose();
      sum_sq += ts.values.array().square().colwise().sum().matrix().transpose();
      count += ts.length();
    }
  }
  ChannelScaler s;
  s.mean = sum / static_cast<double>(count);
  Eigen::VectorXd var =
      sum_sq / static_cast<double>(count) - s.mean.array().square().matrix();
  s.scale = var.array().max(0.0).sqrt();
  for (int c = 0; c < d; ++c) {
    if (s.scale[c] <= 0.0) s.scale[c] = 1.0;
  }
  return s;
}

TimeSeries ChannelScaler::apply(const TimeSeries& ts) const {
  if (ts.dim() != mean.size())
    throw std::invalid_argument("ChannelScaler::apply: dimension mismatch");
  Eigen::MatrixXd v = (ts.values.rowwise() - mean.transpose()).array().rowwise() /
                      scale.transpose().array();
  return TimeSeries(ts.times, std::move(v));
}

EmpiricalMeasure ChannelScaler::apply(const EmpiricalMeasure& g) const {
  std::vector<TimeSeries> out;
  out.reserve(g.series.size());
  for (const auto& ts : g.series) out.push_back(apply(ts));
  return EmpiricalMeasure(std::move(out));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("CSV parse error (" + context + "): bad number '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("CSV parse error (" + context + "): bad integer '" + s + "'");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_dataset_csv(const std::string& data_path, const std::string& labels_path) {
  std::ifstream data(data_path);
  if (!data) throw std::runtime_error("cannot open data CSV: " + data_path);
  std::string line;
  if (!std::getline(data, line)) throw std::runtime_error("empty data CSV: " + data_path);
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "group_id" || header[1] != "series_id" ||
      header[2] != "time")
    throw std::runtime_error("bad data CSV header in " + data_path);
  const int d = static_cast<int>(header.size()) - 3;

  struct Sample {
    double time;
    Eigen::VectorXd value;
  };
  std::map<long, std::map<long, std::vector<Sample>>> table;  // group -> series -> samples
  std::size_t line_no = 1;
  while (std::getline(data, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string ctx = data_path + ":" + std::to_string(line_no);
    if (static_cast<int>(f.size()) != d + 3)
      throw std::runtime_error("CSV parse error (" + ctx + "): wrong field count");
    Sample s;
    s.time = parse_double(f[2], ctx);
    s.value.resize(d);
    for (int c = 0; c < d; ++c) s.value[c] = parse_double(f[3 + static_cast<std::size_t>(c)], ctx);
    table[parse_long(f[0], ctx)][parse_long(f[1], ctx)].push_back(std::move(s));
  }

  std::ifstream labels(labels_path);
  if (!labels) throw std::runtime_error("cannot open labels CSV: " + labels_path);
  if (!std::getline(labels, line) || split_csv_line(line) != std::vector<std::string>{"group_id", "label"})
    throw std::runtime_error("bad labels CSV header in " + labels_path);
  std::map<long, double> label_map;
  line_no = 1;
  while (std::getline(labels, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string ctx = labels_path + ":" + std::to_string(line_no);
    if (f.size() != 2) throw std::runtime_error("CSV parse error (" + ctx + "): wrong field count");
    label_map[parse_long(f[0], ctx)] = parse_double(f[1], ctx);
  }

  std::vector<EmpiricalMeasure> groups;
  Eigen::VectorXd y(static_cast<int>(table.size()));
  int gi = 0;
  for (auto& [group_id, series_map] : table) {
    auto it = label_map.find(group_id);
    if (it == label_map.end())
      throw std::runtime_error("group " + std::to_string(group_id) + " has no label");
    y[gi++] = it->second;
    std::vector<TimeSeries> members;
    for (auto& [series_id, samples] : series_map) {
      std::stable_sort(samples.begin(), samples.end(),
                       [](const Sample& a, const Sample& b) { return a.time < b.time; });
      Eigen::VectorXd t(static_cast<int>(samples.size()));
      Eigen::MatrixXd v(static_cast<int>(samples.size()), d);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i > 0 && !(samples[i].time > samples[i - 1].time))
          throw std::runtime_error("duplicate timestamp in group " + std::to_string(group_id) +
                                   ", series " + std::to_string(series_id));
        t[static_cast<int>(i)] = samples[i].time;
        v.row(static_cast<int>(i)) = samples[i].value.transpose();
      }
      members.emplace_back(std::move(t), std::move(v));
    }
    groups.emplace_back(std::move(members));
  }
  if (label_map.size() != table.size())
    throw std::runtime_error("labels CSV lists groups absent from the data CSV");
  return Dataset(std::move(groups), std::move(y));
}

void save_dataset_csv(const Dataset& ds, const std::string& data_path,
                      const std::string& labels_path) {
  std::ofstream data(data_path);
  if (!data) throw std::runtime_error("cannot write data CSV: " + data_path);
  const int d = ds.dim();
  data << "group_id,series_id,time";
  for (int c = 0; c < d; ++c) data << ",dim_" << c;
  data << "\n";
  for (int g = 0; g < ds.size(); ++g) {
    const auto& group = ds.groups[static_cast<std::size_t>(g)];
    for (int s = 0; s < group.size(); ++s) {
      const auto& ts = group.series[static_cast<std::size_t>(s)];
      for (int i = 0; i < ts.length(); ++i) {
        data << g << ',' << s << ',' << format_double(ts.times[i]);
        for (int c = 0; c < d; ++c) data << ',' << format_double(ts.values(i, c));
        data << "\n";
      }
    }
  }
  std::ofstream labels(labels_path);
  if (!labels) throw std::runtime_error("cannot write labels CSV: " + labels_path);
  labels << "group_id,label\n";
  for (int g = 0; g < ds.size(); ++g) labels << g << ',' << format_double(ds.labels[g]) << "\n";
}

}  // namespace sigdr
