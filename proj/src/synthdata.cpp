#include "sigdr/synthdata.hpp"

#include "sigdr/errors.hpp"
#include "sigdr/parallel.hpp"
#include "sigdr/rng.hpp"

#include <unsupported/Eigen/FFT>

#include <Eigen/Cholesky>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace sigdr {

// ---------------------------------------------------------------------------
// Circuit

Dataset gen_circuit(const CircuitConfig& cfg) {
  if (cfg.groups < 1 || cfg.devices < 1)
    throw std::invalid_argument("gen_circuit: groups and devices must be >= 1");
  if (cfg.periods < 1 || cfg.points_per_period < 2)
    throw std::invalid_argument("gen_circuit: bad sampling configuration");
  if (!(cfg.phase_min > 0.0 && cfg.phase_max < 3.14159265358979323846 &&
        cfg.phase_min < cfg.phase_max))
    throw std::invalid_argument("gen_circuit: phase range must lie within (0, pi)");
  if (!(cfg.drop_rate >= 0.0 && cfg.drop_rate < 1.0))
    throw std::invalid_argument("gen_circuit: drop_rate must be in [0,1)");

  const int l = cfg.periods * cfg.points_per_period;
  const double period = 2.0 * 3.14159265358979323846 / cfg.omega;
  const double step = period / cfg.points_per_period;
  Eigen::VectorXd grid(l);
  for (int i = 0; i < l; ++i) grid[i] = step * i;

  std::vector<EmpiricalMeasure> groups(static_cast<std::size_t>(cfg.groups));
  Eigen::VectorXd labels(cfg.groups);
  parallel_for(cfg.groups, [&](std::int64_t gi) {
    auto rng = derive_rng(cfg.seed, static_cast<std::uint64_t>(gi));
    const double phi = uniform(rng, cfg.phase_min, cfg.phase_max);
    labels[static_cast<int>(gi)] = phi;

    Eigen::MatrixXd values(l, 2);
    for (int i = 0; i < l; ++i) {
      values(i, 0) = std::sin(cfg.omega * grid[i]);
      values(i, 1) = std::sin(cfg.omega * grid[i] - phi);
    }
    const TimeSeries full(grid, values);

    std::vector<TimeSeries> devices;
    devices.reserve(static_cast<std::size_t>(cfg.devices));
    for (int p = 0; p < cfg.devices; ++p) {
      devices.push_back(cfg.drop_rate == 0.0 ? full : subsample(full, cfg.drop_rate, rng));
    }
    groups[static_cast<std::size_t>(gi)] = EmpiricalMeasure(std::move(devices));
  });
  return Dataset(std::move(groups), std::move(labels));
}

// ---------------------------------------------------------------------------
// Ideal gas

double gas_radius(const GasConfig& cfg) {
  return cfg.radius_factor * std::cbrt(cfg.box_side / static_cast<double>(cfg.particles));
}

double gas_time_step(const GasConfig& cfg) {
  if (cfg.dt > 0.0) return cfg.dt;
  return gas_radius(cfg) / (4.0 * std::sqrt(cfg.temp_max > 0.0 ? cfg.temp_max : 1.0));
}

namespace {

void validate_gas(const GasConfig& cfg) {
  if (cfg.groups < 1 || cfg.particles < 1)
    throw std::invalid_argument("gen_ideal_gas: groups and particles must be >= 1");
  if (cfg.steps < 1) throw std::invalid_argument("gen_ideal_gas: steps must be >= 1");
  if (!(cfg.box_side > 0.0)) throw std::invalid_argument("gen_ideal_gas: box_side must be > 0");
  if (!(cfg.temp_min >= 0.0 && cfg.temp_max >= cfg.temp_min))
    throw std::invalid_argument("gen_ideal_gas: bad temperature range");
  if (!(gas_time_step(cfg) > 0.0)) throw std::invalid_argument("gen_ideal_gas: dt must be > 0");
  const double r = gas_radius(cfg);
  const double packing = cfg.particles * (4.0 / 3.0) * 3.14159265358979323846 * r * r * r /
                         (cfg.box_side * cfg.box_side * cfg.box_side);
  // Random sequential placement saturates near 38% in 3-d; reject configs
  // the placement loop cannot realistically satisfy.
  if (2.0 * r >= cfg.box_side || packing > 0.3)
    throw std::invalid_argument("gen_ideal_gas: spheres of this radius do not fit the box");
}

}  // namespace

GasGroup simulate_gas_group(const GasConfig& cfg, double temperature, std::mt19937_64& rng) {
  validate_gas(cfg);
  const int n = cfg.particles;
  const double r = gas_radius(cfg);
  const double dt = gas_time_step(cfg);
  const double side = cfg.box_side;
  const double speed = std::sqrt(temperature);

  Eigen::MatrixXd pos(n, 3);
  for (int p = 0; p < n; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      Eigen::RowVector3d cand;
      for (int c = 0; c < 3; ++c) cand[c] = uniform(rng, r, side - r);
      placed = true;
      for (int q = 0; q < p; ++q) {
        if ((pos.row(q) - cand).squaredNorm() < 4.0 * r * r) {
          placed = false;
          break;
        }
      }
      if (placed) pos.row(p) = cand;
    }
    if (!placed)
      throw std::runtime_error("gen_ideal_gas: failed to place particle " + std::to_string(p) +
                               " after 10000 rejection attempts");
  }

  Eigen::MatrixXd vel(n, 3);
  for (int p = 0; p < n; ++p) {
    // Uniform direction from normalized Gaussians.
    Eigen::RowVector3d dir;
    do {
      for (int c = 0; c < 3; ++c) dir[c] = gaussian(rng);
    } while (dir.norm() == 0.0);
    vel.row(p) = speed * dir.normalized();
  }

  GasGroup out;
  out.initial_energy = 0.5 * vel.array().square().sum();

  const int l = cfg.steps + 1;
  std::vector<Eigen::MatrixXd> frames;
  frames.reserve(static_cast<std::size_t>(l));
  frames.push_back(pos);

  for (int step = 0; step < cfg.steps; ++step) {
    pos += dt * vel;
    // Specular wall reflections.
    for (int p = 0; p < n; ++p) {
      for (int c = 0; c < 3; ++c) {
        double x = pos(p, c);
        double v = vel(p, c);
        while (x < r || x > side - r) {
          if (x < r) x = 2.0 * r - x;
          if (x > side - r) x = 2.0 * (side - r) - x;
          v = -v;
        }
        pos(p, c) = x;
        vel(p, c) = v;
      }
    }
    // Elastic impulse between overlapping, approaching pairs.
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const Eigen::RowVector3d dx = pos.row(p) - pos.row(q);
        const double d2 = dx.squaredNorm();
        if (d2 >= 4.0 * r * r || d2 == 0.0) continue;
        const Eigen::RowVector3d dv = vel.row(p) - vel.row(q);
        const double approach = dx.dot(dv);
        if (approach >= 0.0) continue;
        const Eigen::RowVector3d impulse = (approach / d2) * dx;
        vel.row(p) -= impulse;
        vel.row(q) += impulse;
        ++out.collisions;
      }
    }
    frames.push_back(pos);
  }

  out.final_energy = 0.5 * vel.array().square().sum();

  Eigen::VectorXd times(l);
  for (int i = 0; i < l; ++i) times[i] = dt * i;
  out.series.reserve(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    Eigen::MatrixXd traj(l, 3);
    for (int i = 0; i < l; ++i) traj.row(i) = frames[static_cast<std::size_t>(i)].row(p);
    out.series.emplace_back(times, std::move(traj));
  }
  return out;
}

Dataset gen_ideal_gas(const GasConfig& cfg) {
  validate_gas(cfg);
  std::vector<EmpiricalMeasure> groups(static_cast<std::size_t>(cfg.groups));
  Eigen::VectorXd labels(cfg.groups);
  parallel_for(cfg.groups, [&](std::int64_t gi) {
    auto rng = derive_rng(cfg.seed, static_cast<std::uint64_t>(gi));
    const double temp = uniform(rng, cfg.temp_min, cfg.temp_max);
    labels[static_cast<int>(gi)] = temp;
    groups[static_cast<std::size_t>(gi)] =
        EmpiricalMeasure(simulate_gas_group(cfg, temp, rng).series);
  });
  return Dataset(std::move(groups), std::move(labels));
}

// ---------------------------------------------------------------------------
// fBM / rough volatility

namespace {

// Unit-spacing fractional Gaussian noise autocovariance.
double fgn_autocov(double hurst, int k) {
  const double h2 = 2.0 * hurst;
  const double kk = static_cast<double>(k);
  return 0.5 * (std::pow(std::abs(kk + 1.0), h2) - 2.0 * std::pow(std::abs(kk), h2) +
                std::pow(std::abs(kk - 1.0), h2));
}

// m unit-spacing fGn samples by circulant embedding; returns false when the
// embedding has eigenvalues below the clipping tolerance.
bool fgn_davies_harte(double hurst, int m, std::mt19937_64& rng, Eigen::VectorXd& out) {
  const int size = 2 * m;
  Eigen::VectorXd circ(size);
  for (int k = 0; k <= m; ++k) circ[k] = fgn_autocov(hurst, k);
  for (int k = m + 1; k < size; ++k) circ[k] = circ[size - k];

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq(static_cast<std::size_t>(size));
  std::vector<double> circ_std(circ.data(), circ.data() + size);
  fft.fwd(freq, circ_std);

  Eigen::VectorXd lambda(size);
  double max_lambda = 0.0;
  for (int k = 0; k < size; ++k) {
    lambda[k] = freq[static_cast<std::size_t>(k)].real();
    max_lambda = std::max(max_lambda, std::abs(lambda[k]));
  }
  for (int k = 0; k < size; ++k) {
    if (lambda[k] < -1e-12 * std::max(1.0, max_lambda)) return false;
    if (lambda[k] < 0.0) lambda[k] = 0.0;
  }

  std::vector<std::complex<double>> spectral(static_cast<std::size_t>(size));
  spectral[0] = std::sqrt(lambda[0]) * gaussian(rng);
  spectral[static_cast<std::size_t>(m)] = std::sqrt(lambda[m]) * gaussian(rng);
  const double inv_sqrt2 = 0.70710678118654752440;
  for (int k = 1; k < m; ++k) {
    const double a = gaussian(rng);
    const double b = gaussian(rng);
    const std::complex<double> z(a * inv_sqrt2, b * inv_sqrt2);
    spectral[static_cast<std::size_t>(k)] = std::sqrt(lambda[k]) * z;
    spectral[static_cast<std::size_t>(size - k)] = std::sqrt(lambda[k]) * std::conj(z);
  }

  std::vector<std::complex<double>> time_domain(static_cast<std::size_t>(size));
  fft.fwd(time_domain, spectral);
  out.resize(m);
  const double norm = 1.0 / std::sqrt(static_cast<double>(size));
  for (int k = 0; k < m; ++k) out[k] = time_domain[static_cast<std::size_t>(k)].real() * norm;
  return true;
}

void fgn_cholesky(double hurst, int m, std::mt19937_64& rng, Eigen::VectorXd& out) {
  if (m > 2000)
    throw NumericalError("gen_fbm: circulant embedding failed and the series is too long for "
                         "the Cholesky fallback");
  Eigen::MatrixXd cov(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) cov(i, j) = fgn_autocov(hurst, std::abs(i - j));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("gen_fbm: fGn covariance is not positive definite");
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) z[i] = gaussian(rng);
  out = llt.matrixL() * z;
}

// m unit-spacing fGn increments.
Eigen::VectorXd fgn_sample(double hurst, int m, std::mt19937_64& rng) {
  Eigen::VectorXd out;
  if (!fgn_davies_harte(hurst, m, rng, out)) fgn_cholesky(hurst, m, rng, out);
  return out;
}

}  // namespace

TimeSeries gen_fbm(double hurst, int length, std::mt19937_64& rng) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("gen_fbm: hurst must be in (0,1)");
  if (length < 2) throw std::invalid_argument("gen_fbm: length must be >= 2");
  const int m = length - 1;
  const double delta = 1.0 / static_cast<double>(m);
  const Eigen::VectorXd fgn = fgn_sample(hurst, m, rng);
  const double scale = std::pow(delta, hurst);  // self-similarity to step delta

  Eigen::VectorXd times(length);
  Eigen::MatrixXd values(length, 1);
  times[0] = 0.0;
  values(0, 0) = 0.0;
  for (int k = 1; k < length; ++k) {
    times[k] = delta * k;
    values(k, 0) = values(k - 1, 0) + scale * fgn[k - 1];
  }
  return TimeSeries(std::move(times), std::move(values));
}

Dataset gen_rough_vol(const RoughVolConfig& cfg) {
  if (cfg.groups < 1 || cfg.paths < 1)
    throw std::invalid_argument("gen_rough_vol: groups and paths must be >= 1");
  if (cfg.length < 2) throw std::invalid_argument("gen_rough_vol: length must be >= 2");
  if (!(cfg.hurst > 0.0 && cfg.hurst < 1.0))
    throw std::invalid_argument("gen_rough_vol: hurst must be in (0,1)");
  if (!(cfg.reversion_min >= 0.0 && cfg.reversion_max >= cfg.reversion_min))
    throw std::invalid_argument("gen_rough_vol: bad mean-reversion range");
  if (!(cfg.reversion_max < 2.0))
    throw std::invalid_argument(
        "gen_rough_vol: reversion_max must be < 2 for a stable unit-step Euler scheme");
  if (cfg.fou_mean < 0.0 || cfg.fou_vol < 0.0)
    throw std::invalid_argument("gen_rough_vol: fou_mean and fou_vol must be >= 0");

  // Unit-spaced output grid t_k = k; over a [0,1]-normalized clock the
  // mean-reversion range would barely act before the horizon. The driving
  // increments are exact unit-spacing fractional Gaussian noise, i.e. the
  // gen_fbm increments rescaled by (l-1)^H (self-similarity).
  const int l = cfg.length;
  std::vector<EmpiricalMeasure> groups(static_cast<std::size_t>(cfg.groups));
  Eigen::VectorXd labels(cfg.groups);
  Eigen::VectorXd grid(l);
  for (int k = 0; k < l; ++k) grid[k] = static_cast<double>(k);
  parallel_for(cfg.groups, [&](std::int64_t gi) {
    auto rng = derive_rng(cfg.seed, static_cast<std::uint64_t>(gi));
    const double a = uniform(rng, cfg.reversion_min, cfg.reversion_max);
    labels[static_cast<int>(gi)] = a;

    std::vector<TimeSeries> paths;
    paths.reserve(static_cast<std::size_t>(cfg.paths));
    for (int p = 0; p < cfg.paths; ++p) {
      const Eigen::VectorXd fgn = fgn_sample(cfg.hurst, l - 1, rng);
      Eigen::MatrixXd sigma(l, 1);
      double state = cfg.fou_mean;
      sigma(0, 0) = std::exp(state);
      for (int k = 1; k < l; ++k) {
        state += -a * (state - cfg.fou_mean) + cfg.fou_vol * fgn[k - 1];
        sigma(k, 0) = std::exp(state);
      }
      paths.emplace_back(grid, std::move(sigma));
    }
    groups[static_cast<std::size_t>(gi)] = EmpiricalMeasure(std::move(paths));
  });
  return Dataset(std::move(groups), std::move(labels));
}

}  // namespace sigdr
