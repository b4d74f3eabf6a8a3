#pragma once

#include "sigdr/streams.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace sigdr {

// ---------------------------------------------------------------------------
// Defective electronic device: voltage sin(w t) and current sin(w t - phi)
// recorded over `periods` periods at `points_per_period` samples per period,
// then independently subsampled per device.

struct CircuitConfig {
  int groups = 50;            // circuits
  int devices = 15;           // measuring devices per circuit
  int periods = 20;
  int points_per_period = 25;
  double omega = 6.283185307179586476925286766559;  // one period per time unit
  double phase_min = 0.39269908169872415481;        // pi/8
  double phase_max = 1.5707963267948966192;         // pi/2
  double drop_rate = 0.0;
  std::uint64_t seed = 0;
};

Dataset gen_circuit(const CircuitConfig& cfg);

// ---------------------------------------------------------------------------
// Ideal gas: N hard spheres in a cubic box, speed sqrt(T), specular wall
// reflections and elastic equal-mass pair collisions, fixed-step
// integration. Output series are the 3-d position trajectories.

struct GasConfig {
  int groups = 50;
  int particles = 20;
  double box_side = 3.0;
  // Hard-sphere radius radius_factor * (V0/N)^(1/3) with the nominal volume
  // V0 numerically equal to box_side; presets 0.35 (few collisions) and
  // 0.65 (many collisions).
  double radius_factor = 0.35;
  double temp_min = 1.0;
  double temp_max = 1000.0;
  int steps = 150;
  double dt = 0.0;  // 0 picks r / (4 sqrt(temp_max)), bounding step travel by r/4
  std::uint64_t seed = 0;
};

double gas_radius(const GasConfig& cfg);
double gas_time_step(const GasConfig& cfg);

struct GasGroup {
  std::vector<TimeSeries> series;
  long collisions = 0;
  double initial_energy = 0.0;
  double final_energy = 0.0;
};

// One gas at a given temperature; exposed so tests can reach the collision
// counter and energy bookkeeping.
GasGroup simulate_gas_group(const GasConfig& cfg, double temperature, std::mt19937_64& rng);

Dataset gen_ideal_gas(const GasConfig& cfg);

// ---------------------------------------------------------------------------
// Fractional Brownian motion and the rough-volatility fOU model.

// Exact fBM sample on the uniform grid over [0,1] with `length` points and
// W_0 = 0, by circulant embedding of the fractional Gaussian noise
// covariance (eigenvalues clipped at -1e-12); falls back to a Cholesky
// factorization for length <= 2000 when the embedding is not PSD.
TimeSeries gen_fbm(double hurst, int length, std::mt19937_64& rng);

struct RoughVolConfig {
  int groups = 50;
  int paths = 20;  // trajectories per group
  int length = 200;
  double hurst = 0.2;
  double reversion_min = 1e-6;
  double reversion_max = 1.0;  // must stay < 2 (unit-step Euler stability)
  double fou_mean = 0.0;       // m; paths start at P_0 = m
  double fou_vol = 0.1;        // nu
  std::uint64_t seed = 0;
};

// Volatility paths sigma_t = exp(P_t) with P an Euler-Maruyama fOU on the
// unit-spaced output grid t_k = k, driven by exact fractional Gaussian
// noise (gen_fbm increments rescaled to unit spacing by self-similarity);
// the group label is the mean-reversion parameter drawn uniformly from
// [reversion_min, reversion_max].
Dataset gen_rough_vol(const RoughVolConfig& cfg);

}  // namespace sigdr
