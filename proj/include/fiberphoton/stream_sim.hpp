#pragma once

#include "fiberphoton/emitter_model.hpp"

#include <cstdint>
#include <vector>

namespace fiberphoton {

struct SimConfig {
  double duration_s = 0.0;
  double dt_s = 0.0;  // 0 selects the stability bound automatically
  std::uint64_t seed = 1;
  DriveField drive;
  TwoLevelEmitter emitter;
  double eta_det = 1.0;
  double split_ratio = 0.5;  // probability of channel A
  double bg_rate_a = 0.0;    // counts/s
  double bg_rate_b = 0.0;
  double dead_time_s = 50e-9;
  std::int64_t resolution_ps = 1;
};

// Two detector channels; timestamps in integer picoseconds, sorted per channel.
struct TagStream {
  std::vector<std::int64_t> a;
  std::vector<std::int64_t> b;

  std::size_t size() const { return a.size() + b.size(); }
};

// Largest integration step the jump algorithm accepts for this configuration.
double stability_dt(const SimConfig& config);

// Stochastic-wavefunction trajectory of the driven two-level system.
// Emission times in seconds, reproducible bit-for-bit for a given config.
std::vector<double> simulate_emissions(const SimConfig& config);

// Detection efficiency, beamsplitter routing, Poissonian background,
// timestamp quantization, per-channel dead time.
TagStream detect_and_split(const std::vector<double>& emissions_s, const SimConfig& config);

}  // namespace fiberphoton
