#include "fiberphoton/stream_sim.hpp"

#include "fiberphoton/units.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

namespace fiberphoton {

namespace {

using cplx = std::complex<double>;

// Distributions are hand-rolled on top of mt19937_64 so streams are
// bit-for-bit reproducible across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exp_gap(std::mt19937_64& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void validate(const SimConfig& c) {
  if (!(c.duration_s > 0.0)) throw std::invalid_argument("stream_sim: duration must be > 0");
  if (!(c.eta_det >= 0.0 && c.eta_det <= 1.0))
    throw std::invalid_argument("stream_sim: eta_det must lie in [0,1]");
  if (!(c.split_ratio >= 0.0 && c.split_ratio <= 1.0))
    throw std::invalid_argument("stream_sim: split_ratio must lie in [0,1]");
  if (!(c.bg_rate_a >= 0.0 && c.bg_rate_b >= 0.0))
    throw std::invalid_argument("stream_sim: background rates must be >= 0");
  if (!(c.dead_time_s >= 0.0)) throw std::invalid_argument("stream_sim: dead_time must be >= 0");
  if (c.resolution_ps < 1) throw std::invalid_argument("stream_sim: resolution must be >= 1 ps");
  if (!(c.emitter.gamma_par > 0.0))
    throw std::invalid_argument("stream_sim: gamma_par must be > 0");
  if (!(c.emitter.gamma_perp >= c.emitter.gamma_par / 2 * (1.0 - 1e-12)))
    throw std::invalid_argument("stream_sim: gamma_perp must be >= gamma_par/2");
  if (!(c.drive.rabi >= 0.0)) throw std::invalid_argument("stream_sim: rabi must be >= 0");
}

std::vector<std::int64_t> poisson_tags(std::mt19937_64& rng, double rate, double duration_s) {
  std::vector<std::int64_t> out;
  if (rate <= 0.0) return out;
  out.reserve(static_cast<std::size_t>(rate * duration_s * 1.2) + 16);
  double t = exp_gap(rng, rate);
  while (t < duration_s) {
    out.push_back(static_cast<std::int64_t>(t * ps_per_s));
    t += exp_gap(rng, rate);
  }
  return out;
}

// Quantize to the resolution grid (round down), then apply a non-paralyzable
// dead-time filter on the integer timestamps so the stream invariant is exact.
std::vector<std::int64_t> quantize_and_filter(std::vector<std::int64_t>& raw_ps,
                                              std::int64_t resolution_ps,
                                              std::int64_t dead_ps) {
  std::sort(raw_ps.begin(), raw_ps.end());
  std::vector<std::int64_t> out;
  out.reserve(raw_ps.size());
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (std::int64_t t : raw_ps) {
    const std::int64_t q = (t / resolution_ps) * resolution_ps;
    if (dead_ps > 0 && last != std::numeric_limits<std::int64_t>::min() && q - last < dead_ps)
      continue;
    out.push_back(q);
    last = q;
  }
  return out;
}

}  // namespace

double stability_dt(const SimConfig& config) {
  const double fastest = std::max({config.drive.rabi, config.emitter.gamma_par,
                                   config.emitter.gamma_perp, std::abs(config.drive.detuning)});
  if (!(fastest > 0.0)) return config.duration_s;
  return 0.01 / fastest;
}

std::vector<double> simulate_emissions(const SimConfig& config) {
  validate(config);
  const double bound = stability_dt(config);
  const double dt = config.dt_s > 0.0 ? config.dt_s : bound;
  if (dt > bound * (1.0 + 1e-9))
    throw std::invalid_argument("stream_sim: dt exceeds the stability bound");

  std::uint64_t chain = config.seed;
  std::mt19937_64 rng(splitmix64(chain));

  // ground/excited amplitudes; H_eff = -Delta|e><e| + (Omega/2) sigma_x - (i/2) gamma_par|e><e|
  Eigen::Matrix2cd h;
  h << cplx(0.0, 0.0), cplx(config.drive.rabi / 2, 0.0), cplx(config.drive.rabi / 2, 0.0),
      cplx(-config.drive.detuning, -config.emitter.gamma_par / 2);
  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(cplx(0.0, -dt) * h);
  const Eigen::Matrix2cd u = es.eigenvectors() *
                             es.eigenvalues().array().exp().matrix().asDiagonal() *
                             es.eigenvectors().inverse();
  const cplx u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);

  const double gamma_phi = config.emitter.gamma_perp - config.emitter.gamma_par / 2;
  const double p_phi = gamma_phi * dt;
  const double jump_scale = config.emitter.gamma_par * dt;

  std::vector<double> emissions;
  emissions.reserve(static_cast<std::size_t>(config.emitter.gamma_par * 0.5 * config.duration_s) +
                    16);

  cplx cg(1.0, 0.0), ce(0.0, 0.0);
  const std::uint64_t steps = static_cast<std::uint64_t>(config.duration_s / dt);
  for (std::uint64_t i = 0; i < steps; ++i) {
    const double p_jump = jump_scale * std::norm(ce);
    if (uniform01(rng) < p_jump) {
      emissions.push_back(static_cast<double>(i + 1) * dt);
      cg = cplx(1.0, 0.0);
      ce = cplx(0.0, 0.0);
      continue;
    }
    const cplx ng = u00 * cg + u01 * ce;
    const cplx ne = u10 * cg + u11 * ce;
    const double inv_norm = 1.0 / std::sqrt(std::norm(ng) + std::norm(ne));
    cg = ng * inv_norm;
    ce = ne * inv_norm;
    if (p_phi > 0.0 && uniform01(rng) < p_phi) {
      const double phi = two_pi * uniform01(rng);
      ce *= cplx(std::cos(phi), std::sin(phi));
    }
  }
  return emissions;
}

TagStream detect_and_split(const std::vector<double>& emissions_s, const SimConfig& config) {
  validate(config);
  std::uint64_t chain = config.seed;
  splitmix64(chain);  // skip the trajectory stream
  std::mt19937_64 rng_det(splitmix64(chain));
  std::mt19937_64 rng_bg_a(splitmix64(chain));
  std::mt19937_64 rng_bg_b(splitmix64(chain));

  std::vector<std::int64_t> raw_a, raw_b;
  raw_a.reserve(emissions_s.size() / 2 + 16);
  raw_b.reserve(emissions_s.size() / 2 + 16);
  for (double t : emissions_s) {
    if (uniform01(rng_det) >= config.eta_det) continue;
    const std::int64_t t_ps = static_cast<std::int64_t>(t * ps_per_s);
    if (uniform01(rng_det) < config.split_ratio)
      raw_a.push_back(t_ps);
    else
      raw_b.push_back(t_ps);
  }

  for (std::int64_t t : poisson_tags(rng_bg_a, config.bg_rate_a, config.duration_s))
    raw_a.push_back(t);
  for (std::int64_t t : poisson_tags(rng_bg_b, config.bg_rate_b, config.duration_s))
    raw_b.push_back(t);

  const std::int64_t dead_ps = static_cast<std::int64_t>(std::llround(config.dead_time_s * ps_per_s));
  TagStream out;
  out.a = quantize_and_filter(raw_a, config.resolution_ps, dead_ps);
  out.b = quantize_and_filter(raw_b, config.resolution_ps, dead_ps);
  return out;
}

}  // namespace fiberphoton
