#include "fiberphoton/spectra.hpp"

#include "fiberphoton/emitter_model.hpp"
#include "fiberphoton/interface_optics.hpp"
#include "fiberphoton/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace fiberphoton {

namespace {

void validate(const SpectrumTrace& s) {
  if (s.wavelength_nm.size() < 2 || s.wavelength_nm.size() != s.counts.size())
    throw std::invalid_argument("spectra: trace needs matching grids with >= 2 samples");
  for (Eigen::Index i = 1; i < s.wavelength_nm.size(); ++i)
    if (!(s.wavelength_nm[i] > s.wavelength_nm[i - 1]))
      throw std::invalid_argument("spectra: wavelength grid must be strictly increasing");
  for (Eigen::Index i = 0; i < s.counts.size(); ++i)
    if (!(s.counts[i] >= 0.0) || !std::isfinite(s.counts[i]))
      throw std::invalid_argument("spectra: counts must be finite and non-negative");
}

double interp(const SpectrumTrace& s, double wl) {
  const Eigen::Index n = s.wavelength_nm.size();
  if (wl <= s.wavelength_nm[0]) return s.counts[0];
  if (wl >= s.wavelength_nm[n - 1]) return s.counts[n - 1];
  const double* begin = s.wavelength_nm.data();
  const Eigen::Index hi = std::upper_bound(begin, begin + n, wl) - begin;
  const double f =
      (wl - s.wavelength_nm[hi - 1]) / (s.wavelength_nm[hi] - s.wavelength_nm[hi - 1]);
  return s.counts[hi - 1] + f * (s.counts[hi] - s.counts[hi - 1]);
}

// Trapezoid over [lo, hi] clipped to the grid, with interpolated endpoints.
double integrate(const SpectrumTrace& s, double lo, double hi) {
  const Eigen::Index n = s.wavelength_nm.size();
  lo = std::max(lo, s.wavelength_nm[0]);
  hi = std::min(hi, s.wavelength_nm[n - 1]);
  if (!(hi > lo)) return 0.0;
  double acc = 0.0;
  double prev_wl = lo, prev_c = interp(s, lo);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wl = s.wavelength_nm[i];
    if (wl <= lo) continue;
    if (wl >= hi) break;
    acc += 0.5 * (prev_c + s.counts[i]) * (wl - prev_wl);
    prev_wl = wl;
    prev_c = s.counts[i];
  }
  acc += 0.5 * (prev_c + interp(s, hi)) * (hi - prev_wl);
  return acc;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double in_band_fraction(const SpectrumTrace& spectrum, const FilterWindow& window,
                        bool* empty_overlap) {
  validate(spectrum);
  if (!(window.cut_on_nm < window.cut_off_nm))
    throw std::invalid_argument("spectra: cut_on must be below cut_off");
  const double total = integrate(spectrum, spectrum.wavelength_nm[0],
                                 spectrum.wavelength_nm[spectrum.wavelength_nm.size() - 1]);
  const Eigen::Index n = spectrum.wavelength_nm.size();
  const bool overlaps =
      window.cut_off_nm > spectrum.wavelength_nm[0] && window.cut_on_nm < spectrum.wavelength_nm[n - 1];
  if (empty_overlap) *empty_overlap = !overlaps;
  if (!overlaps || !(total > 0.0)) return 0.0;
  return integrate(spectrum, window.cut_on_nm, window.cut_off_nm) / total;
}

WindowSnr window_snr(const SpectrumTrace& signal, const SpectrumTrace& background,
                     const FilterWindow& window) {
  validate(signal);
  validate(background);
  if (!(window.cut_on_nm < window.cut_off_nm))
    throw std::invalid_argument("spectra: cut_on must be below cut_off");
  WindowSnr out;
  out.signal = integrate(signal, window.cut_on_nm, window.cut_off_nm);
  out.background = integrate(background, window.cut_on_nm, window.cut_off_nm);
  out.zero_background = !(out.background > 0.0);
  out.ratio = out.signal / std::max(out.background, std::numeric_limits<double>::epsilon());
  return out;
}

FilterWindow optimize_window(const SpectrumTrace& signal, const SpectrumTrace& background,
                             WindowObjective objective, double step_nm) {
  validate(signal);
  validate(background);
  if (!(step_nm > 0.0)) throw std::invalid_argument("spectra: step must be > 0");
  const double lo = std::max(signal.wavelength_nm[0], background.wavelength_nm[0]);
  const double hi = std::min(signal.wavelength_nm[signal.wavelength_nm.size() - 1],
                             background.wavelength_nm[background.wavelength_nm.size() - 1]);
  if (!(hi > lo)) throw std::invalid_argument("spectra: grids do not overlap");

  std::vector<double> edges;
  for (double e = lo; e < hi + step_nm / 2; e += step_nm) edges.push_back(std::min(e, hi));
  if (edges.back() < hi) edges.push_back(hi);

  auto score = [&](const FilterWindow& w) {
    const WindowSnr snr = window_snr(signal, background, w);
    if (objective == WindowObjective::snr)
      return snr.signal / std::max(snr.background, std::numeric_limits<double>::epsilon());
    return snr.signal / std::sqrt(std::max(snr.signal + snr.background,
                                           std::numeric_limits<double>::epsilon()));
  };

  FilterWindow best{edges.front(), edges.back()};
  double best_score = score(best);
  for (std::size_t i = 0; i < edges.size(); ++i)
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const FilterWindow w{edges[i], edges[j]};
      const double sc = score(w);
      const double tie = 1e-12 * std::max(std::abs(sc), std::abs(best_score));
      if (sc > best_score + tie) {
        best = w;
        best_score = sc;
      } else if (sc >= best_score - tie) {
        const double width = w.cut_off_nm - w.cut_on_nm;
        const double best_width = best.cut_off_nm - best.cut_on_nm;
        if (width > best_width || (width == best_width && w.cut_on_nm < best.cut_on_nm)) {
          best = w;
          best_score = std::max(best_score, sc);
        }
      }
    }
  return best;
}

double raman_reduction_factor(double lambda_from_nm, double lambda_to_nm) {
  if (!(lambda_from_nm > 0.0) || !(lambda_to_nm > 0.0))
    throw std::invalid_argument("spectra: wavelengths must be > 0");
  const double r = lambda_to_nm / lambda_from_nm;
  return r * r * r * r;
}

ExcitationScan synth_excitation_scan(const ExcitationScanConfig& config) {
  if (config.n_molecules < 0) throw std::invalid_argument("spectra: n_molecules must be >= 0");
  if (!(config.f_max_mhz > config.f_min_mhz))
    throw std::invalid_argument("spectra: empty frequency range");
  if (config.n_points < 2) throw std::invalid_argument("spectra: need >= 2 samples");

  ExcitationScan scan;
  scan.frequency_mhz.setLinSpaced(config.n_points, config.f_min_mhz, config.f_max_mhz);
  scan.counts = Eigen::ArrayXd::Constant(config.n_points, config.background);

  std::mt19937_64 rng(config.seed);
  const OpticalInterface iface{};
  const FiberSpec fiber{};
  const double s = config.power_nw / config.i_sat_nw;
  const double width_mhz = broadened_linewidth(s, config.gamma0_mhz);
  const double eta_ref =
      collection_efficiency(DipoleEmitter::parallel(0.0), iface, fiber, 8193);
  const double peak_rate = config.r_inf * s / (1.0 + s);

  for (int m = 0; m < config.n_molecules; ++m) {
    const double f0 = config.f_min_mhz + (config.f_max_mhz - config.f_min_mhz) * uniform01(rng);
    const double height_um = 5.0 * uniform01(rng);
    const double alpha = std::acos(uniform01(rng));  // isotropic dipole orientation
    const double eta = collection_efficiency(DipoleEmitter::tilted(alpha, height_um), iface,
                                             fiber, 8193);
    const double amplitude = peak_rate * eta / eta_ref;
    for (Eigen::Index i = 0; i < scan.counts.size(); ++i)
      scan.counts[i] += lorentzian_line(scan.frequency_mhz[i], f0, width_mhz, amplitude, 0.0);
  }
  return scan;
}

}  // namespace fiberphoton
