#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace fiberphoton {

struct SpectrumTrace {
  Eigen::ArrayXd wavelength_nm;  // strictly increasing
  Eigen::ArrayXd counts;         // >= 0
  std::string label;
};

// Ideal step edges.
struct FilterWindow {
  double cut_on_nm = 0.0;
  double cut_off_nm = 0.0;
};

// Trapezoid integral of counts inside the window (window edges interpolated
// onto the grid) divided by the total integral. Empty overlap reports 0 and
// sets the diagnostic flag when provided.
double in_band_fraction(const SpectrumTrace& spectrum, const FilterWindow& window,
                        bool* empty_overlap = nullptr);

struct WindowSnr {
  double signal = 0.0;
  double background = 0.0;
  double ratio = 0.0;
  bool zero_background = false;
};

WindowSnr window_snr(const SpectrumTrace& signal, const SpectrumTrace& background,
                     const FilterWindow& window);

enum class WindowObjective { snr, significance };  // S/B or S/sqrt(S+B)

// Exhaustive search over all step-grid (cut_on, cut_off) pairs.
// Ties resolve to the widest window, then the smallest cut_on.
FilterWindow optimize_window(const SpectrumTrace& signal, const SpectrumTrace& background,
                             WindowObjective objective, double step_nm);

// Factor by which Raman background falls when emission moves from lambda_from
// to lambda_to (scattering scales as the inverse fourth power of wavelength).
double raman_reduction_factor(double lambda_from_nm, double lambda_to_nm);

struct ExcitationScanConfig {
  int n_molecules = 0;
  double f_min_mhz = 0.0;
  double f_max_mhz = 0.0;
  double power_nw = 50.0;
  double background = 200.0;  // counts at every sample
  std::uint64_t seed = 1;
  int n_points = 2001;
  double gamma0_mhz = 28.5;  // zero-power linewidth
  double i_sat_nw = 60.0;
  double r_inf = 50e3;  // on-axis asymptotic rate, counts/s
};

struct ExcitationScan {
  Eigen::ArrayXd frequency_mhz;
  Eigen::ArrayXd counts;
};

// Lorentzian lines at random frequencies; widths power-broadened, amplitudes
// drawn from collection efficiencies at random molecule height and tilt.
ExcitationScan synth_excitation_scan(const ExcitationScanConfig& config);

}  // namespace fiberphoton
