#pragma once

namespace fiberphoton {

struct TwoLevelEmitter {
  double gamma_par = 0.0;   // population decay rate, rad/s
  double gamma_perp = 0.0;  // coherence decay rate, rad/s (Fourier limit: gamma_par/2)
  double omega0 = 0.0;      // transition angular frequency, rad/s
};

struct DriveField {
  double rabi = 0.0;      // Rabi angular frequency, rad/s
  double detuning = 0.0;  // omega_laser - omega0, rad/s

  double saturation(const TwoLevelEmitter& emitter) const;
};

struct SaturationModel {
  double r_inf = 0.0;   // asymptotic detected rate, counts/s
  double i_sat = 0.0;   // saturation input power, nW
  double gamma0 = 0.0;  // zero-power FWHM, same unit as the fitted axis
};

// Peak-height parametrization: value at omega0 is offset + amplitude.
double lorentzian_line(double omega, double omega0, double fwhm, double amplitude, double offset);

double steady_state_population(const DriveField& drive, const TwoLevelEmitter& emitter);

double saturation_rate(double i_in_nw, const SaturationModel& model);

double broadened_linewidth(double s, double gamma0);

// Resonant-drive second-order correlation of the emitter alone. Oscillatory,
// overdamped, and critically damped branches are selected automatically.
double analytic_g2(double tau_s, const DriveField& drive, const TwoLevelEmitter& emitter);

// Poissonian-background mixing; rho is the signal fraction S/(S+B).
double background_mix_g2(double g2_pure, double rho);

struct CorrectedG2 {
  double value = 0.0;
  bool negative = false;  // statistically legitimate; reported, never clamped
};

CorrectedG2 correct_g2_background(double g2_meas, double rho);

}  // namespace fiberphoton
