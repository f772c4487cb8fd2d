#include "fiberphoton/emitter_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fiberphoton {

double DriveField::saturation(const TwoLevelEmitter& emitter) const {
  return rabi * rabi / (emitter.gamma_par * emitter.gamma_perp);
}

double lorentzian_line(double omega, double omega0, double fwhm, double amplitude,
                       double offset) {
  if (!(fwhm > 0.0)) throw std::invalid_argument("emitter_model: fwhm must be > 0");
  if (!(amplitude >= 0.0)) throw std::invalid_argument("emitter_model: amplitude must be >= 0");
  const double hw = fwhm / 2.0;
  const double d = omega - omega0;
  return offset + amplitude * hw * hw / (d * d + hw * hw);
}

double steady_state_population(const DriveField& drive, const TwoLevelEmitter& emitter) {
  const double s = drive.saturation(emitter);
  const double gp2 = emitter.gamma_perp * emitter.gamma_perp;
  return 0.5 * s * gp2 / (drive.detuning * drive.detuning + gp2 * (1.0 + s));
}

double saturation_rate(double i_in_nw, const SaturationModel& model) {
  if (!(i_in_nw >= 0.0)) throw std::invalid_argument("emitter_model: input power must be >= 0");
  return model.r_inf * i_in_nw / (model.i_sat + i_in_nw);
}

double broadened_linewidth(double s, double gamma0) {
  if (!(s >= 0.0)) throw std::invalid_argument("emitter_model: saturation must be >= 0");
  return gamma0 * std::sqrt(1.0 + s);
}

double analytic_g2(double tau_s, const DriveField& drive, const TwoLevelEmitter& emitter) {
  if (std::isnan(tau_s)) throw std::invalid_argument("emitter_model: tau is NaN");
  if (drive.detuning != 0.0)
    throw std::invalid_argument("emitter_model: analytic_g2 requires resonant drive");
  const double t = std::abs(tau_s);
  const double a = 0.5 * (emitter.gamma_par + emitter.gamma_perp);
  const double half_diff = 0.5 * (emitter.gamma_par - emitter.gamma_perp);
  const double disc = drive.rabi * drive.rabi - half_diff * half_diff;
  // relative threshold keeps the three branches numerically consistent
  const double eps = 1e-12 * a * a;
  double g2 = 0.0;
  if (disc > eps) {
    const double w = std::sqrt(disc);
    g2 = 1.0 - std::exp(-a * t) * (std::cos(w * t) + (a / w) * std::sin(w * t));
  } else if (disc < -eps) {
    const double k = std::sqrt(-disc);
    g2 = 1.0 - std::exp(-a * t) * (std::cosh(k * t) + (a / k) * std::sinh(k * t));
  } else {
    g2 = 1.0 - std::exp(-a * t) * (1.0 + a * t);
  }
  return std::max(0.0, g2);
}

double background_mix_g2(double g2_pure, double rho) {
  // negative inputs are allowed so the correction round-trip stays exact
  if (!std::isfinite(g2_pure)) throw std::invalid_argument("emitter_model: g2 must be finite");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument("emitter_model: rho must lie in [0,1]");
  return 1.0 - rho * rho + rho * rho * g2_pure;
}

CorrectedG2 correct_g2_background(double g2_meas, double rho) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw std::invalid_argument("emitter_model: rho must lie in (0,1]");
  CorrectedG2 out;
  out.value = (g2_meas - (1.0 - rho * rho)) / (rho * rho);
  out.negative = out.value < 0.0;
  return out;
}

}  // namespace fiberphoton
