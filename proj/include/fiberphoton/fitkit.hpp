#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace fiberphoton {

enum class FitModelKind {
  lorentzian_line,   // params: omega0, fwhm, amplitude, offset (x-axis units)
  saturation,        // params: r_inf, i_sat
  power_broadening,  // params: gamma0, i_sat  (width = gamma0 * sqrt(1 + x/i_sat))
  rabi_g2,           // params: omega (rad/s), gamma_par, gamma_perp, rho; x = tau in s
};

enum class WeightMode { user_sigma, poisson, uniform };

struct FitData {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd sigma;  // empty, or one entry per point
};

struct FitResult {
  FitModelKind model = FitModelKind::lorentzian_line;
  Eigen::VectorXd params;
  Eigen::VectorXd std_errors;
  Eigen::MatrixXd covariance;
  double rss = 0.0;  // weighted residual sum of squares
  int iterations = 0;
  bool converged = false;
  double condition = 0.0;  // condition number of J^T J at the solution
  WeightMode weighting = WeightMode::uniform;
};

std::size_t param_count(FitModelKind model);
const std::vector<std::string>& param_names(FitModelKind model);

double eval_model(FitModelKind model, const Eigen::VectorXd& params, double x);

// Analytic parameter gradient; implemented for all models except rabi_g2,
// which falls back to central differences inside the fitter.
bool has_analytic_gradient(FitModelKind model);
Eigen::VectorXd model_gradient(FitModelKind model, const Eigen::VectorXd& params, double x);

Eigen::VectorXd auto_init(FitModelKind model, const FitData& data);

FitResult fit_curve(FitModelKind model, const FitData& data,
                    const Eigen::VectorXd* init = nullptr);

struct LinewidthRow {
  double power;
  double gamma;
  double gamma_err;
  bool ok;
};

struct LinewidthScan {
  std::vector<LinewidthRow> rows;
  FitResult broadening;  // power_broadening fit over the per-power widths
};

LinewidthScan linewidth_vs_power(const std::vector<std::pair<double, FitData>>& scans);

}  // namespace fiberphoton
