#include "fiberphoton/fitkit.hpp"

#include "fiberphoton/emitter_model.hpp"
#include "fiberphoton/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fiberphoton {

namespace {

enum class Transform { free, log_positive, logit_unit };

const std::vector<Transform>& transforms(FitModelKind model) {
  static const std::vector<Transform> lorentzian{Transform::free, Transform::log_positive,
                                                 Transform::log_positive, Transform::free};
  static const std::vector<Transform> saturation{Transform::log_positive, Transform::log_positive};
  static const std::vector<Transform> broadening{Transform::log_positive, Transform::log_positive};
  static const std::vector<Transform> rabi{Transform::log_positive, Transform::log_positive,
                                           Transform::log_positive, Transform::logit_unit};
  switch (model) {
    case FitModelKind::lorentzian_line: return lorentzian;
    case FitModelKind::saturation: return saturation;
    case FitModelKind::power_broadening: return broadening;
    case FitModelKind::rabi_g2: return rabi;
  }
  throw std::logic_error("fitkit: unknown model");
}

double to_internal(Transform t, double p) {
  switch (t) {
    case Transform::free: return p;
    case Transform::log_positive: return std::log(std::max(p, 1e-300));
    case Transform::logit_unit: {
      const double q = std::clamp(p, 1e-12, 1.0 - 1e-12);
      return std::log(q / (1.0 - q));
    }
  }
  return p;
}

double to_external(Transform t, double theta) {
  switch (t) {
    case Transform::free: return theta;
    case Transform::log_positive: return std::exp(theta);
    case Transform::logit_unit: return 1.0 / (1.0 + std::exp(-theta));
  }
  return theta;
}

// d(external)/d(internal)
double transform_slope(Transform t, double theta) {
  switch (t) {
    case Transform::free: return 1.0;
    case Transform::log_positive: return std::exp(theta);
    case Transform::logit_unit: {
      const double p = 1.0 / (1.0 + std::exp(-theta));
      return p * (1.0 - p);
    }
  }
  return 1.0;
}

Eigen::VectorXd map_to_external(FitModelKind model, const Eigen::VectorXd& theta) {
  const auto& tr = transforms(model);
  Eigen::VectorXd p(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) p[i] = to_external(tr[i], theta[i]);
  return p;
}

Eigen::VectorXd map_to_internal(FitModelKind model, const Eigen::VectorXd& p) {
  const auto& tr = transforms(model);
  Eigen::VectorXd theta(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) theta[i] = to_internal(tr[i], p[i]);
  return theta;
}

double eval_rabi_g2(const Eigen::VectorXd& p, double tau) {
  DriveField drive{p[0], 0.0};
  TwoLevelEmitter emitter{p[1], p[2], 0.0};
  return background_mix_g2(std::max(analytic_g2(tau, drive, emitter), 0.0), p[3]);
}

Eigen::VectorXd weights_for(const FitData& data, WeightMode mode) {
  Eigen::VectorXd w(data.y.size());
  switch (mode) {
    case WeightMode::user_sigma:
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = 1.0 / data.sigma[i];
      break;
    case WeightMode::poisson:
      for (Eigen::Index i = 0; i < w.size(); ++i)
        w[i] = 1.0 / std::sqrt(std::max(data.y[i], 1.0));
      break;
    case WeightMode::uniform: w.setOnes(); break;
  }
  return w;
}

// Count-like data: non-negative with a dynamic range typical of photon rates.
bool looks_like_counts(const Eigen::VectorXd& y) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0) return false;
    lo = std::min(lo, y[i]);
    hi = std::max(hi, y[i]);
  }
  return hi > 50.0;
}

struct Objective {
  FitModelKind model;
  const FitData& data;
  Eigen::VectorXd w;

  Eigen::VectorXd residuals(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd p = map_to_external(model, theta);
    Eigen::VectorXd r(data.y.size());
    for (Eigen::Index i = 0; i < r.size(); ++i)
      r[i] = (data.y[i] - eval_model(model, p, data.x[i])) * w[i];
    return r;
  }

  double ssr(const Eigen::VectorXd& theta) const { return residuals(theta).squaredNorm(); }

  // Jacobian of the residual vector in internal coordinates.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& theta) const {
    const auto& tr = transforms(model);
    const Eigen::Index n = data.y.size(), np = theta.size();
    Eigen::MatrixXd j(n, np);
    if (has_analytic_gradient(model)) {
      const Eigen::VectorXd p = map_to_external(model, theta);
      Eigen::VectorXd slope(np);
      for (Eigen::Index k = 0; k < np; ++k) slope[k] = transform_slope(tr[k], theta[k]);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd g = model_gradient(model, p, data.x[i]);
        for (Eigen::Index k = 0; k < np; ++k) j(i, k) = -w[i] * g[k] * slope[k];
      }
    } else {
      for (Eigen::Index k = 0; k < np; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[k]));
        Eigen::VectorXd tp = theta, tm = theta;
        tp[k] += h;
        tm[k] -= h;
        j.col(k) = (residuals(tp) - residuals(tm)) / (2.0 * h);
      }
    }
    return j;
  }
};

constexpr int kMaxIterations = 500;
constexpr double kLambda0 = 1e-3;
constexpr double kTolStep = 1e-8;
constexpr double kTolGradient = 1e-10;

}  // namespace

std::size_t param_count(FitModelKind model) { return transforms(model).size(); }

const std::vector<std::string>& param_names(FitModelKind model) {
  static const std::vector<std::string> lorentzian{"omega0", "fwhm", "amplitude", "offset"};
  static const std::vector<std::string> saturation{"r_inf", "i_sat"};
  static const std::vector<std::string> broadening{"gamma0", "i_sat"};
  static const std::vector<std::string> rabi{"omega", "gamma_par", "gamma_perp", "rho"};
  switch (model) {
    case FitModelKind::lorentzian_line: return lorentzian;
    case FitModelKind::saturation: return saturation;
    case FitModelKind::power_broadening: return broadening;
    case FitModelKind::rabi_g2: return rabi;
  }
  throw std::logic_error("fitkit: unknown model");
}

double eval_model(FitModelKind model, const Eigen::VectorXd& p, double x) {
  switch (model) {
    case FitModelKind::lorentzian_line: return lorentzian_line(x, p[0], p[1], p[2], p[3]);
    case FitModelKind::saturation: return saturation_rate(x, SaturationModel{p[0], p[1], 0.0});
    case FitModelKind::power_broadening: return broadened_linewidth(x / p[1], p[0]);
    case FitModelKind::rabi_g2: return eval_rabi_g2(p, x);
  }
  throw std::logic_error("fitkit: unknown model");
}

bool has_analytic_gradient(FitModelKind model) { return model != FitModelKind::rabi_g2; }

Eigen::VectorXd model_gradient(FitModelKind model, const Eigen::VectorXd& p, double x) {
  switch (model) {
    case FitModelKind::lorentzian_line: {
      const double hw = p[1] / 2.0, d = x - p[0];
      const double den = d * d + hw * hw;
      const double shape = hw * hw / den;
      Eigen::VectorXd g(4);
      g[0] = p[2] * 2.0 * hw * hw * d / (den * den);
      g[1] = p[2] * hw * d * d / (den * den);  // d/dfwhm of shape = (hw d^2)/den^2
      g[2] = shape;
      g[3] = 1.0;
      return g;
    }
    case FitModelKind::saturation: {
      const double den = p[1] + x;
      Eigen::VectorXd g(2);
      g[0] = x / den;
      g[1] = -p[0] * x / (den * den);
      return g;
    }
    case FitModelKind::power_broadening: {
      const double s = x / p[1];
      const double root = std::sqrt(1.0 + s);
      Eigen::VectorXd g(2);
      g[0] = root;
      g[1] = -p[0] * s / (2.0 * root * p[1]);
      return g;
    }
    case FitModelKind::rabi_g2: break;
  }
  throw std::logic_error("fitkit: no analytic gradient for this model");
}

Eigen::VectorXd auto_init(FitModelKind model, const FitData& data) {
  const Eigen::Index n = data.y.size();
  const double x_lo = data.x.minCoeff(), x_hi = data.x.maxCoeff();
  const double y_lo = data.y.minCoeff(), y_hi = data.y.maxCoeff();
  const double x_span = std::max(x_hi - x_lo, 1e-12);

  switch (model) {
    case FitModelKind::lorentzian_line: {
      Eigen::Index peak = 0;
      data.y.maxCoeff(&peak);
      const double half = y_lo + (y_hi - y_lo) / 2.0;
      double left = x_lo, right = x_hi;
      for (Eigen::Index i = peak; i > 0; --i)
        if (data.y[i - 1] < half) {
          const double f = (half - data.y[i - 1]) / (data.y[i] - data.y[i - 1]);
          left = data.x[i - 1] + f * (data.x[i] - data.x[i - 1]);
          break;
        }
      for (Eigen::Index i = peak; i + 1 < n; ++i)
        if (data.y[i + 1] < half) {
          const double f = (data.y[i] - half) / (data.y[i] - data.y[i + 1]);
          right = data.x[i] + f * (data.x[i + 1] - data.x[i]);
          break;
        }
      double fwhm = right - left;
      if (!(fwhm > 0.0)) fwhm = x_span / 4.0;
      Eigen::VectorXd p(4);
      p << data.x[peak], fwhm, std::max(y_hi - y_lo, 1e-12 + y_hi * 1e-9), y_lo;
      if (!(p[2] > 0.0)) p[2] = 1.0;  // flat data fallback
      return p;
    }
    case FitModelKind::saturation: {
      const double target = y_hi / 2.0;
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = std::abs(data.y[i] - target);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      Eigen::VectorXd p(2);
      p << std::max(1.2 * y_hi, 1e-9), std::max(data.x[best], x_lo + x_span / 8);
      return p;
    }
    case FitModelKind::power_broadening: {
      Eigen::VectorXd p(2);
      const double g0 = std::max(y_lo, 1e-12);
      const double target = g0 * std::sqrt(2.0);  // width doubles in variance at x = i_sat
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = std::abs(data.y[i] - target);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      double i_sat = data.x[best];
      if (!(i_sat > 0.0)) i_sat = x_lo + x_span / 2.0;
      p << g0, std::max(i_sat, 1e-12);
      return p;
    }
    case FitModelKind::rabi_g2: {
      // first local maximum on the positive-tau side sets the Rabi period;
      // a short moving average keeps noise bumps from firing the scan early
      const auto smooth = [&](Eigen::Index i) {
        double acc = 0.0;
        int m = 0;
        for (Eigen::Index j = std::max<Eigen::Index>(i - 2, 0);
             j <= std::min<Eigen::Index>(i + 2, n - 1); ++j, ++m)
          acc += data.y[j];
        return acc / m;
      };
      double tau_max = 0.0, g2_max = 1.0;
      for (Eigen::Index i = 1; i + 1 < n; ++i) {
        if (data.x[i] <= 0.0) continue;
        const double yi = smooth(i);
        if (yi >= smooth(i - 1) && yi >= smooth(i + 1) && yi > g2_max) {
          tau_max = data.x[i];
          g2_max = yi;
          break;
        }
      }
      if (!(tau_max > 0.0)) {
        Eigen::Index peak = 0;
        data.y.maxCoeff(&peak);
        tau_max = std::abs(data.x[peak]);
        g2_max = data.y[peak];
      }
      if (!(tau_max > 0.0)) tau_max = x_span / 4.0;
      double y0 = data.y[0];
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = std::abs(data.x[i]);
        if (d < best_d) {
          best_d = d;
          y0 = data.y[i];
        }
      }
      const double rho = std::sqrt(std::clamp(1.0 - y0, 0.01, 0.9999));
      const double omega = pi / tau_max;
      // envelope decay from the overshoot of the first maximum
      double gamma_par = omega / 2.5;
      if (g2_max > 1.0 + 1e-6 && rho > 0.05) {
        const double overshoot = std::clamp((g2_max - 1.0) / (rho * rho), 1e-6, 0.999999);
        gamma_par = std::clamp(-std::log(overshoot) / tau_max * (4.0 / 3.0), omega / 50.0,
                               omega * 10.0);
      }
      Eigen::VectorXd p(4);
      p << omega, gamma_par, gamma_par / 2.0, rho;
      return p;
    }
  }
  throw std::logic_error("fitkit: unknown model");
}

FitResult fit_curve(FitModelKind model, const FitData& data, const Eigen::VectorXd* init) {
  const Eigen::Index n = data.y.size();
  const Eigen::Index np = static_cast<Eigen::Index>(param_count(model));
  if (data.x.size() != n) throw std::invalid_argument("fitkit: x/y size mismatch");
  if (n < 2 * np) throw std::invalid_argument("fitkit: need at least 2x more points than parameters");
  if (data.sigma.size() != 0 && data.sigma.size() != n)
    throw std::invalid_argument("fitkit: sigma size mismatch");
  for (Eigen::Index i = 0; i < data.sigma.size(); ++i)
    if (!(data.sigma[i] > 0.0)) throw std::invalid_argument("fitkit: sigma must be > 0");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(data.x[i]) || !std::isfinite(data.y[i]))
      throw std::invalid_argument("fitkit: data must be finite");
  if ((data.x.array() == data.x[0]).all())
    throw std::invalid_argument("fitkit: degenerate data, all x equal");

  WeightMode mode = WeightMode::uniform;
  if (data.sigma.size() == n)
    mode = WeightMode::user_sigma;
  else if (looks_like_counts(data.y))
    mode = WeightMode::poisson;

  Objective obj{model, data, weights_for(data, mode)};
  Eigen::VectorXd theta = map_to_internal(model, init ? *init : auto_init(model, data));

  double ssr = obj.ssr(theta);
  double lambda = kLambda0;
  bool converged = false;
  int iter = 0;
  Eigen::MatrixXd j = obj.jacobian(theta);

  for (; iter < kMaxIterations; ++iter) {
    const Eigen::VectorXd r = obj.residuals(theta);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * r;
    if (jtr.lpNorm<Eigen::Infinity>() < kTolGradient) {
      converged = true;
      break;
    }

    bool accepted = false;
    Eigen::VectorXd theta_new;
    double ssr_new = ssr;
    while (lambda < 1e14) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index k = 0; k < np; ++k)
        damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      theta_new = theta + step;
      ssr_new = obj.ssr(theta_new);
      if (std::isfinite(ssr_new) && ssr_new <= ssr) {
        accepted = true;
        break;
      }
      lambda *= 3.0;
    }
    if (!accepted) break;  // damping exhausted; gradient step impossible

    double step_rel = 0.0;
    for (Eigen::Index k = 0; k < np; ++k)
      step_rel = std::max(step_rel,
                          std::abs(theta_new[k] - theta[k]) / std::max(1.0, std::abs(theta[k])));
    theta = theta_new;
    ssr = ssr_new;
    lambda = std::max(lambda * 0.3, 1e-14);
    j = obj.jacobian(theta);
    if (step_rel < kTolStep) {
      converged = true;
      ++iter;
      break;
    }
  }

  FitResult out;
  out.model = model;
  out.weighting = mode;
  out.iterations = iter;
  out.converged = converged;
  out.rss = ssr;
  out.params = map_to_external(model, theta);

  const Eigen::MatrixXd jtj = j.transpose() * j;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jtj);
  const double ev_min = es.eigenvalues().minCoeff();
  const double ev_max = es.eigenvalues().maxCoeff();
  out.condition = ev_min > 0.0 ? ev_max / ev_min : std::numeric_limits<double>::infinity();

  const double dof = static_cast<double>(n - np);
  const double variance = dof > 0.0 ? ssr / dof : 0.0;
  // invert on the eigenbasis with a floor: flat directions report large finite
  // errors instead of the noise a direct solve of a singular system produces
  const double ev_floor = std::max(ev_max, 1e-300) * 1e-14;
  Eigen::VectorXd inv_ev(np);
  for (Eigen::Index k = 0; k < np; ++k)
    inv_ev[k] = 1.0 / std::max(es.eigenvalues()[k], ev_floor);
  const Eigen::MatrixXd cov_int =
      es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose() * variance;
  const auto& tr = transforms(model);
  Eigen::VectorXd slope(np);
  for (Eigen::Index k = 0; k < np; ++k) slope[k] = transform_slope(tr[k], theta[k]);
  out.covariance = slope.asDiagonal() * cov_int * slope.asDiagonal();
  out.std_errors.resize(np);
  for (Eigen::Index k = 0; k < np; ++k)
    out.std_errors[k] = std::sqrt(std::max(out.covariance(k, k), 0.0));
  return out;
}

LinewidthScan linewidth_vs_power(const std::vector<std::pair<double, FitData>>& scans) {
  if (scans.size() < 3)
    throw std::invalid_argument("fitkit: linewidth_vs_power needs at least 3 powers");
  LinewidthScan out;
  std::vector<double> powers, widths, errs;
  for (const auto& [power, scan] : scans) {
    LinewidthRow row{power, 0.0, 0.0, false};
    try {
      const FitResult fit = fit_curve(FitModelKind::lorentzian_line, scan);
      row.gamma = fit.params[1];
      row.gamma_err = fit.std_errors[1];
      row.ok = fit.converged;
    } catch (const std::exception&) {
      row.ok = false;
    }
    out.rows.push_back(row);
    if (row.ok) {
      powers.push_back(power);
      widths.push_back(row.gamma);
      errs.push_back(row.gamma_err > 0.0 ? row.gamma_err : 0.0);
    }
  }
  if (powers.size() < 3)
    throw std::invalid_argument("fitkit: fewer than 3 usable line scans");
  FitData series;
  series.x = Eigen::Map<Eigen::VectorXd>(powers.data(), static_cast<Eigen::Index>(powers.size()));
  series.y = Eigen::Map<Eigen::VectorXd>(widths.data(), static_cast<Eigen::Index>(widths.size()));
  const bool have_errs = std::all_of(errs.begin(), errs.end(), [](double e) { return e > 0.0; });
  if (have_errs)
    series.sigma = Eigen::Map<Eigen::VectorXd>(errs.data(), static_cast<Eigen::Index>(errs.size()));
  out.broadening = fit_curve(FitModelKind::power_broadening, series);
  return out;
}

}  // namespace fiberphoton
