#include "fiberphoton/interface_optics.hpp"

#include "fiberphoton/units.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace fiberphoton {

namespace {

using cplx = std::complex<double>;

void validate(const DipoleEmitter& dipole, const OpticalInterface& iface) {
  if (!(dipole.alpha >= 0.0 && dipole.alpha <= pi / 2))
    throw std::invalid_argument("interface_optics: dipole tilt must lie in [0, pi/2]");
  if (!(dipole.height_um >= 0.0))
    throw std::invalid_argument("interface_optics: dipole height must be >= 0");
  if (!(dipole.wavelength_nm > 0.0))
    throw std::invalid_argument("interface_optics: wavelength must be > 0");
  if (!(iface.n_upper >= 1.0) || !(iface.n_lower >= 1.0))
    throw std::invalid_argument("interface_optics: refractive indices must be >= 1");
}

// sqrt with the branch Im >= 0, so evanescent components decay upward
cplx kz_branch(double n_sq_minus_kpar_sq) {
  cplx v = std::sqrt(cplx(n_sq_minus_kpar_sq, 0.0));
  return v.imag() < 0.0 ? -v : v;
}

// Upper hemisphere: direct wave interferes with the interface reflection.
// Reflection coefficients for incidence from the emitter side.
void upper_point(double theta, double n1, double n2, double k0_um, double d_um,
                 double& p_par, double& p_orth) {
  const double st = std::sin(theta);
  const double kz1 = n1 * std::cos(theta);
  // radicand written with kz1 so matched media keep kz1 == kz2 through grazing
  const cplx kz2 = kz_branch(n2 * n2 - n1 * n1 + kz1 * kz1);
  const cplx rs = (kz1 - kz2) / (kz1 + kz2);
  const cplx rp = (n2 * n2 * kz1 - n1 * n1 * kz2) / (n2 * n2 * kz1 + n1 * n1 * kz2);
  const cplx phase = std::exp(cplx(0.0, 2.0 * k0_um * kz1 * d_um));
  p_orth = n1 * st * st * std::norm(1.0 + rp * phase);
  p_par = n1 * 0.5 *
          (std::norm(1.0 + rs * phase) +
           std::cos(theta) * std::cos(theta) * std::norm(1.0 - rp * phase));
}

// Lower hemisphere via the reciprocal field of a plane wave incident from
// below: transmission into the emitter medium, evaluated at the dipole height.
// Covers the evanescent (supercritical) band when n_lower > n_upper.
void lower_point(double theta, double n1, double n2, double k0_um, double d_um,
                 double& p_par, double& p_orth) {
  const double kpar = n2 * std::sin(theta);
  const double kz2 = n2 * std::cos(theta);
  const cplx kz1 = kz_branch(n1 * n1 - n2 * n2 + kz2 * kz2);
  const cplx ts = 2.0 * kz2 / (kz2 + kz1);
  const cplx tp = 2.0 * n1 * n2 * kz2 / (n1 * n1 * kz2 + n2 * n2 * kz1);
  const double decay = std::exp(-2.0 * k0_um * kz1.imag() * d_um);
  p_orth = n2 * (kpar / n1) * (kpar / n1) * std::norm(tp) * decay;
  p_par = n2 * 0.5 * (std::norm(ts) + std::norm(kz1 / n1) * std::norm(tp)) * decay;
}

double orientation_mix(double alpha, double p_par, double p_orth) {
  const double s = std::sin(alpha);
  const double c = std::cos(alpha);
  return s * s * p_par + c * c * p_orth;
}

Eigen::ArrayXd density_on_grid(const Eigen::ArrayXd& theta, const DipoleEmitter& dipole,
                               const OpticalInterface& iface, Hemisphere hemi) {
  const double k0_um = two_pi / (dipole.wavelength_nm * 1e-3);
  Eigen::ArrayXd out(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double p_par = 0.0, p_orth = 0.0;
    if (hemi == Hemisphere::upper)
      upper_point(theta[i], iface.n_upper, iface.n_lower, k0_um, dipole.height_um, p_par, p_orth);
    else
      lower_point(theta[i], iface.n_upper, iface.n_lower, k0_um, dipole.height_um, p_par, p_orth);
    out[i] = orientation_mix(dipole.alpha, p_par, p_orth);
  }
  return out;
}

// Solid-angle trapezoid: 2*pi * integral of p(theta) sin(theta) dtheta
double integrate_pattern(const Eigen::ArrayXd& theta, const Eigen::ArrayXd& density) {
  double acc = 0.0;
  for (Eigen::Index i = 1; i < theta.size(); ++i) {
    const double f0 = density[i - 1] * std::sin(theta[i - 1]);
    const double f1 = density[i] * std::sin(theta[i]);
    acc += 0.5 * (f0 + f1) * (theta[i] - theta[i - 1]);
  }
  return two_pi * acc;
}

// Uniform grid on [0, theta_max] with an optional extra node (used to pin the
// critical-angle kink onto the grid).
Eigen::ArrayXd make_grid(double theta_max, std::size_t n, double extra_node) {
  std::vector<double> nodes(n);
  for (std::size_t i = 0; i < n; ++i)
    nodes[i] = theta_max * static_cast<double>(i) / static_cast<double>(n - 1);
  if (extra_node > 0.0 && extra_node < theta_max) {
    nodes.push_back(extra_node);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  }
  return Eigen::Map<const Eigen::ArrayXd>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
}

double critical_angle_upper(const OpticalInterface& iface) {
  return iface.n_lower < iface.n_upper ? std::asin(iface.n_lower / iface.n_upper) : -1.0;
}

double critical_angle_lower(const OpticalInterface& iface) {
  return iface.n_upper < iface.n_lower ? std::asin(iface.n_upper / iface.n_lower) : -1.0;
}

constexpr std::size_t kGridMin = 4097;
constexpr std::size_t kGridMax = (1u << 19) + 1;

struct HemiIntegrals {
  double upper;
  double lower;
  double cone;  // lower-hemisphere integral up to theta_acc (if requested)
};

HemiIntegrals integrals_at(const DipoleEmitter& dipole, const OpticalInterface& iface,
                           std::size_t n, double theta_acc) {
  const Eigen::ArrayXd gu = make_grid(pi / 2, n, critical_angle_upper(iface));
  const Eigen::ArrayXd gl = make_grid(pi / 2, n, critical_angle_lower(iface));
  HemiIntegrals r{};
  r.upper = integrate_pattern(gu, density_on_grid(gu, dipole, iface, Hemisphere::upper));
  r.lower = integrate_pattern(gl, density_on_grid(gl, dipole, iface, Hemisphere::lower));
  if (theta_acc > 0.0) {
    const Eigen::ArrayXd gc = make_grid(theta_acc, n, critical_angle_lower(iface));
    r.cone = integrate_pattern(gc, density_on_grid(gc, dipole, iface, Hemisphere::lower));
  }
  return r;
}

// Double the grid until the hemisphere (and cone) integrals stabilize.
HemiIntegrals converged_integrals(const DipoleEmitter& dipole, const OpticalInterface& iface,
                                  std::size_t n_theta, double theta_acc, std::size_t* n_used) {
  if (n_theta > 0) {
    if (n_used) *n_used = n_theta;
    return integrals_at(dipole, iface, n_theta, theta_acc);
  }
  std::size_t n = kGridMin;
  HemiIntegrals prev = integrals_at(dipole, iface, n, theta_acc);
  while (n < kGridMax) {
    const std::size_t n2 = 2 * (n - 1) + 1;
    const HemiIntegrals cur = integrals_at(dipole, iface, n2, theta_acc);
    const double tot = cur.upper + cur.lower;
    const double delta = std::abs(cur.upper - prev.upper) + std::abs(cur.lower - prev.lower) +
                         std::abs(cur.cone - prev.cone);
    n = n2;
    prev = cur;
    if (delta < 1e-7 * tot) break;
  }
  if (n_used) *n_used = n;
  return prev;
}

}  // namespace

DipoleEmitter DipoleEmitter::parallel(double height_um, double wavelength_nm) {
  return DipoleEmitter{pi / 2, height_um, wavelength_nm};
}

DipoleEmitter DipoleEmitter::orthogonal(double height_um, double wavelength_nm) {
  return DipoleEmitter{0.0, height_um, wavelength_nm};
}

DipoleEmitter DipoleEmitter::tilted(double alpha, double height_um, double wavelength_nm) {
  return DipoleEmitter{alpha, height_um, wavelength_nm};
}

Eigen::ArrayXd upper_density(const Eigen::ArrayXd& theta, const DipoleEmitter& dipole,
                             const OpticalInterface& iface) {
  validate(dipole, iface);
  return density_on_grid(theta, dipole, iface, Hemisphere::upper);
}

Eigen::ArrayXd lower_density(const Eigen::ArrayXd& theta, const DipoleEmitter& dipole,
                             const OpticalInterface& iface) {
  validate(dipole, iface);
  return density_on_grid(theta, dipole, iface, Hemisphere::lower);
}

std::pair<AngularPattern, AngularPattern> radiated_pattern(const DipoleEmitter& dipole,
                                                           const OpticalInterface& iface,
                                                           std::size_t n_theta) {
  validate(dipole, iface);
  std::size_t n_used = 0;
  converged_integrals(dipole, iface, n_theta, 0.0, &n_used);

  AngularPattern up, lo;
  up.hemisphere = Hemisphere::upper;
  lo.hemisphere = Hemisphere::lower;
  up.theta = make_grid(pi / 2, n_used, critical_angle_upper(iface));
  lo.theta = make_grid(pi / 2, n_used, critical_angle_lower(iface));
  up.density = density_on_grid(up.theta, dipole, iface, Hemisphere::upper);
  lo.density = density_on_grid(lo.theta, dipole, iface, Hemisphere::lower);
  const double total =
      integrate_pattern(up.theta, up.density) + integrate_pattern(lo.theta, lo.density);
  up.total_power = total;
  lo.total_power = total;
  return {up, lo};
}

double hemisphere_fraction(const AngularPattern& pattern) {
  if (!(pattern.total_power > 0.0))
    throw std::invalid_argument("interface_optics: pattern is not normalized");
  return integrate_pattern(pattern.theta, pattern.density) / pattern.total_power;
}

double acceptance_half_angle(const FiberSpec& fiber, double distance_um) {
  if (!(distance_um >= 0.0))
    throw std::invalid_argument("interface_optics: distance must be >= 0");
  const double na_angle = std::asin(std::min(fiber.numerical_aperture, 1.0));
  if (distance_um == 0.0) return na_angle;
  return std::min(na_angle, std::atan(fiber.core_radius_um / distance_um));
}

double collection_efficiency(const DipoleEmitter& dipole, const OpticalInterface& iface,
                             const FiberSpec& fiber, std::size_t n_theta) {
  validate(dipole, iface);
  const double theta_acc = acceptance_half_angle(fiber, dipole.height_um);
  const HemiIntegrals r = converged_integrals(dipole, iface, n_theta, theta_acc, nullptr);
  return r.cone / (r.upper + r.lower);
}

double spherical_collection_efficiency(const FiberSpec& fiber, double distance_um) {
  return (1.0 - std::cos(acceptance_half_angle(fiber, distance_um))) / 2.0;
}

std::vector<EfficiencyRow> efficiency_sweep(const DipoleEmitter& templ,
                                            const OpticalInterface& iface, const FiberSpec& fiber,
                                            double d_min_um, double d_max_um,
                                            std::size_t n_points) {
  if (!(d_min_um >= 0.0) || !(d_max_um >= d_min_um) || n_points < 2)
    throw std::invalid_argument("interface_optics: invalid sweep range");
  std::vector<EfficiencyRow> rows;
  rows.reserve(n_points);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double d =
        d_min_um + (d_max_um - d_min_um) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    DipoleEmitter par = DipoleEmitter::parallel(d, templ.wavelength_nm);
    DipoleEmitter orth = DipoleEmitter::orthogonal(d, templ.wavelength_nm);
    rows.push_back({d, collection_efficiency(par, iface, fiber),
                    collection_efficiency(orth, iface, fiber),
                    spherical_collection_efficiency(fiber, d)});
  }
  return rows;
}

}  // namespace fiberphoton
