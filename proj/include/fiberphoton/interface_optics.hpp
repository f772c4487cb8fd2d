#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

namespace fiberphoton {

struct OpticalInterface {
  double n_upper = 1.53;   // emitter side
  double n_lower = 1.501;  // fiber side
};

// Dipole above the interface. alpha is the tilt from the interface normal:
// alpha = 0 is an orthogonal (vertical) dipole, alpha = pi/2 a parallel one.
struct DipoleEmitter {
  double alpha = 0.0;
  double height_um = 0.0;
  double wavelength_nm = 589.0;

  static DipoleEmitter parallel(double height_um, double wavelength_nm = 589.0);
  static DipoleEmitter orthogonal(double height_um, double wavelength_nm = 589.0);
  static DipoleEmitter tilted(double alpha, double height_um, double wavelength_nm = 589.0);
};

struct FiberSpec {
  double numerical_aperture = 0.41;
  double core_radius_um = 1.2;
  double n_core = 1.501;
};

enum class Hemisphere { upper, lower };

// Azimuth-averaged far-field power density per unit solid angle, sampled on a
// polar grid measured from the hemisphere axis. total_power is the integral
// over both hemispheres and is shared by the pair returned by radiated_pattern.
struct AngularPattern {
  Hemisphere hemisphere = Hemisphere::upper;
  Eigen::ArrayXd theta;
  Eigen::ArrayXd density;
  double total_power = 0.0;
};

// Pointwise densities (azimuth-averaged). Exposed for tests and plotting.
Eigen::ArrayXd upper_density(const Eigen::ArrayXd& theta, const DipoleEmitter& dipole,
                             const OpticalInterface& iface);
Eigen::ArrayXd lower_density(const Eigen::ArrayXd& theta, const DipoleEmitter& dipole,
                             const OpticalInterface& iface);

// n_theta = 0 selects the default grid with automatic refinement.
std::pair<AngularPattern, AngularPattern> radiated_pattern(const DipoleEmitter& dipole,
                                                           const OpticalInterface& iface,
                                                           std::size_t n_theta = 0);

double hemisphere_fraction(const AngularPattern& pattern);

double acceptance_half_angle(const FiberSpec& fiber, double distance_um);

double collection_efficiency(const DipoleEmitter& dipole, const OpticalInterface& iface,
                             const FiberSpec& fiber, std::size_t n_theta = 0);

double spherical_collection_efficiency(const FiberSpec& fiber, double distance_um);

struct EfficiencyRow {
  double distance_um;
  double eta_parallel;
  double eta_orthogonal;
  double eta_spherical;
};

std::vector<EfficiencyRow> efficiency_sweep(const DipoleEmitter& templ,
                                            const OpticalInterface& iface, const FiberSpec& fiber,
                                            double d_min_um, double d_max_um,
                                            std::size_t n_points);

}  // namespace fiberphoton
