#pragma once

namespace fiberphoton {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// ordinary frequency in MHz -> angular frequency in rad/s
inline constexpr double mhz_to_rad_s(double f_mhz) { return two_pi * 1e6 * f_mhz; }
inline constexpr double rad_s_to_mhz(double w) { return w / (two_pi * 1e6); }

inline constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / pi; }

inline constexpr double ps_per_s = 1e12;

}  // namespace fiberphoton
