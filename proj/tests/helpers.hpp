#pragma once

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testutil {

inline double rel_err(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("FIBERPHOTON_DATA_DIR")) return env;
  return "data";
}

inline std::filesystem::path tmp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open " << path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller, deterministic across platforms unlike std::normal_distribution
inline double gauss(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace testutil

#define CHECK_REL(value, reference, tol) \
  CHECK_MESSAGE(testutil::rel_err((value), (reference)) < (tol), \
                #value " = " << (value) << ", expected " << (reference))
