#pragma once

#include "fiberphoton/stream_sim.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace fiberphoton {

// Binned cross-correlation of channel B relative to channel A. Differences are
// t_b - t_a; bins are half-open [edge, edge + w); a difference of exactly +T
// is excluded. t_total_ps is the observed acquisition span.
struct G2Histogram {
  std::int64_t bin_width_ps = 0;
  std::int64_t range_ps = 0;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_a = 0;
  std::uint64_t n_b = 0;
  std::int64_t t_total_ps = 0;
  Eigen::ArrayXd g2;      // filled by normalize
  Eigen::ArrayXd g2_err;  // filled by normalize

  std::size_t n_bins() const { return counts.size(); }
  std::int64_t bin_edge_ps(std::size_t i) const {
    return -range_ps + static_cast<std::int64_t>(i) * bin_width_ps;
  }
  double bin_center_s(std::size_t i) const {
    return (static_cast<double>(bin_edge_ps(i)) + 0.5 * static_cast<double>(bin_width_ps)) * 1e-12;
  }
};

// Single-pass sorted-merge correlation, O(N * tags-per-window).
G2Histogram cross_correlate(const std::vector<std::int64_t>& a,
                            const std::vector<std::int64_t>& b, std::int64_t bin_width_ps,
                            std::int64_t range_ps);

inline G2Histogram cross_correlate(const TagStream& s, std::int64_t bin_width_ps,
                                   std::int64_t range_ps) {
  return cross_correlate(s.a, s.b, bin_width_ps, range_ps);
}

// Exhaustive pair enumeration; reference oracle for tests.
G2Histogram cross_correlate_brute(const std::vector<std::int64_t>& a,
                                  const std::vector<std::int64_t>& b, std::int64_t bin_width_ps,
                                  std::int64_t range_ps);

// Time-partitioned execution; pairs are owned by the chunk holding tag a, so
// the merged histogram is bitwise identical to the sequential pass.
// n_threads = 0 defers to FIBERPHOTON_THREADS (0 or unset = hardware).
G2Histogram cross_correlate_parallel(const std::vector<std::int64_t>& a,
                                     const std::vector<std::int64_t>& b,
                                     std::int64_t bin_width_ps, std::int64_t range_ps,
                                     unsigned n_threads = 0);

inline G2Histogram cross_correlate_parallel(const TagStream& s, std::int64_t bin_width_ps,
                                            std::int64_t range_ps, unsigned n_threads = 0) {
  return cross_correlate_parallel(s.a, s.b, bin_width_ps, range_ps, n_threads);
}

void normalize(G2Histogram& histogram);

unsigned resolve_threads(unsigned requested);

}  // namespace fiberphoton
