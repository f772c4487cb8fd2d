#include "fiberphoton/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

namespace fiberphoton {

namespace {

G2Histogram make_histogram(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                           std::int64_t w, std::int64_t t_range) {
  if (w <= 0 || t_range <= 0 || (2 * t_range) % w != 0)
    throw std::invalid_argument("correlator: bin width must divide the full range 2T");
  if (!std::is_sorted(a.begin(), a.end()) || !std::is_sorted(b.begin(), b.end()))
    throw std::invalid_argument("correlator: tag streams must be sorted");
  G2Histogram h;
  h.bin_width_ps = w;
  h.range_ps = t_range;
  h.counts.assign(static_cast<std::size_t>(2 * t_range / w), 0);
  h.n_a = a.size();
  h.n_b = b.size();
  if (!a.empty() || !b.empty()) {
    std::int64_t first = std::numeric_limits<std::int64_t>::max();
    std::int64_t last = std::numeric_limits<std::int64_t>::min();
    if (!a.empty()) {
      first = std::min(first, a.front());
      last = std::max(last, a.back());
    }
    if (!b.empty()) {
      first = std::min(first, b.front());
      last = std::max(last, b.back());
    }
    h.t_total_ps = last - first;
  }
  return h;
}

// Accumulate pairs for a [begin, end) slice of stream a.
void correlate_slice(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                     std::size_t begin, std::size_t end, std::int64_t w, std::int64_t t_range,
                     std::vector<std::uint64_t>& counts) {
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const std::int64_t ta = a[i];
    while (lo < b.size() && b[lo] < ta - t_range) ++lo;
    if (hi < lo) hi = lo;
    while (hi < b.size() && b[hi] < ta + t_range) ++hi;
    for (std::size_t j = lo; j < hi; ++j)
      ++counts[static_cast<std::size_t>((b[j] - ta + t_range) / w)];
  }
}

}  // namespace

G2Histogram cross_correlate(const std::vector<std::int64_t>& a,
                            const std::vector<std::int64_t>& b, std::int64_t bin_width_ps,
                            std::int64_t range_ps) {
  G2Histogram h = make_histogram(a, b, bin_width_ps, range_ps);
  correlate_slice(a, b, 0, a.size(), bin_width_ps, range_ps, h.counts);
  return h;
}

G2Histogram cross_correlate_brute(const std::vector<std::int64_t>& a,
                                  const std::vector<std::int64_t>& b, std::int64_t bin_width_ps,
                                  std::int64_t range_ps) {
  G2Histogram h = make_histogram(a, b, bin_width_ps, range_ps);
  for (std::int64_t ta : a)
    for (std::int64_t tb : b) {
      const std::int64_t d = tb - ta;
      if (d >= -range_ps && d < range_ps)
        ++h.counts[static_cast<std::size_t>((d + range_ps) / bin_width_ps)];
    }
  return h;
}

G2Histogram cross_correlate_parallel(const std::vector<std::int64_t>& a,
                                     const std::vector<std::int64_t>& b,
                                     std::int64_t bin_width_ps, std::int64_t range_ps,
                                     unsigned n_threads) {
  G2Histogram h = make_histogram(a, b, bin_width_ps, range_ps);
  // explicit thread counts are honored even for small inputs; auto mode
  // avoids spawning threads that would own fewer than ~1k tags
  const unsigned limit = n_threads > 0 ? static_cast<unsigned>(std::max<std::size_t>(a.size(), 1))
                                       : static_cast<unsigned>(a.size() / 1024 + 1);
  const unsigned workers = std::max(1u, std::min(resolve_threads(n_threads), limit));
  if (workers == 1) {
    correlate_slice(a, b, 0, a.size(), bin_width_ps, range_ps, h.counts);
    return h;
  }
  std::vector<std::vector<std::uint64_t>> partial(workers,
                                                  std::vector<std::uint64_t>(h.counts.size(), 0));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (a.size() + workers - 1) / workers;
  for (unsigned t = 0; t < workers; ++t) {
    const std::size_t begin = std::min(a.size(), static_cast<std::size_t>(t) * chunk);
    const std::size_t end = std::min(a.size(), begin + chunk);
    pool.emplace_back([&, begin, end, t]() {
      correlate_slice(a, b, begin, end, bin_width_ps, range_ps, partial[t]);
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& p : partial)
    for (std::size_t i = 0; i < h.counts.size(); ++i) h.counts[i] += p[i];
  return h;
}

void normalize(G2Histogram& histogram) {
  if (histogram.n_a == 0 || histogram.n_b == 0)
    throw std::invalid_argument("correlator: empty channel");
  if (histogram.t_total_ps <= 0)
    throw std::invalid_argument("correlator: zero-length acquisition");
  const double scale = static_cast<double>(histogram.t_total_ps) /
                       (static_cast<double>(histogram.n_a) * static_cast<double>(histogram.n_b) *
                        static_cast<double>(histogram.bin_width_ps));
  histogram.g2.resize(static_cast<Eigen::Index>(histogram.n_bins()));
  histogram.g2_err.resize(static_cast<Eigen::Index>(histogram.n_bins()));
  for (std::size_t i = 0; i < histogram.n_bins(); ++i) {
    const double c = static_cast<double>(histogram.counts[i]);
    histogram.g2[static_cast<Eigen::Index>(i)] = c * scale;
    histogram.g2_err[static_cast<Eigen::Index>(i)] = std::sqrt(c) * scale;
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FIBERPHOTON_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace fiberphoton
