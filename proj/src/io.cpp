#include "fiberphoton/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fiberphoton {

namespace {

constexpr char kTagMagic[4] = {'T', 'T', 'G', '1'};
constexpr std::uint8_t kTagVersion = 1;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* p = s.c_str();
  char* end = nullptr;
  out = std::strtod(p, &end);
  while (end && *end == ' ') ++end;
  return end != p && end && *end == '\0';
}

bool parse_i64(const std::string& s, std::int64_t& out) {
  const char* p = s.c_str();
  char* end = nullptr;
  out = std::strtoll(p, &end, 10);
  while (end && *end == ' ') ++end;
  return end != p && end && *end == '\0';
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("io: cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("io: cannot write " + path);
  return out;
}

// Tags interleave across channels sorted by time, channel breaking ties, so
// streams round-trip deterministically.
std::vector<std::pair<std::int64_t, std::uint8_t>> merged_tags(const TagStream& tags) {
  std::vector<std::pair<std::int64_t, std::uint8_t>> all;
  all.reserve(tags.a.size() + tags.b.size());
  for (std::int64_t t : tags.a) all.emplace_back(t, 0);
  for (std::int64_t t : tags.b) all.emplace_back(t, 1);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

void write_tags_csv(std::ostream& out, const TagStream& tags) {
  out << "channel,timestamp_ps\n";
  for (const auto& [t, ch] : merged_tags(tags))
    out << static_cast<int>(ch) << ',' << t << '\n';
}

void write_tags_ttg1(std::ostream& out, const TagStream& tags) {
  out.write(kTagMagic, 4);
  out.put(static_cast<char>(kTagVersion));
  for (const auto& [t, ch] : merged_tags(tags)) {
    if (t < 0) throw std::runtime_error("io: binary tag format requires non-negative timestamps");
    out.put(static_cast<char>(ch));
    std::uint64_t u = static_cast<std::uint64_t>(t);
    char rec[8];
    for (int i = 0; i < 8; ++i) rec[i] = static_cast<char>((u >> (8 * i)) & 0xff);
    out.write(rec, 8);
  }
}

namespace {

TagStream read_tags_ttg1(std::istream& in) {
  const int version = in.get();
  if (version != kTagVersion) throw std::runtime_error("io: unsupported tag file version");
  TagStream tags;
  for (;;) {
    const int ch = in.get();
    if (ch == std::char_traits<char>::eof()) break;
    char rec[8];
    in.read(rec, 8);
    if (in.gcount() != 8) throw std::runtime_error("io: truncated tag record");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(rec[i])) << (8 * i);
    const std::int64_t t = static_cast<std::int64_t>(u);
    if (ch == 0)
      tags.a.push_back(t);
    else if (ch == 1)
      tags.b.push_back(t);
    else
      throw std::runtime_error("io: tag channel must be 0 or 1");
  }
  std::sort(tags.a.begin(), tags.a.end());
  std::sort(tags.b.begin(), tags.b.end());
  return tags;
}

TagStream read_tags_csv(std::istream& in, const std::string& first_line) {
  TagStream tags;
  bool first = true;
  std::string line = first_line;
  for (;;) {
    if (!first || line.empty()) {
      if (!std::getline(in, line)) break;
    }
    first = false;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2) throw std::runtime_error("io: tag rows need channel,timestamp_ps");
    std::int64_t ch = 0, t = 0;
    if (!parse_i64(fields[0], ch)) {
      if (tags.a.empty() && tags.b.empty()) continue;  // header line
      throw std::runtime_error("io: bad tag channel '" + fields[0] + "'");
    }
    if (!parse_i64(fields[1], t)) throw std::runtime_error("io: bad timestamp '" + fields[1] + "'");
    if (ch == 0)
      tags.a.push_back(t);
    else if (ch == 1)
      tags.b.push_back(t);
    else
      throw std::runtime_error("io: tag channel must be 0 or 1");
    line.clear();
  }
  std::sort(tags.a.begin(), tags.a.end());
  std::sort(tags.b.begin(), tags.b.end());
  return tags;
}

}  // namespace

TagStream read_tags(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, kTagMagic, 4) == 0) return read_tags_ttg1(in);
  std::string first(magic, magic + in.gcount());
  std::string rest;
  if (in.gcount() == 4) {
    std::getline(in, rest);
    first += rest;
  }
  in.clear();
  return read_tags_csv(in, first);
}

void write_tags_file(const std::string& path, const TagStream& tags, bool binary) {
  auto out = open_out(path, binary);
  if (binary)
    write_tags_ttg1(out, tags);
  else
    write_tags_csv(out, tags);
}

TagStream read_tags_file(const std::string& path) {
  auto in = open_in(path, true);
  return read_tags(in);
}

void write_histogram_csv(std::ostream& out, const G2Histogram& hist) {
  out << "tau_ps,count,g2,g2_err\n";
  for (std::size_t i = 0; i < hist.n_bins(); ++i) {
    const double center = static_cast<double>(hist.bin_edge_ps(i)) + 0.5 * hist.bin_width_ps;
    out << fmt(center) << ',' << hist.counts[i] << ',' << fmt(hist.g2[i]) << ','
        << fmt(hist.g2_err[i]) << '\n';
  }
}

G2Histogram read_histogram_csv(std::istream& in) {
  std::vector<double> tau;
  std::vector<std::uint64_t> counts;
  std::vector<double> g2, g2_err;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4) throw std::runtime_error("io: histogram rows need tau_ps,count,g2,g2_err");
    double t = 0;
    if (!parse_double(fields[0], t)) {
      if (tau.empty()) continue;  // header line
      throw std::runtime_error("io: bad tau '" + fields[0] + "'");
    }
    std::int64_t c = 0;
    double v = 0, e = 0;
    if (!parse_i64(fields[1], c) || c < 0) throw std::runtime_error("io: bad count '" + fields[1] + "'");
    if (!parse_double(fields[2], v)) throw std::runtime_error("io: bad g2 '" + fields[2] + "'");
    if (!parse_double(fields[3], e)) throw std::runtime_error("io: bad g2_err '" + fields[3] + "'");
    tau.push_back(t);
    counts.push_back(static_cast<std::uint64_t>(c));
    g2.push_back(v);
    g2_err.push_back(e);
  }
  if (tau.size() < 2) throw std::runtime_error("io: histogram needs >= 2 bins");

  G2Histogram hist;
  const double w = tau[1] - tau[0];
  for (std::size_t i = 1; i < tau.size(); ++i)
    if (std::abs((tau[i] - tau[i - 1]) - w) > 1e-9 * std::max(1.0, std::abs(w)))
      throw std::runtime_error("io: histogram bins must be uniform");
  hist.bin_width_ps = static_cast<std::int64_t>(std::llround(w));
  hist.range_ps = static_cast<std::int64_t>(std::llround(-(tau[0] - 0.5 * w)));
  hist.counts = std::move(counts);
  hist.g2.resize(g2.size());
  hist.g2_err.resize(g2_err.size());
  std::copy(g2.begin(), g2.end(), hist.g2.begin());
  std::copy(g2_err.begin(), g2_err.end(), hist.g2_err.begin());
  return hist;
}

void write_histogram_file(const std::string& path, const G2Histogram& hist) {
  auto out = open_out(path, false);
  write_histogram_csv(out, hist);
}

G2Histogram read_histogram_file(const std::string& path) {
  auto in = open_in(path, false);
  return read_histogram_csv(in);
}

void write_sweep_csv(std::ostream& out, const std::vector<EfficiencyRow>& rows) {
  out << "distance_um,eta_parallel,eta_orthogonal,eta_spherical\n";
  for (const auto& row : rows)
    out << fmt(row.distance_um) << ',' << fmt(row.eta_parallel) << ',' << fmt(row.eta_orthogonal)
        << ',' << fmt(row.eta_spherical) << '\n';
}

void write_spectrum_csv(std::ostream& out, const SpectrumTrace& trace) {
  out << "wavelength_nm,counts\n";
  for (Eigen::Index i = 0; i < trace.wavelength_nm.size(); ++i)
    out << fmt(trace.wavelength_nm[i]) << ',' << fmt(trace.counts[i]) << '\n';
}

SpectrumTrace read_spectrum_csv(std::istream& in) {
  std::vector<double> wl, counts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != 2) throw std::runtime_error("io: spectrum rows need wavelength_nm,counts");
    double w = 0, c = 0;
    if (!parse_double(fields[0], w)) {
      if (wl.empty()) continue;  // header line
      throw std::runtime_error("io: bad wavelength '" + fields[0] + "'");
    }
    if (!parse_double(fields[1], c)) throw std::runtime_error("io: bad counts '" + fields[1] + "'");
    wl.push_back(w);
    counts.push_back(c);
  }
  if (wl.size() < 2) throw std::runtime_error("io: spectrum needs >= 2 samples");
  SpectrumTrace trace;
  trace.wavelength_nm = Eigen::Map<Eigen::ArrayXd>(wl.data(), static_cast<Eigen::Index>(wl.size()));
  trace.counts = Eigen::Map<Eigen::ArrayXd>(counts.data(), static_cast<Eigen::Index>(counts.size()));
  return trace;
}

SpectrumTrace read_spectrum_file(const std::string& path) {
  auto in = open_in(path, false);
  return read_spectrum_csv(in);
}

XyData read_xy_csv(std::istream& in) {
  std::vector<double> x, y, s;
  std::string line;
  std::size_t n_cols = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() < 2 || fields.size() > 3)
      throw std::runtime_error("io: expected 2 or 3 numeric columns");
    double vx = 0;
    if (!parse_double(fields[0], vx)) {
      if (x.empty()) continue;  // header line
      throw std::runtime_error("io: bad value '" + fields[0] + "'");
    }
    if (n_cols == 0) n_cols = fields.size();
    if (fields.size() != n_cols) throw std::runtime_error("io: inconsistent column count");
    double vy = 0, vs = 0;
    if (!parse_double(fields[1], vy)) throw std::runtime_error("io: bad value '" + fields[1] + "'");
    if (n_cols == 3 && !parse_double(fields[2], vs))
      throw std::runtime_error("io: bad value '" + fields[2] + "'");
    x.push_back(vx);
    y.push_back(vy);
    if (n_cols == 3) s.push_back(vs);
  }
  if (x.empty()) throw std::runtime_error("io: no data rows");
  XyData data;
  data.x = Eigen::Map<Eigen::ArrayXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  data.y = Eigen::Map<Eigen::ArrayXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  if (!s.empty())
    data.sigma = Eigen::Map<Eigen::ArrayXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return data;
}

XyData read_xy_file(const std::string& path) {
  auto in = open_in(path, false);
  return read_xy_csv(in);
}

}  // namespace fiberphoton
