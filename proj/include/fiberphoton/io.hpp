#pragma once

// File formats for time tags, correlation histograms, and spectra.
//
// Time tags travel either as CSV ("channel,timestamp_ps", ascending per
// channel) or as the compact TTG1 binary layout: 4-byte magic "TTG1", one
// version byte (1), then 9-byte records of u8 channel + u64 little-endian
// picosecond timestamp. read_tags sniffs the magic and accepts both.

#include "fiberphoton/correlator.hpp"
#include "fiberphoton/interface_optics.hpp"
#include "fiberphoton/spectra.hpp"
#include "fiberphoton/stream_sim.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>

namespace fiberphoton {

void write_tags_csv(std::ostream& out, const TagStream& tags);
void write_tags_ttg1(std::ostream& out, const TagStream& tags);
TagStream read_tags(std::istream& in);

void write_tags_file(const std::string& path, const TagStream& tags, bool binary);
TagStream read_tags_file(const std::string& path);

void write_histogram_csv(std::ostream& out, const G2Histogram& hist);
G2Histogram read_histogram_csv(std::istream& in);
void write_histogram_file(const std::string& path, const G2Histogram& hist);
G2Histogram read_histogram_file(const std::string& path);

void write_sweep_csv(std::ostream& out, const std::vector<EfficiencyRow>& rows);

void write_spectrum_csv(std::ostream& out, const SpectrumTrace& trace);
SpectrumTrace read_spectrum_csv(std::istream& in);
SpectrumTrace read_spectrum_file(const std::string& path);

struct XyData {
  Eigen::ArrayXd x;
  Eigen::ArrayXd y;
  Eigen::ArrayXd sigma;  // empty when the file has two columns
};

// Two or three numeric columns, comma separated; one header line is skipped
// when its first field is not numeric.
XyData read_xy_csv(std::istream& in);
XyData read_xy_file(const std::string& path);

}  // namespace fiberphoton
