// Regenerates the committed fixtures under data/. Usage:
//   fiberphoton_make_golden [output-dir]
// Every file is deterministic, so a rerun reproduces the tree bit for bit.

#include "fiberphoton/correlator.hpp"
#include "fiberphoton/fitkit.hpp"
#include "fiberphoton/io.hpp"
#include "fiberphoton/spectra.hpp"
#include "fiberphoton/stream_sim.hpp"
#include "fiberphoton/units.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace fiberphoton;

namespace {

void write_xy_csv(const std::string& path, const char* header, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& y) {
  std::ofstream out(path);
  out << header << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", x[i]);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", y[i]);
    out << buf << '\n';
  }
}

void write_spectrum(const std::string& path, const SpectrumTrace& trace) {
  std::ofstream out(path);
  write_spectrum_csv(out, trace);
}

double gaussian(double x, double mu, double sigma) {
  const double u = (x - mu) / sigma;
  return std::exp(-0.5 * u * u);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(dir);

  // short deterministic tag stream plus its reference correlation
  SimConfig config;
  config.drive.rabi = mhz_to_rad_s(42.0);
  config.emitter.gamma_par = mhz_to_rad_s(17.0);
  config.emitter.gamma_perp = config.emitter.gamma_par / 2;
  config.duration_s = 5e-6;
  config.seed = 424242;
  config.eta_det = 1.0;
  config.split_ratio = 0.5;
  config.dead_time_s = 0.0;
  config.resolution_ps = 1;
  const std::vector<double> emissions = simulate_emissions(config);
  const TagStream tags = detect_and_split(emissions, config);
  write_tags_file(dir + "/golden_tags.csv", tags, false);
  G2Histogram hist = cross_correlate_brute(tags.a, tags.b, 1000, 10000);
  normalize(hist);
  write_histogram_file(dir + "/golden_hist.csv", hist);
  std::printf("%s/golden_tags.csv: %zu + %zu tags\n", dir.c_str(), tags.a.size(), tags.b.size());
  std::printf("%s/golden_hist.csv: %zu bins\n", dir.c_str(), hist.n_bins());

  // noiseless resonance line for fit smoke tests
  Eigen::VectorXd truth(4);
  truth << 7.5, 42.5, 1234.5, 77.25;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(201, -300.0, 300.0);
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    y[i] = eval_model(FitModelKind::lorentzian_line, truth, x[i]);
  write_xy_csv(dir + "/lorentzian_clean.csv", "frequency_mhz,counts", x, y);
  std::printf("%s/lorentzian_clean.csv: %td points\n", dir.c_str(), x.size());

  // example emission spectrum: narrow zero-phonon line plus vibronic sidebands
  {
    SpectrumTrace trace;
    trace.wavelength_nm = Eigen::ArrayXd::LinSpaced(481, 580.0, 700.0);
    trace.counts = trace.wavelength_nm.unaryExpr([](double w) {
      return 1000.0 * gaussian(w, 589.0, 0.6) + 350.0 * gaussian(w, 597.48, 1.8) +
             120.0 * gaussian(w, 615.0, 12.0) + 60.0 * gaussian(w, 645.0, 22.0);
    });
    write_spectrum(dir + "/example_emission.csv", trace);
    std::printf("%s/example_emission.csv: %td points\n", dir.c_str(), trace.wavelength_nm.size());
  }

  // example fiber background: broad pump-side hump on a flat floor
  {
    SpectrumTrace trace;
    trace.wavelength_nm = Eigen::ArrayXd::LinSpaced(241, 580.0, 700.0);
    trace.counts = trace.wavelength_nm.unaryExpr(
        [](double w) { return 40.0 * std::exp(-(w - 585.0) * (w - 585.0) / 1800.0) + 15.0; });
    write_spectrum(dir + "/example_background.csv", trace);
    std::printf("%s/example_background.csv: %td points\n", dir.c_str(),
                trace.wavelength_nm.size());
  }

  return 0;
}
