#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "helpers.hpp"

#include "fiberphoton/spectra.hpp"

#include <cmath>
#include <functional>

using namespace fiberphoton;

namespace {

SpectrumTrace make_trace(double lo, double hi, double step,
                         const std::function<double(double)>& fn) {
  const int n = static_cast<int>(std::llround((hi - lo) / step)) + 1;
  SpectrumTrace t;
  t.wavelength_nm.resize(n);
  t.counts.resize(n);
  for (int i = 0; i < n; ++i) {
    t.wavelength_nm[i] = lo + step * i;
    t.counts[i] = fn(t.wavelength_nm[i]);
  }
  return t;
}

SpectrumTrace uniform_trace(double level = 250.0) {
  return make_trace(600.0, 700.0, 1.0, [=](double) { return level; });
}

}  // namespace

TEST_CASE("band fraction on a uniform spectrum") {
  const SpectrumTrace t = uniform_trace();
  CHECK(in_band_fraction(t, {626.0, 678.0}) == 0.52);
  CHECK(std::abs(in_band_fraction(t, {626.5, 678.25}) - 0.5175) < 1e-12);
  CHECK(in_band_fraction(t, {600.0, 700.0}) == 1.0);
  CHECK(in_band_fraction(t, {550.0, 750.0}) == 1.0);  // clipped to the grid
}

TEST_CASE("band fraction is additive and monotone under inclusion") {
  const SpectrumTrace ramp = make_trace(600.0, 700.0, 0.5, [](double wl) { return wl - 600.0; });
  const double left = in_band_fraction(ramp, {610.0, 650.0});
  const double right = in_band_fraction(ramp, {650.0, 690.0});
  const double both = in_band_fraction(ramp, {610.0, 690.0});
  CHECK(std::abs(left + right - both) < 1e-12);

  CHECK(in_band_fraction(ramp, {620.0, 660.0}) < in_band_fraction(ramp, {615.0, 665.0}));
  CHECK(in_band_fraction(ramp, {615.0, 665.0}) < 1.0);
}

TEST_CASE("windows outside the grid report an empty overlap") {
  const SpectrumTrace t = uniform_trace();
  bool empty = false;
  CHECK(in_band_fraction(t, {750.0, 760.0}, &empty) == 0.0);
  CHECK(empty);
  CHECK(in_band_fraction(t, {590.0, 600.0}, &empty) == 0.0);
  CHECK(empty);
  CHECK(in_band_fraction(t, {626.0, 678.0}, &empty) == 0.52);
  CHECK_FALSE(empty);

  const SpectrumTrace dark = make_trace(600.0, 700.0, 1.0, [](double) { return 0.0; });
  CHECK(in_band_fraction(dark, {626.0, 678.0}, &empty) == 0.0);
  CHECK_FALSE(empty);  // overlapping window, just nothing to collect
}

TEST_CASE("trace and window validation") {
  const SpectrumTrace t = uniform_trace();
  CHECK_THROWS(in_band_fraction(t, {678.0, 626.0}));
  CHECK_THROWS(in_band_fraction(t, {626.0, 626.0}));

  SpectrumTrace bad = t;
  bad.counts[3] = -1.0;
  CHECK_THROWS(in_band_fraction(bad, {626.0, 678.0}));
  bad = t;
  bad.counts[3] = std::nan("");
  CHECK_THROWS(in_band_fraction(bad, {626.0, 678.0}));
  bad = t;
  bad.wavelength_nm[5] = bad.wavelength_nm[4];
  CHECK_THROWS(in_band_fraction(bad, {626.0, 678.0}));

  SpectrumTrace tiny;
  tiny.wavelength_nm.resize(1);
  tiny.counts.resize(1);
  tiny.wavelength_nm[0] = 600.0;
  tiny.counts[0] = 1.0;
  CHECK_THROWS(in_band_fraction(tiny, {626.0, 678.0}));
}

TEST_CASE("signal-to-background bookkeeping") {
  const SpectrumTrace signal = make_trace(
      600.0, 700.0, 1.0, [](double wl) { return (wl >= 620.0 && wl <= 640.0) ? 500.0 : 0.0; });
  const SpectrumTrace bg = make_trace(600.0, 700.0, 1.0, [](double) { return 50.0; });

  const WindowSnr snr = window_snr(signal, bg, {615.0, 645.0});
  CHECK(std::abs(snr.signal - 10500.0) < 1e-9);  // plateau plus the two edge ramps
  CHECK(std::abs(snr.background - 1500.0) < 1e-9);
  CHECK(std::abs(snr.ratio - 7.0) < 1e-12);
  CHECK_FALSE(snr.zero_background);

  const SpectrumTrace dark = make_trace(600.0, 700.0, 1.0, [](double) { return 0.0; });
  const WindowSnr clean = window_snr(signal, dark, {615.0, 645.0});
  CHECK(clean.zero_background);
  CHECK(clean.ratio > 1e15);
}

TEST_CASE("window optimizer prefers the flat support") {
  const SpectrumTrace signal = make_trace(
      600.0, 700.0, 1.0, [](double wl) { return (wl >= 626.0 && wl <= 678.0) ? 500.0 : 0.0; });
  const SpectrumTrace bg = make_trace(600.0, 700.0, 1.0, [](double) { return 20.0; });

  const FilterWindow w = optimize_window(signal, bg, WindowObjective::snr, 2.0);
  CHECK(w.cut_on_nm == doctest::Approx(626.0).epsilon(1e-12));
  CHECK(w.cut_off_nm == doctest::Approx(678.0).epsilon(1e-12));
}

TEST_CASE("window optimizer tie-breaking") {
  const SpectrumTrace bg = make_trace(600.0, 700.0, 1.0, [](double) { return 10.0; });

  SUBCASE("widest window among equal scores") {
    const SpectrumTrace spike =
        make_trace(600.0, 700.0, 1.0, [](double wl) { return wl == 650.0 ? 1000.0 : 0.0; });
    const FilterWindow w = optimize_window(spike, bg, WindowObjective::snr, 1.0);
    CHECK(w.cut_on_nm == doctest::Approx(649.0).epsilon(1e-12));
    CHECK(w.cut_off_nm == doctest::Approx(651.0).epsilon(1e-12));
  }

  SUBCASE("smallest cut-on among equal widths") {
    const SpectrumTrace twin = make_trace(600.0, 700.0, 1.0, [](double wl) {
      return (wl == 630.0 || wl == 670.0) ? 1000.0 : 0.0;
    });
    const FilterWindow w = optimize_window(twin, bg, WindowObjective::snr, 1.0);
    CHECK(w.cut_on_nm == doctest::Approx(629.0).epsilon(1e-12));
    CHECK(w.cut_off_nm == doctest::Approx(631.0).epsilon(1e-12));
  }
}

TEST_CASE("window optimizer is exhaustive over the edge grid") {
  const SpectrumTrace signal = make_trace(600.0, 700.0, 1.0, [](double wl) {
    const double d = wl - 655.0;
    return 800.0 * std::exp(-d * d / 50.0);
  });
  const SpectrumTrace bg =
      make_trace(600.0, 700.0, 1.0, [](double wl) { return 5.0 + 0.3 * (wl - 600.0); });

  for (const WindowObjective obj : {WindowObjective::snr, WindowObjective::significance}) {
    const FilterWindow found = optimize_window(signal, bg, obj, 5.0);
    const auto score = [&](const FilterWindow& w) {
      const WindowSnr s = window_snr(signal, bg, w);
      return obj == WindowObjective::snr ? s.ratio : s.signal / std::sqrt(s.signal + s.background);
    };
    const double found_score = score(found);
    for (double a = 600.0; a < 700.0; a += 5.0)
      for (double b = a + 5.0; b <= 700.0; b += 5.0)
        CHECK(score({a, b}) <= found_score * (1.0 + 1e-9));
  }
}

TEST_CASE("scattering suppression scales as the fourth power") {
  CHECK_REL(raman_reduction_factor(589.0, 780.0), 3.07551062, 1e-8);
  CHECK(raman_reduction_factor(589.0, 589.0) == 1.0);
  CHECK_REL(raman_reduction_factor(500.0, 1000.0), 16.0, 1e-12);

  const double chained =
      raman_reduction_factor(589.0, 650.0) * raman_reduction_factor(650.0, 780.0);
  CHECK_REL(chained, raman_reduction_factor(589.0, 780.0), 1e-12);

  CHECK_THROWS(raman_reduction_factor(0.0, 780.0));
  CHECK_THROWS(raman_reduction_factor(589.0, -1.0));
}

TEST_CASE("synthetic excitation scans") {
  ExcitationScanConfig cfg;
  cfg.n_molecules = 0;
  cfg.f_min_mhz = -500.0;
  cfg.f_max_mhz = 500.0;
  cfg.n_points = 501;
  cfg.seed = 42;

  const ExcitationScan flat = synth_excitation_scan(cfg);
  REQUIRE(flat.counts.size() == 501);
  CHECK(flat.frequency_mhz[0] == -500.0);
  CHECK(flat.frequency_mhz[500] == 500.0);
  CHECK((flat.counts == cfg.background).all());

  cfg.n_molecules = 3;
  const ExcitationScan a = synth_excitation_scan(cfg);
  const ExcitationScan b = synth_excitation_scan(cfg);
  CHECK((a.counts == b.counts).all());
  CHECK((a.counts >= cfg.background - 1e-12).all());
  CHECK(a.counts.maxCoeff() > cfg.background + 10.0);

  cfg.seed = 43;
  const ExcitationScan c = synth_excitation_scan(cfg);
  CHECK_FALSE((a.counts == c.counts).all());

  cfg.n_molecules = -1;
  CHECK_THROWS(synth_excitation_scan(cfg));
  cfg.n_molecules = 1;
  cfg.f_max_mhz = cfg.f_min_mhz;
  CHECK_THROWS(synth_excitation_scan(cfg));
  cfg.f_max_mhz = 500.0;
  cfg.n_points = 1;
  CHECK_THROWS(synth_excitation_scan(cfg));
}
