#include "fiberphoton/cli.hpp"

#include "fiberphoton/correlator.hpp"
#include "fiberphoton/emitter_model.hpp"
#include "fiberphoton/fitkit.hpp"
#include "fiberphoton/interface_optics.hpp"
#include "fiberphoton/io.hpp"
#include "fiberphoton/spectra.hpp"
#include "fiberphoton/stream_sim.hpp"
#include "fiberphoton/units.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fiberphoton {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

// Config / argument problems exit with code 2; everything else with 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename Writer>
void emit(const std::string& path, std::ostream& fallback, bool binary, Writer&& writer) {
  if (path.empty() || path == "-") {
    writer(fallback);
    return;
  }
  std::ofstream file(path, binary ? std::ios::binary : std::ios::out);
  if (!file) throw std::runtime_error("cli: cannot write " + path);
  writer(file);
}

void emit_json(const std::string& path, std::ostream& fallback, const json& doc) {
  emit(path, fallback, false, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

// ---- strict run configuration -------------------------------------------

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known)
      throw UsageError("unknown key: " + (prefix.empty() ? it.key() : prefix + "." + it.key()));
  }
}

const json& get_section(const json& doc, const char* name) {
  if (!doc.contains(name)) throw UsageError(std::string("missing required key: ") + name);
  const json& section = doc.at(name);
  if (!section.is_object())
    throw UsageError(std::string("bad value type: ") + name + " (expected object)");
  return section;
}

double get_number(const json& section, const std::string& prefix, const char* key,
                  const double* fallback = nullptr) {
  const std::string path = prefix + "." + key;
  if (!section.contains(key)) {
    if (fallback) return *fallback;
    throw UsageError("missing required key: " + path);
  }
  const json& value = section.at(key);
  if (!value.is_number()) throw UsageError("bad value type: " + path + " (expected number)");
  return value.get<double>();
}

std::uint64_t get_uint(const json& section, const std::string& prefix, const char* key,
                       const std::uint64_t* fallback = nullptr) {
  const std::string path = prefix + "." + key;
  if (!section.contains(key)) {
    if (fallback) return *fallback;
    throw UsageError("missing required key: " + path);
  }
  const json& value = section.at(key);
  if (!value.is_number_unsigned())
    throw UsageError("bad value type: " + path + " (expected unsigned integer)");
  return value.get<std::uint64_t>();
}

SimConfig load_sim_config(const json& doc) {
  if (!doc.is_object()) throw UsageError("config root must be an object");
  check_keys(doc, "", {"emitter", "drive", "sim"});

  const json& emitter = get_section(doc, "emitter");
  check_keys(emitter, "emitter", {"gamma_par_mhz", "gamma_perp_mhz"});
  const double gamma_par_mhz = get_number(emitter, "emitter", "gamma_par_mhz");
  const double fourier_limit = gamma_par_mhz / 2;
  const double gamma_perp_mhz = get_number(emitter, "emitter", "gamma_perp_mhz", &fourier_limit);

  const json& drive = get_section(doc, "drive");
  check_keys(drive, "drive", {"rabi_mhz", "detuning_mhz"});
  const double zero = 0.0;
  const double rabi_mhz = get_number(drive, "drive", "rabi_mhz");
  const double detuning_mhz = get_number(drive, "drive", "detuning_mhz", &zero);

  const json& sim = get_section(doc, "sim");
  check_keys(sim, "sim",
             {"duration_ms", "seed", "eta_det", "split_ratio", "bg_rate_a_cps", "bg_rate_b_cps",
              "dead_time_ns", "resolution_ps", "dt_ns"});
  const double one = 1.0, half = 0.5, default_dead_ns = 50.0;
  const std::uint64_t one_ps = 1;

  SimConfig config;
  config.emitter.gamma_par = mhz_to_rad_s(gamma_par_mhz);
  config.emitter.gamma_perp = mhz_to_rad_s(gamma_perp_mhz);
  config.drive.rabi = mhz_to_rad_s(rabi_mhz);
  config.drive.detuning = mhz_to_rad_s(detuning_mhz);
  config.duration_s = 1e-3 * get_number(sim, "sim", "duration_ms");
  config.seed = get_uint(sim, "sim", "seed");
  config.eta_det = get_number(sim, "sim", "eta_det", &one);
  config.split_ratio = get_number(sim, "sim", "split_ratio", &half);
  config.bg_rate_a = get_number(sim, "sim", "bg_rate_a_cps", &zero);
  config.bg_rate_b = get_number(sim, "sim", "bg_rate_b_cps", &zero);
  config.dead_time_s = 1e-9 * get_number(sim, "sim", "dead_time_ns", &default_dead_ns);
  config.resolution_ps = static_cast<std::int64_t>(get_uint(sim, "sim", "resolution_ps", &one_ps));
  config.dt_s = 1e-9 * get_number(sim, "sim", "dt_ns", &zero);
  return config;
}

// ---- dipole-pattern -------------------------------------------------------

struct PatternOpts {
  double alpha_deg = 90.0;
  double d_um = 0.0;
  double wavelength_nm = 589.0;
  double n_upper = 1.53;
  double n_lower = 1.501;
  std::size_t n_theta = 0;
  std::string output;
};

void run_dipole_pattern(const PatternOpts& opts, std::ostream& out) {
  const DipoleEmitter dipole =
      DipoleEmitter::tilted(deg_to_rad(opts.alpha_deg), opts.d_um, opts.wavelength_nm);
  const OpticalInterface iface{opts.n_upper, opts.n_lower};
  const auto [upper, lower] = radiated_pattern(dipole, iface, opts.n_theta);
  // the CSV gets the requested uniform grid; the quadrature's critical-angle
  // node stays internal to the normalization integral
  const Eigen::Index n =
      opts.n_theta > 0 ? static_cast<Eigen::Index>(opts.n_theta) : upper.theta.size();
  const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(n, 0.0, pi / 2);
  const Eigen::ArrayXd up = upper_density(grid, dipole, iface);
  const Eigen::ArrayXd lo = lower_density(grid, dipole, iface);
  emit(opts.output, out, false, [&](std::ostream& os) {
    os << "hemisphere,theta_deg,density_per_sr\n";
    char buf[32];
    auto row = [&](const char* name, double theta, double density) {
      std::snprintf(buf, sizeof(buf), "%.17g", rad_to_deg(theta));
      os << name << ',' << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", density / upper.total_power);
      os << buf << '\n';
    };
    for (Eigen::Index i = 0; i < n; ++i) row("upper", grid[i], up[i]);
    for (Eigen::Index i = 0; i < n; ++i) row("lower", grid[i], lo[i]);
  });
}

// ---- collect-eff ----------------------------------------------------------

struct CollectOpts {
  double na = 0.41;
  double core_um = 2.4;  // core diameter
  double n_upper = 1.53;
  double n_lower = 1.501;
  double wavelength_nm = 589.0;
  double d_min_um = 0.0;
  double d_max_um = 6.0;
  std::size_t points = 61;
  double d_um = -1.0;  // >= 0 selects single-point output
  bool spherical = false;
  std::size_t n_theta = 0;
  std::string output;
};

void check_sweep_monotone(const std::vector<EfficiencyRow>& rows) {
  // interference ripple allows sub-percent local wiggles; anything larger
  // indicates a quadrature failure
  constexpr double slack = 1.005;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const bool ok = rows[i].eta_parallel <= rows[i - 1].eta_parallel * slack &&
                    rows[i].eta_orthogonal <= rows[i - 1].eta_orthogonal * slack &&
                    rows[i].eta_spherical <= rows[i - 1].eta_spherical * slack;
    if (!ok)
      throw std::runtime_error("interface_optics: efficiency sweep is not monotone in distance");
  }
}

void run_collect_eff(const CollectOpts& opts, std::ostream& out) {
  const OpticalInterface iface{opts.n_upper, opts.n_lower};
  const FiberSpec fiber{opts.na, opts.core_um / 2, opts.n_lower};

  if (opts.d_um >= 0.0) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["na"] = opts.na;
    doc["core_diameter_um"] = opts.core_um;
    doc["n_upper"] = opts.n_upper;
    doc["n_lower"] = opts.n_lower;
    doc["wavelength_nm"] = opts.wavelength_nm;
    doc["distance_um"] = opts.d_um;
    doc["acceptance_half_angle_deg"] = rad_to_deg(acceptance_half_angle(fiber, opts.d_um));
    doc["cutoff_distance_um"] = fiber.core_radius_um / std::tan(std::asin(opts.na));
    doc["eta_spherical"] = spherical_collection_efficiency(fiber, opts.d_um);
    if (!opts.spherical) {
      doc["eta_parallel"] = collection_efficiency(
          DipoleEmitter::parallel(opts.d_um, opts.wavelength_nm), iface, fiber, opts.n_theta);
      doc["eta_orthogonal"] = collection_efficiency(
          DipoleEmitter::orthogonal(opts.d_um, opts.wavelength_nm), iface, fiber, opts.n_theta);
    }
    emit_json(opts.output, out, doc);
    return;
  }

  const DipoleEmitter templ = DipoleEmitter::parallel(0.0, opts.wavelength_nm);
  const auto rows = efficiency_sweep(templ, iface, fiber, opts.d_min_um, opts.d_max_um, opts.points);
  check_sweep_monotone(rows);
  emit(opts.output, out, false, [&](std::ostream& os) { write_sweep_csv(os, rows); });
}

// ---- simulate -------------------------------------------------------------

struct SimulateOpts {
  std::string config_path;
  std::string output;
  bool binary = false;
};

void run_simulate(const SimulateOpts& opts, std::ostream& out) {
  std::ifstream file(opts.config_path);
  if (!file) throw std::runtime_error("cli: cannot open " + opts.config_path);
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config parse: ") + e.what());
  }
  const SimConfig config = load_sim_config(doc);
  const std::vector<double> emissions = simulate_emissions(config);
  const TagStream tags = detect_and_split(emissions, config);
  write_tags_file(opts.output, tags, opts.binary);

  json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["n_emitted"] = emissions.size();
  summary["n_a"] = tags.a.size();
  summary["n_b"] = tags.b.size();
  summary["duration_ms"] = config.duration_s * 1e3;
  summary["seed"] = config.seed;
  summary["output"] = opts.output;
  out << summary.dump(2) << '\n';
}

// ---- correlate ------------------------------------------------------------

struct CorrelateOpts {
  std::string input;
  std::int64_t bin_ps = 0;
  std::int64_t range_ps = 0;
  unsigned threads = 0;
  std::string output;
};

void run_correlate(const CorrelateOpts& opts, std::ostream& out) {
  if (opts.bin_ps <= 0 || opts.range_ps <= 0)
    throw UsageError("--bin-ps and --range-ps must be positive");
  if ((2 * opts.range_ps) % opts.bin_ps != 0)
    throw UsageError("--bin-ps must divide the full range 2 * --range-ps");
  const TagStream tags = read_tags_file(opts.input);
  G2Histogram hist = cross_correlate_parallel(tags, opts.bin_ps, opts.range_ps, opts.threads);
  normalize(hist);
  emit(opts.output, out, false, [&](std::ostream& os) { write_histogram_csv(os, hist); });
}

// ---- fit ------------------------------------------------------------------

struct FitOpts {
  std::string model;
  std::string input;
  std::string init;
  double linear_bg = 0.0;  // counts/s per input-power unit, subtracted before the fit
  std::string output;
};

FitModelKind parse_model(const std::string& name) {
  if (name == "lorentzian") return FitModelKind::lorentzian_line;
  if (name == "saturation") return FitModelKind::saturation;
  if (name == "power-broadening") return FitModelKind::power_broadening;
  if (name == "rabi-g2") return FitModelKind::rabi_g2;
  throw UsageError("unknown model: " + name);
}

bool looks_like_histogram(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cli: cannot open " + path);
  std::string line;
  if (!std::getline(file, line)) return false;
  return line.rfind("tau_ps,", 0) == 0 ||
         std::count(line.begin(), line.end(), ',') == 3;
}

const char* weighting_name(WeightMode mode) {
  switch (mode) {
    case WeightMode::user_sigma: return "user_sigma";
    case WeightMode::poisson: return "poisson";
    case WeightMode::uniform: return "uniform";
  }
  return "unknown";
}

json fit_result_to_json(const FitResult& result) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  const auto& names = param_names(result.model);
  json params, errors;
  for (std::size_t i = 0; i < names.size(); ++i) {
    params[names[i]] = result.params[static_cast<Eigen::Index>(i)];
    errors[names[i]] = result.std_errors[static_cast<Eigen::Index>(i)];
  }
  doc["params"] = params;
  doc["std_errors"] = errors;
  doc["rss"] = result.rss;
  doc["iterations"] = result.iterations;
  doc["converged"] = result.converged;
  doc["condition"] = result.condition;
  doc["weighting"] = weighting_name(result.weighting);
  return doc;
}

void run_fit(const FitOpts& opts, std::ostream& out, std::ostream& err) {
  const FitModelKind model = parse_model(opts.model);

  FitData data;
  if (model == FitModelKind::rabi_g2 && looks_like_histogram(opts.input)) {
    const G2Histogram hist = read_histogram_file(opts.input);
    std::vector<double> x, y, s;
    for (std::size_t i = 0; i < hist.n_bins(); ++i) {
      if (!(hist.g2_err[static_cast<Eigen::Index>(i)] > 0.0)) continue;  // empty bins carry no information
      x.push_back(hist.bin_center_s(i));
      y.push_back(hist.g2[static_cast<Eigen::Index>(i)]);
      s.push_back(hist.g2_err[static_cast<Eigen::Index>(i)]);
    }
    data.x = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    data.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    data.sigma = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  } else {
    const XyData xy = read_xy_file(opts.input);
    data.x = xy.x.matrix();
    data.y = xy.y.matrix();
    if (xy.sigma.size() > 0) data.sigma = xy.sigma.matrix();
  }

  if (opts.linear_bg != 0.0) data.y -= opts.linear_bg * data.x;

  Eigen::VectorXd init;
  const Eigen::VectorXd* init_ptr = nullptr;
  if (!opts.init.empty()) {
    std::vector<double> values;
    std::stringstream ss(opts.init);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    if (values.size() != param_count(model))
      throw UsageError("--init needs " + std::to_string(param_count(model)) + " values");
    init = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    init_ptr = &init;
  }

  const FitResult result = fit_curve(model, data, init_ptr);
  json doc = fit_result_to_json(result);
  doc["model"] = opts.model;
  doc["n_points"] = data.x.size();
  emit_json(opts.output, out, doc);
  if (!result.converged) {
    err << "error: fitkit: fit did not converge\n";
    throw std::runtime_error("fitkit: fit did not converge");
  }
}

// ---- scan-synth -----------------------------------------------------------

struct ScanOpts {
  ExcitationScanConfig config;
  std::string output;
};

void run_scan_synth(const ScanOpts& opts, std::ostream& out) {
  const ExcitationScan scan = synth_excitation_scan(opts.config);
  emit(opts.output, out, false, [&](std::ostream& os) {
    os << "frequency_mhz,counts\n";
    char buf[32];
    for (Eigen::Index i = 0; i < scan.frequency_mhz.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", scan.frequency_mhz[i]);
      os << buf << ',';
      std::snprintf(buf, sizeof(buf), "%.17g", scan.counts[i]);
      os << buf << '\n';
    }
  });
}

// ---- filter ---------------------------------------------------------------

struct FilterOpts {
  std::string spectrum;
  std::string background;
  std::vector<double> window;
  bool optimize = false;
  std::string objective = "snr";
  double step_nm = 1.0;
  std::string output;
};

void run_filter(const FilterOpts& opts, std::ostream& out) {
  const SpectrumTrace signal = read_spectrum_file(opts.spectrum);
  json doc;
  doc["schema_version"] = kSchemaVersion;

  if (opts.optimize) {
    if (opts.background.empty())
      throw UsageError("--optimize requires --background");
    const SpectrumTrace background = read_spectrum_file(opts.background);
    WindowObjective objective;
    if (opts.objective == "snr")
      objective = WindowObjective::snr;
    else if (opts.objective == "significance")
      objective = WindowObjective::significance;
    else
      throw UsageError("unknown objective: " + opts.objective);
    const FilterWindow window = optimize_window(signal, background, objective, opts.step_nm);
    const WindowSnr snr = window_snr(signal, background, window);
    doc["mode"] = "optimize";
    doc["objective"] = opts.objective;
    doc["step_nm"] = opts.step_nm;
    doc["cut_on_nm"] = window.cut_on_nm;
    doc["cut_off_nm"] = window.cut_off_nm;
    doc["signal"] = snr.signal;
    doc["background"] = snr.background;
    doc["ratio"] = snr.ratio;
    doc["zero_background"] = snr.zero_background;
    doc["in_band_fraction"] = in_band_fraction(signal, window);
    emit_json(opts.output, out, doc);
    return;
  }

  if (opts.window.size() != 2) throw UsageError("--window takes two wavelengths [nm]");
  const FilterWindow window{opts.window[0], opts.window[1]};
  bool empty_overlap = false;
  doc["mode"] = "window";
  doc["cut_on_nm"] = window.cut_on_nm;
  doc["cut_off_nm"] = window.cut_off_nm;
  doc["in_band_fraction"] = in_band_fraction(signal, window, &empty_overlap);
  doc["empty_overlap"] = empty_overlap;
  if (!opts.background.empty()) {
    const SpectrumTrace background = read_spectrum_file(opts.background);
    const WindowSnr snr = window_snr(signal, background, window);
    doc["signal"] = snr.signal;
    doc["background"] = snr.background;
    doc["ratio"] = snr.ratio;
    doc["zero_background"] = snr.zero_background;
  }
  emit_json(opts.output, out, doc);
}

// ---- raman ----------------------------------------------------------------

void run_raman(double from_nm, double to_nm, const std::string& output, std::ostream& out) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["lambda_from_nm"] = from_nm;
  doc["lambda_to_nm"] = to_nm;
  doc["factor"] = raman_reduction_factor(from_nm, to_nm);
  emit_json(output, out, doc);
}

// ---- demo-fig7 ------------------------------------------------------------

struct DemoOpts {
  double duration_ms = 30.0;
  std::uint64_t seed = 7;
  double rho = 0.8;
  std::string tags_path;  // optional tag dump
  std::string output;
};

void run_demo_fig7(const DemoOpts& opts, std::ostream& out) {
  SimConfig config;
  config.drive.rabi = mhz_to_rad_s(42.0);
  config.drive.detuning = 0.0;
  config.emitter.gamma_par = mhz_to_rad_s(17.0);
  config.emitter.gamma_perp = config.emitter.gamma_par / 2;
  config.duration_s = opts.duration_ms * 1e-3;
  config.seed = opts.seed;
  config.eta_det = 1.0;
  config.split_ratio = 0.5;
  config.dead_time_s = 0.0;
  config.resolution_ps = 1;
  if (!(opts.rho > 0.0 && opts.rho <= 1.0)) throw UsageError("--rho must lie in (0, 1]");

  // Poissonian background sets the signal fraction: per-channel signal rate
  // times (1 - rho) / rho.
  const double rho_ss = steady_state_population(config.drive, config.emitter);
  const double channel_rate = config.emitter.gamma_par * rho_ss * config.split_ratio;
  const double bg_rate = channel_rate * (1.0 - opts.rho) / opts.rho;
  config.bg_rate_a = bg_rate;
  config.bg_rate_b = bg_rate;

  const std::vector<double> emissions = simulate_emissions(config);
  const TagStream tags = detect_and_split(emissions, config);
  if (!opts.tags_path.empty()) write_tags_file(opts.tags_path, tags, false);

  G2Histogram hist = cross_correlate_parallel(tags, 500, 100000, 0);
  normalize(hist);

  FitData data;
  {
    std::vector<double> x, y, s;
    for (std::size_t i = 0; i < hist.n_bins(); ++i) {
      if (!(hist.g2_err[static_cast<Eigen::Index>(i)] > 0.0)) continue;
      x.push_back(hist.bin_center_s(i));
      y.push_back(hist.g2[static_cast<Eigen::Index>(i)]);
      s.push_back(hist.g2_err[static_cast<Eigen::Index>(i)]);
    }
    data.x = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    data.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    data.sigma = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  }
  const FitResult fit = fit_curve(FitModelKind::rabi_g2, data);

  const double rho_fit = fit.params[3];
  const double rho_err = fit.std_errors[3];
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["target"] = {{"rabi_mhz", 42.0}, {"rho", opts.rho}, {"g2_zero", 1.0 - opts.rho * opts.rho}};
  doc["n_emitter_tags"] = emissions.size();
  doc["n_a"] = tags.a.size();
  doc["n_b"] = tags.b.size();
  doc["duration_ms"] = opts.duration_ms;
  doc["seed"] = opts.seed;
  doc["fitted"] = {{"rabi_mhz", rad_s_to_mhz(fit.params[0])},
                   {"gamma_par_mhz", rad_s_to_mhz(fit.params[1])},
                   {"gamma_perp_mhz", rad_s_to_mhz(fit.params[2])},
                   {"rho", rho_fit}};
  doc["fitted_errors"] = {{"rabi_mhz", rad_s_to_mhz(fit.std_errors[0])},
                          {"rho", rho_err}};
  doc["g2_zero"] = 1.0 - rho_fit * rho_fit;
  doc["g2_zero_err"] = 2.0 * rho_fit * rho_err;
  doc["converged"] = fit.converged;
  emit_json(opts.output, out, doc);
  if (!fit.converged) throw std::runtime_error("fitkit: fit did not converge");
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fiber-coupled single-photon source toolkit"};
  app.name("fiberphoton");
  app.require_subcommand(1);

  auto pattern = std::make_shared<PatternOpts>();
  CLI::App* pattern_cmd =
      app.add_subcommand("dipole-pattern", "Angular emission density near the interface");
  pattern_cmd->add_option("--alpha-deg", pattern->alpha_deg, "dipole tilt from the normal [deg]")
      ->capture_default_str();
  pattern_cmd->add_option("--d-um", pattern->d_um, "dipole-interface distance [um]")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  pattern_cmd
      ->add_option("--wavelength-nm", pattern->wavelength_nm, "emission wavelength [nm]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pattern_cmd->add_option("--n-upper", pattern->n_upper, "refractive index above [1]")
      ->capture_default_str();
  pattern_cmd->add_option("--n-lower", pattern->n_lower, "refractive index below [1]")
      ->capture_default_str();
  pattern_cmd->add_option("--n-theta", pattern->n_theta, "polar grid size, 0 = auto [1]")
      ->capture_default_str();
  pattern_cmd->add_option("-o,--output", pattern->output, "CSV path, default stdout");
  pattern_cmd->callback([pattern, &out]() { run_dipole_pattern(*pattern, out); });

  auto collect = std::make_shared<CollectOpts>();
  CLI::App* collect_cmd =
      app.add_subcommand("collect-eff", "Fiber collection efficiency vs distance");
  collect_cmd->add_option("--na", collect->na, "fiber numerical aperture [1]")
      ->check(CLI::Range(1e-6, 1.0))
      ->capture_default_str();
  collect_cmd->add_option("--core-um", collect->core_um, "fiber core diameter [um]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  collect_cmd->add_option("--n-upper", collect->n_upper, "refractive index above [1]")
      ->capture_default_str();
  collect_cmd->add_option("--n-lower", collect->n_lower, "refractive index below [1]")
      ->capture_default_str();
  collect_cmd
      ->add_option("--wavelength-nm", collect->wavelength_nm, "emission wavelength [nm]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  collect_cmd->add_option("--d-min-um", collect->d_min_um, "sweep start distance [um]")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  collect_cmd->add_option("--d-max-um", collect->d_max_um, "sweep end distance [um]")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  collect_cmd->add_option("--points", collect->points, "sweep sample count [1]")
      ->capture_default_str();
  collect_cmd->add_option("--d-um", collect->d_um, "single distance instead of a sweep [um]")
      ->check(CLI::NonNegativeNumber);
  collect_cmd->add_flag("--spherical", collect->spherical,
                        "spherical-wave model only (with --d-um)");
  collect_cmd->add_option("--n-theta", collect->n_theta, "polar grid size, 0 = auto [1]")
      ->capture_default_str();
  collect_cmd->add_option("-o,--output", collect->output, "CSV/JSON path, default stdout");
  collect_cmd->callback([collect, &out]() { run_collect_eff(*collect, out); });

  auto simulate = std::make_shared<SimulateOpts>();
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Monte-Carlo photon stream of a driven emitter");
  simulate_cmd->add_option("--config", simulate->config_path, "JSON run configuration path")
      ->required();
  simulate_cmd->add_option("-o,--output", simulate->output, "tag file path")->required();
  simulate_cmd->add_flag("--binary", simulate->binary, "write TTG1 binary instead of CSV");
  simulate_cmd->callback([simulate, &out]() { run_simulate(*simulate, out); });

  auto correlate = std::make_shared<CorrelateOpts>();
  CLI::App* correlate_cmd =
      app.add_subcommand("correlate", "Cross-correlation histogram from a tag file");
  correlate_cmd->add_option("--input", correlate->input, "tag file (CSV or TTG1)")->required();
  correlate_cmd->add_option("--bin-ps", correlate->bin_ps, "histogram bin width [ps]")
      ->check(CLI::PositiveNumber)
      ->required();
  correlate_cmd->add_option("--range-ps", correlate->range_ps, "correlation half-range [ps]")
      ->check(CLI::PositiveNumber)
      ->required();
  correlate_cmd->add_option("--threads", correlate->threads, "worker threads, 0 = auto [1]")
      ->capture_default_str();
  correlate_cmd->add_option("-o,--output", correlate->output, "histogram CSV path, default stdout");
  correlate_cmd->callback([correlate, &out]() { run_correlate(*correlate, out); });

  auto fit = std::make_shared<FitOpts>();
  CLI::App* fit_cmd = app.add_subcommand("fit", "Nonlinear least-squares model fit");
  fit_cmd->add_option("--model", fit->model,
                      "lorentzian | saturation | power-broadening | rabi-g2")
      ->required();
  fit_cmd->add_option("--input", fit->input, "data CSV (x,y[,sigma] or histogram)")->required();
  fit_cmd->add_option("--init", fit->init, "comma-separated initial parameters");
  fit_cmd
      ->add_option("--subtract-linear-bg", fit->linear_bg,
                   "linear background slope removed from y before fitting [counts/s per nW]")
      ->capture_default_str();
  fit_cmd->add_option("-o,--output", fit->output, "JSON path, default stdout");
  fit_cmd->callback([fit, &out, &err]() { run_fit(*fit, out, err); });

  auto scan = std::make_shared<ScanOpts>();
  CLI::App* scan_cmd =
      app.add_subcommand("scan-synth", "Synthetic fluorescence excitation scan");
  scan_cmd->add_option("--n-molecules", scan->config.n_molecules, "number of molecules [1]")
      ->capture_default_str();
  scan_cmd->add_option("--f-min-mhz", scan->config.f_min_mhz, "scan start frequency [MHz]")
      ->capture_default_str();
  scan_cmd->add_option("--f-max-mhz", scan->config.f_max_mhz, "scan end frequency [MHz]")
      ->capture_default_str();
  scan_cmd->add_option("--power-nw", scan->config.power_nw, "excitation power [nW]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  scan_cmd->add_option("--background", scan->config.background, "flat background [counts]")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  scan_cmd->add_option("--seed", scan->config.seed, "random seed [1]")->capture_default_str();
  scan_cmd->add_option("--points", scan->config.n_points, "samples across the scan [1]")
      ->capture_default_str();
  scan_cmd->add_option("--gamma0-mhz", scan->config.gamma0_mhz, "zero-power linewidth [MHz]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  scan_cmd->add_option("--isat-nw", scan->config.i_sat_nw, "saturation power [nW]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  scan_cmd->add_option("--rinf-cps", scan->config.r_inf, "asymptotic detected rate [counts/s]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  scan_cmd->add_option("-o,--output", scan->output, "CSV path, default stdout");
  scan_cmd->callback([scan, &out]() { run_scan_synth(*scan, out); });

  auto filter = std::make_shared<FilterOpts>();
  CLI::App* filter_cmd = app.add_subcommand("filter", "Spectral window bookkeeping");
  filter_cmd->add_option("--spectrum", filter->spectrum, "signal spectrum CSV")->required();
  filter_cmd->add_option("--background", filter->background, "background spectrum CSV");
  filter_cmd->add_option("--window", filter->window, "cut-on and cut-off [nm]")->expected(2);
  filter_cmd->add_flag("--optimize", filter->optimize, "search for the best window");
  filter_cmd->add_option("--objective", filter->objective, "snr | significance")
      ->capture_default_str();
  filter_cmd->add_option("--step-nm", filter->step_nm, "optimizer edge grid step [nm]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  filter_cmd->add_option("-o,--output", filter->output, "JSON path, default stdout");
  filter_cmd->callback([filter, &out]() { run_filter(*filter, out); });

  auto raman_from = std::make_shared<double>(0.0);
  auto raman_to = std::make_shared<double>(0.0);
  auto raman_out = std::make_shared<std::string>();
  CLI::App* raman_cmd =
      app.add_subcommand("raman", "Raman background reduction between wavelengths");
  raman_cmd->add_option("from", *raman_from, "current emission wavelength [nm]")
      ->check(CLI::PositiveNumber)
      ->required();
  raman_cmd->add_option("to", *raman_to, "target emission wavelength [nm]")
      ->check(CLI::PositiveNumber)
      ->required();
  raman_cmd->add_option("-o,--output", *raman_out, "JSON path, default stdout");
  raman_cmd->callback(
      [raman_from, raman_to, raman_out, &out]() { run_raman(*raman_from, *raman_to, *raman_out, out); });

  auto demo = std::make_shared<DemoOpts>();
  CLI::App* demo_cmd = app.add_subcommand(
      "demo-fig7", "Simulate, correlate, and fit a resonant 42 MHz Rabi stream");
  demo_cmd->add_option("--duration-ms", demo->duration_ms, "acquisition time [ms]")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  demo_cmd->add_option("--seed", demo->seed, "random seed [1]")->capture_default_str();
  demo_cmd->add_option("--rho", demo->rho, "target signal fraction [1]")->capture_default_str();
  demo_cmd->add_option("--tags", demo->tags_path, "also write the tag stream CSV here");
  demo_cmd->add_option("-o,--output", demo->output, "JSON path, default stdout");
  demo_cmd->callback([demo, &out]() { run_demo_fig7(*demo, out); });

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace fiberphoton
