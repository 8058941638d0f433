#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbc/cglmp.hpp"
#include "fbc/detection.hpp"
#include "fbc/fixtures.hpp"
#include "fbc/lattice.hpp"
#include "fbc/optics.hpp"
#include "fbc/tomography.hpp"

namespace fbc {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "fbcsim 1.0.0";

struct ValidationError : std::runtime_error {
  std::vector<std::string> violations;
  explicit ValidationError(std::vector<std::string> v)
      : std::runtime_error(join(v)), violations(std::move(v)) {}
  static std::string join(const std::vector<std::string>& v) {
    std::string all = "invalid configuration:";
    for (const auto& s : v) all += "\n  - " + s;
    return all;
  }
};

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Sweep {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultBundle {
  std::map<std::string, double> scalars;
  std::vector<Sweep> sweeps;
  std::map<std::string, Eigen::MatrixXcd> matrices;
  std::map<std::string, CoincidenceTable> tables;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct ScenarioConfig {
  std::string kind;
  json raw;
  std::string fixture_path;  // from --fixture or config["fixture"]
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

inline FrequencyLattice lattice_from(const json& j, std::vector<std::string>& errors) {
  FrequencyLattice def{};
  const json lat = j.value("lattice", json::object());
  const double pump = lat.value("pump_thz", def.pump_freq_thz);
  const double fsr = lat.value("fsr_ghz", def.fsr_ghz);
  const int s = lat.value("subdivision", def.subdivision);
  const int m = lat.value("max_index", def.max_index);
  try {
    return FrequencyLattice{pump, fsr, s, m};
  } catch (const std::exception& e) {
    errors.emplace_back(std::string("lattice: ") + e.what());
    return def;
  }
}

inline DetectionConfig detection_from(const json& j, std::uint64_t seed,
                                      std::vector<std::string>& errors) {
  DetectionConfig cfg;
  const json det = j.value("detection", json::object());
  cfg.eta_signal = det.value("eta_signal", cfg.eta_signal);
  cfg.eta_idler = det.value("eta_idler", cfg.eta_idler);
  cfg.pair_flux = det.value("pair_flux", cfg.pair_flux);
  cfg.integration_time = det.value("integration_time_s", cfg.integration_time);
  cfg.accidental_rate = det.value("accidental_rate", cfg.accidental_rate);
  cfg.rng_seed = seed;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    errors.emplace_back(std::string("detection: ") + e.what());
  }
  return cfg;
}

inline std::vector<double> sweep_values(const json& j, const std::string& key,
                                        std::vector<std::string>& errors) {
  std::vector<double> out;
  if (!j.contains(key)) {
    errors.push_back("missing sweep definition '" + key + "'");
    return out;
  }
  const json sw = j.at(key);
  if (sw.is_array()) {
    for (const auto& v : sw) out.push_back(v.get<double>());
  } else {
    const double start = sw.value("start", 0.0);
    const double stop = sw.value("stop", 0.0);
    const int points = sw.value("points", 0);
    if (points < 2) {
      errors.push_back("sweep '" + key + "' needs at least 2 points");
      return out;
    }
    for (int i = 0; i < points; ++i)
      out.push_back(start + (stop - start) * i / (points - 1));
  }
  return out;
}

inline std::vector<cplx> alphas_from(const json& j, int pairs,
                                     std::vector<std::string>& errors) {
  const std::string profile = j.value("alpha_profile", "flat");
  std::vector<cplx> alphas(pairs, cplx{1.0, 0.0});
  if (profile == "flat") return alphas;
  if (profile == "lorentzian") {
    const double width = j.value("alpha_envelope_pairs", 10.0);
    const double center = j.value("alpha_center_pair", (pairs + 1) / 2.0);
    for (int k = 1; k <= pairs; ++k) {
      const double u = (k - center) / width;
      alphas[k - 1] = 1.0 / (1.0 + u * u);
    }
    return alphas;
  }
  errors.push_back("unknown alpha_profile '" + profile + "'");
  return alphas;
}

}  // namespace detail

inline ScenarioConfig load_scenario_config(const std::string& path,
                                           std::uint64_t seed_override,
                                           bool has_seed_override,
                                           const std::string& fixture_override) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ScenarioConfig cfg;
  try {
    cfg.raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config parse failure: ") + e.what(),
                     static_cast<int>(e.byte), 0);
  }
  std::vector<std::string> errors;
  cfg.kind = cfg.raw.value("kind", "");
  static const std::vector<std::string> kinds = {"jsi",  "dip",   "fringe",
                                                 "tomo", "cglmp", "simulate"};
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    errors.push_back("kind must be one of jsi|dip|fringe|tomo|cglmp|simulate");
  cfg.seed = has_seed_override ? seed_override : cfg.raw.value("seed", 0ull);
  cfg.fixture_path =
      !fixture_override.empty() ? fixture_override : cfg.raw.value("fixture", "");
  if (!errors.empty()) throw ValidationError(errors);
  return cfg;
}

namespace detail {

inline ResultBundle run_jsi(const ScenarioConfig& cfg) {
  std::vector<std::string> errors;
  const FrequencyLattice lattice = lattice_from(cfg.raw, errors);
  const int pairs = cfg.raw.value("pairs", 38);
  const int first_pair = cfg.raw.value("first_pair", 3);
  if (first_pair < 1 || first_pair + pairs - 1 > lattice.representable_pairs())
    errors.push_back("jsi pair range exceeds the lattice");
  DetectionConfig det = detection_from(cfg.raw, cfg.seed, errors);
  std::vector<cplx> alphas =
      alphas_from(cfg.raw, first_pair + pairs - 1, errors);
  for (int k = 1; k < first_pair; ++k) alphas[k - 1] = 0.0;
  if (!errors.empty()) throw ValidationError(errors);

  const BiphotonState state = make_comb_state(lattice, alphas);
  std::vector<int> signal_bins, idler_bins;
  for (int k = first_pair; k < first_pair + pairs; ++k) {
    signal_bins.push_back(lattice.signal_index(k));
    idler_bins.push_back(lattice.idler_index(k));
  }
  const Eigen::MatrixXd jsi = compute_jsi(state, signal_bins, idler_bins, det);
  Eigen::MatrixXd net = jsi;
  net.array() -= det.accidental_rate * det.integration_time;
  net = net.cwiseMax(0.0);

  ResultBundle bundle;
  bundle.scalars["schmidt_bound"] = schmidt_bound(net);
  Eigen::MatrixXcd jsi_c = jsi.cast<cplx>();
  bundle.matrices["jsi"] = jsi_c;
  Sweep diag{"jsi_diagonal", {"pair", "expected_counts"}, {}};
  for (int i = 0; i < jsi.rows(); ++i)
    diag.rows.push_back({static_cast<double>(first_pair + i), jsi(i, i)});
  bundle.sweeps.push_back(std::move(diag));
  return bundle;
}

inline ResultBundle run_dip(const ScenarioConfig& cfg) {
  std::vector<std::string> errors;
  const FrequencyLattice lattice = lattice_from(cfg.raw, errors);
  const double gamma =
      cfg.raw.value("gamma_mhz", lattice.pump_freq_thz * 1e6 / 2e6);
  const double phase = cfg.raw.value("relative_phase", std::numbers::pi);
  const std::vector<double> offsets = sweep_values(cfg.raw, "offsets_ghz", errors);
  if (gamma <= 0.0) errors.push_back("gamma_mhz must be positive");
  if (!errors.empty()) throw ValidationError(errors);

  const auto scan = dip_scan(lattice, Lineshape::lorentzian(gamma), offsets, phase);
  ResultBundle bundle;
  Sweep sweep{"dip", {"offset_ghz", "coincidence"}, {}};
  double min_val = 1e300, min_off = 0.0, max_val = -1e300;
  for (const auto& [f, p] : scan) {
    sweep.rows.push_back({f, p});
    if (p < min_val) {
      min_val = p;
      min_off = f;
    }
    max_val = std::max(max_val, p);
  }
  bundle.sweeps.push_back(std::move(sweep));
  bundle.scalars["dip_minimum_offset_ghz"] = min_off;
  bundle.scalars["dip_minimum"] = min_val;
  if (max_val + min_val > 0.0)
    bundle.scalars["visibility"] = visibility(max_val, min_val);
  return bundle;
}

inline ResultBundle run_fringe(const ScenarioConfig& cfg) {
  std::vector<std::string> errors;
  const FrequencyLattice lattice = lattice_from(cfg.raw, errors);
  const std::vector<int> pair_list =
      cfg.raw.value("pairs", std::vector<int>{6, 7});
  if (pair_list.size() != 2) errors.push_back("fringe needs exactly two comb pairs");
  DetectionConfig det = detection_from(cfg.raw, cfg.seed, errors);
  const std::vector<double> phases = sweep_values(cfg.raw, "phases", errors);
  const double mu = cfg.raw.value("mod_index", 1.0);
  const bool subtract = cfg.raw.value("subtract_background", false);
  if (!errors.empty()) throw ValidationError(errors);

  const int lo = std::min(pair_list[0], pair_list[1]);
  const int hi = std::max(pair_list[0], pair_list[1]);
  std::vector<cplx> alphas(hi, cplx{0.0, 0.0});
  alphas[lo - 1] = alphas[hi - 1] = 1.0;

  SpectralMask static_mask = SpectralMask::phase_only();
  if (cfg.raw.contains("dispersion")) {
    const json d = cfg.raw.at("dispersion");
    DispersionSpec spec;
    spec.fiber_length_m = d.value("fiber_length_m", 0.0);
    spec.dispersion_ps_nm_km = d.value("dispersion_ps_nm_km", 17.0);
    spec.ref_wavelength_nm = d.value("ref_wavelength_nm", 1550.0);
    spec.compensate = d.value("compensate", false);
    static_mask = dispersion_mask(lattice, spec);
  }

  const int steps_between = (hi - lo) * lattice.subdivision;
  if (steps_between % 2 != 0)
    throw ValidationError({"pair midpoint does not land on a lattice index"});
  const int mid_signal = lo * lattice.subdivision + steps_between / 2;

  auto builder = [&](double phi) {
    BiphotonState state = make_comb_state(lattice, alphas);
    SpectralMask sweep_mask = SpectralMask::phase_only();
    sweep_mask.set_phase(lattice.signal_index(hi), phi / 2.0);
    sweep_mask.set_phase(lattice.idler_index(hi), phi / 2.0);
    state = apply_mask(state, sweep_mask.composed_with(static_mask));
    return apply_modulator(state, ModulatorDrive{1, mu, 0.0, 0});
  };
  auto points = fringe_scan(builder, phases, mid_signal, -mid_signal, det);

  const double floor = det.accidental_rate * det.integration_time;
  ResultBundle bundle;
  Sweep sweep{"fringe", {"phase_rad", "counts"}, {}};
  for (const auto& [phi, n] : points) sweep.rows.push_back({phi, n});
  bundle.sweeps.push_back(std::move(sweep));

  if (subtract)
    for (auto& pt : points) pt.second = std::max(0.0, pt.second - floor);
  const FringeFit fit = fit_fringe(points, subtract ? 0.0 : floor);
  bundle.scalars["visibility"] = fit.visibility;
  bundle.scalars["phase_offset_rad"] = fit.phase_offset;
  bundle.scalars["fringe_amplitude"] = fit.amplitude;
  return bundle;
}

inline ResultBundle run_tomo(const ScenarioConfig& cfg) {
  if (cfg.fixture_path.empty())
    throw ValidationError({"tomo scenario requires a fixture path"});
  const auto raw = parse_table1_fixture(cfg.fixture_path);
  const auto projections = build_projection_set();
  const TomographyData data = tally_projection_counts(raw, projections);
  MleOptions options;
  options.seed = cfg.seed == 0 ? 12345 : cfg.seed;
  DensityMatrix rho;
  try {
    rho = mle_estimate(data, projections, options);
  } catch (const MleNotConverged& e) {
    throw NonConvergence(e.what());
  }
  ResultBundle bundle;
  bundle.matrices["density_matrix"] = rho;
  bundle.scalars["negativity"] = negativity(rho, 2, 2);
  bundle.scalars["likelihood"] = likelihood(rho, data, projections);
  bundle.scalars["normalization_C"] = data.normalization;
  Eigen::Vector4cd bell = Eigen::Vector4cd::Zero();
  bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
  bundle.scalars["fidelity_vs_bell"] =
      fidelity(rho, DensityMatrix(bell * bell.adjoint()));
  return bundle;
}

inline ResultBundle run_cglmp(const ScenarioConfig& cfg) {
  ResultBundle bundle;
  if (!cfg.fixture_path.empty()) {
    const CGLMPCounts counts =
        parse_table2_fixture(cfg.fixture_path, cfg.raw.value("repeats", 3));
    const I3Estimate est = i3_from_counts(counts);
    bundle.scalars["i3"] = est.i3;
    bundle.scalars["i3_sigma"] = est.sigma;
    return bundle;
  }
  std::vector<std::string> errors;
  const FrequencyLattice lattice = lattice_from(cfg.raw, errors);
  DetectionConfig det = detection_from(cfg.raw, cfg.seed, errors);
  const double lambda = cfg.raw.value("lambda", 1.0);
  if (lambda < 0.0 || lambda > 1.0) errors.push_back("lambda must lie in [0, 1]");
  if (!errors.empty()) throw ValidationError(errors);
  const CGLMPCounts counts =
      simulate_cglmp_run(NoiseMixture{lambda}, CGLMPBasis{}, det, lattice);
  CGLMPCounts poisson = counts;
  poisson.stds.reset();
  const I3Estimate est = i3_from_counts(poisson);
  bundle.scalars["i3"] = est.i3;
  bundle.scalars["i3_sigma"] = est.sigma;
  Sweep sweep{"cglmp_counts", {"term_index", "counts"}, {}};
  for (int i = 0; i < 8; ++i)
    sweep.rows.push_back({static_cast<double>(i), counts.counts[i]});
  bundle.sweeps.push_back(std::move(sweep));
  return bundle;
}

// Free-form chain: comb state -> masks / modulator / dispersion -> counts
// over the listed comb pairs.
inline ResultBundle run_simulate(const ScenarioConfig& cfg) {
  std::vector<std::string> errors;
  const FrequencyLattice lattice = lattice_from(cfg.raw, errors);
  DetectionConfig det = detection_from(cfg.raw, cfg.seed, errors);
  const int pairs = cfg.raw.value("pairs", 3);
  std::vector<cplx> alphas = alphas_from(cfg.raw, pairs, errors);
  if (!errors.empty()) throw ValidationError(errors);

  BiphotonState state = make_comb_state(lattice, alphas);
  for (const json& element : cfg.raw.value("chain", json::array())) {
    const std::string type = element.value("type", "");
    if (type == "mask") {
      SpectralMask mask = element.value("mode", "phase") == "blocking"
                              ? SpectralMask::blocking()
                              : SpectralMask::phase_only();
      for (const auto& [key, val] : element.value("phases", json::object()).items())
        mask.set_phase(std::stoi(key), val.get<double>());
      for (const auto& [key, val] :
           element.value("transmission", json::object()).items())
        mask.set(std::stoi(key), val.get<double>());
      state = apply_mask(state, mask);
    } else if (type == "modulator") {
      ModulatorDrive drive;
      drive.rf_steps = element.value("rf_steps", 1);
      drive.mod_index = element.value("mod_index", 0.0);
      drive.rf_phase = element.value("rf_phase", 0.0);
      state = apply_modulator(state, drive);
    } else if (type == "dispersion") {
      DispersionSpec spec;
      spec.fiber_length_m = element.value("fiber_length_m", 0.0);
      spec.dispersion_ps_nm_km = element.value("dispersion_ps_nm_km", 17.0);
      spec.ref_wavelength_nm = element.value("ref_wavelength_nm", 1550.0);
      spec.compensate = element.value("compensate", false);
      state = apply_mask(state, dispersion_mask(lattice, spec));
    } else {
      throw ValidationError({"unknown chain element type '" + type + "'"});
    }
  }

  ResultBundle bundle;
  bundle.scalars["survival_probability"] = state_norm(state);
  CoincidenceTable table;
  table.integration_time = det.integration_time;
  std::mt19937_64 rng(det.rng_seed);
  for (const auto& [bins, c] : state.amplitudes) {
    CoincidenceRecord rec;
    rec.signal_channel = std::to_string(bins.first);
    rec.idler_channel = std::to_string(bins.second);
    const double expected = expected_counts(std::norm(c), det);
    rec.counts = static_cast<double>(sample_counts(expected, rng));
    rec.accidentals = det.accidental_rate * det.integration_time;
    table.records.push_back(rec);
  }
  bundle.tables["coincidences"] = std::move(table);
  return bundle;
}

}  // namespace detail

inline ResultBundle run_scenario(const ScenarioConfig& cfg) {
  ResultBundle bundle;
  if (cfg.kind == "jsi")
    bundle = detail::run_jsi(cfg);
  else if (cfg.kind == "dip")
    bundle = detail::run_dip(cfg);
  else if (cfg.kind == "fringe")
    bundle = detail::run_fringe(cfg);
  else if (cfg.kind == "tomo")
    bundle = detail::run_tomo(cfg);
  else if (cfg.kind == "cglmp")
    bundle = detail::run_cglmp(cfg);
  else if (cfg.kind == "simulate")
    bundle = detail::run_simulate(cfg);
  else
    throw ValidationError({"unknown scenario kind '" + cfg.kind + "'"});
  bundle.config_hash = detail::fnv1a_hex(cfg.raw.dump());
  bundle.seed = cfg.seed;
  return bundle;
}

// ---- output emission ------------------------------------------------------

namespace detail {

inline void atomic_write(const std::filesystem::path& path, const std::string& data) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + path.string());
    out << data;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_sweep(const Sweep& sweep) {
  std::ostringstream out;
  for (std::size_t i = 0; i < sweep.columns.size(); ++i)
    out << (i ? ", " : "") << sweep.columns[i];
  out << "\n";
  out << std::setprecision(12);
  for (const auto& row : sweep.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? ", " : "") << row[i];
    out << "\n";
  }
  return out.str();
}

inline std::string format_matrix(const Eigen::MatrixXcd& m) {
  std::ostringstream out;
  out << "rows " << m.rows() << " cols " << m.cols() << "\n";
  out << std::setprecision(12) << std::scientific;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      out << i << " " << j << " " << m(i, j).real() << " " << m(i, j).imag() << "\n";
  return out.str();
}

inline Eigen::MatrixXcd parse_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  std::string word;
  long rows = 0, cols = 0;
  in >> word >> rows >> word >> cols;
  Eigen::MatrixXcd m(rows, cols);
  long i, j;
  double re, im;
  while (in >> i >> j >> re >> im) m(i, j) = cplx{re, im};
  return m;
}

// Minimal line plot, sized 640x400, first column as x and second as y.
inline std::string format_svg(const Sweep& sweep) {
  const double w = 640.0, h = 400.0, pad = 40.0;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& row : sweep.rows) {
    if (row.size() < 2) continue;
    xmin = std::min(xmin, row[0]);
    xmax = std::max(xmax, row[0]);
    ymin = std::min(ymin, row[1]);
    ymax = std::max(ymax, row[1]);
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  std::ostringstream out;
  out << std::setprecision(8);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"black\" points=\"";
  for (const auto& row : sweep.rows) {
    if (row.size() < 2) continue;
    const double x = pad + (row[0] - xmin) / (xmax - xmin) * (w - 2 * pad);
    const double y = h - pad - (row[1] - ymin) / (ymax - ymin) * (h - 2 * pad);
    out << x << "," << y << " ";
  }
  out << "\"/>\n<text x=\"" << pad << "\" y=\"20\">" << sweep.name << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace detail

inline void emit_outputs(const ResultBundle& bundle,
                         const std::filesystem::path& out_dir,
                         bool with_plots = true) {
  std::filesystem::create_directories(out_dir);
  json results;
  results["tool"] = kToolVersion;
  results["config_hash"] = bundle.config_hash;
  results["seed"] = bundle.seed;
  for (const auto& [name, value] : bundle.scalars) results[name] = value;
  detail::atomic_write(out_dir / "results.json", results.dump(2) + "\n");

  for (const auto& sweep : bundle.sweeps) {
    detail::atomic_write(out_dir / (sweep.name + ".csv"), detail::format_sweep(sweep));
    if (with_plots)
      detail::atomic_write(out_dir / (sweep.name + ".svg"), detail::format_svg(sweep));
  }
  for (const auto& [name, matrix] : bundle.matrices)
    detail::atomic_write(out_dir / (name + ".txt"), detail::format_matrix(matrix));
  for (const auto& [name, table] : bundle.tables)
    detail::atomic_write(out_dir / (name + ".csv"), format_coincidence_table(table));
}

}  // namespace fbc
