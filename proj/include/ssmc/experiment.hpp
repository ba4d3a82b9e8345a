#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "ssmc/errors.hpp"
#include "ssmc/estimator.hpp"
#include "ssmc/library_io.hpp"
#include "ssmc/protocol.hpp"
#include "ssmc/pulsegrid.hpp"
#include "ssmc/units.hpp"

namespace ssmc {

struct MorseFamily {
  double m_ref = 1800.0;
  double dm = 0.05;
  morse::MorseParameters base{};
  double e0 = 1e-5;          // a.u.
  double omega_cm = 3000.0;  // carrier, cm^-1
};

struct HubbardFamily {
  std::size_t sites = 6;
  double t0_ev = 0.52;
  double u0 = 1.0;  // in units of t0
  double du = 0.1;
  std::optional<double> u_max;  // when set, U is spread evenly over [u0, u_max]
  double lattice_angstrom = 4.0;
  double e0_mv_per_cm = 10.0;
  double omega0_thz = 32.9;
};

enum class naive_envelope { full, repeated };

struct ExperimentConfig {
  model_family family = model_family::morse;
  std::size_t n_s = 10;
  std::optional<double> T;  // a.u. for morse; hbar/t0 for hubbard (default: two pump periods)
  std::optional<double> dt;
  std::optional<std::size_t> n_t;
  MorseFamily morse;
  HubbardFamily hubbard;
  naive_envelope envelope = naive_envelope::full;
  double naive_e0_scale = 1.0;
  std::string order_rule = "ascending";
  std::vector<std::size_t> order;  // explicit permutation, overrides order_rule
  double sigma_rel = 1e-3;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::optional<std::vector<double>> y;
  std::string scan_axis;
  std::vector<double> scan_values;
  bool save_states = false;
  bool hard_zero_blocks = false;
  unsigned threads = 0;  // 0: hardware concurrency
  std::string library_path;
  std::string output_path;
  std::optional<double> extend_mass;
  std::optional<double> extend_onsite;
  std::string extend_label;
  KrylovOptions krylov{};

  UnitSystem units() const {
    UnitSystem u;
    u.hopping_electronvolt = hubbard.t0_ev;
    u.validate();
    return u;
  }
};

namespace config_detail {

using json = nlohmann::json;

inline void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw invalid_argument("config: '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw invalid_argument("config: unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

inline void positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw invalid_argument(std::string("config: ") + name + " must be positive");
}

}  // namespace config_detail

inline void validate(const ExperimentConfig& c) {
  using config_detail::positive;
  if (c.n_s < 1) throw invalid_argument("config: n_s must be at least 1");
  if (c.T) positive(*c.T, "T");
  if (c.dt) positive(*c.dt, "dt");
  if (c.n_t && *c.n_t == 0) throw invalid_argument("config: n_t must be positive");
  if (c.family == model_family::morse) {
    positive(c.morse.m_ref, "morse.m_ref");
    if (!(c.morse.dm >= 0.0 && c.morse.dm < 1.0)) throw invalid_argument("config: morse.dm must be in [0, 1)");
    positive(c.morse.e0, "morse.e0");
    positive(c.morse.omega_cm, "morse.omega_cm");
  } else {
    positive(c.hubbard.t0_ev, "hubbard.t0_ev");
    if (!std::isfinite(c.hubbard.u0)) throw invalid_argument("config: hubbard.u0 must be finite");
    if (!(c.hubbard.du >= 0.0)) throw invalid_argument("config: hubbard.du must be non-negative");
    if (c.hubbard.sites < 2 || c.hubbard.sites % 2 != 0) {
      throw invalid_argument("config: hubbard.sites must be even (half filling)");
    }
    positive(c.hubbard.lattice_angstrom, "hubbard.lattice_angstrom");
    positive(c.hubbard.e0_mv_per_cm, "hubbard.e0_mv_per_cm");
    positive(c.hubbard.omega0_thz, "hubbard.omega0_thz");
  }
  positive(c.naive_e0_scale, "naive.e0_scale");
  if (!(c.sigma_rel >= 0.0)) throw invalid_argument("config: sigma_rel must be non-negative");
  if (c.order.empty() && c.order_rule != "ascending" && c.order_rule != "descending") {
    throw invalid_argument("config: order must be 'ascending', 'descending' or a permutation");
  }
  if (c.y && c.y->size() != c.n_s) throw invalid_argument("config: y must have n_s entries");
  static const std::set<std::string> axes{"", "T", "n_s", "dm", "dU", "sigma"};
  if (!axes.count(c.scan_axis)) throw invalid_argument("config: scan.axis must be one of T, n_s, dm, dU, sigma");
  if (!c.scan_axis.empty() && c.scan_values.empty()) throw invalid_argument("config: scan.values is empty");
  if (c.scan_axis == "dm" && c.family != model_family::morse) throw invalid_argument("config: dm scans need morse");
  if (c.scan_axis == "dU" && c.family != model_family::hubbard) throw invalid_argument("config: dU scans need hubbard");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using namespace config_detail;
  ExperimentConfig c;
  try {
    require_keys(j,
                 {"family", "n_s", "T", "dt", "n_t", "morse", "hubbard", "naive", "order", "sigma_rel", "seeds", "y",
                  "scan", "save_states", "hard_zero_blocks", "threads", "library", "output", "extend", "krylov"},
                 "config");
    c.family = io::parse_family(j.value("family", std::string("morse")));
    if (c.family == model_family::hubbard) c.n_s = 2;
    read(j, "n_s", c.n_s);
    read(j, "T", c.T);
    read(j, "dt", c.dt);
    read(j, "n_t", c.n_t);
    if (j.contains("morse")) {
      const auto& m = j.at("morse");
      require_keys(m,
                   {"m_ref", "dm", "depth_cm", "we_cm", "be_cm", "r_eq_angstrom", "m0_debye", "pade", "n_r", "r_min",
                    "r_max", "e0", "omega_cm"},
                   "morse");
      read(m, "m_ref", c.morse.m_ref);
      read(m, "dm", c.morse.dm);
      read(m, "depth_cm", c.morse.base.depth_cm);
      read(m, "we_cm", c.morse.base.we_cm);
      read(m, "be_cm", c.morse.base.be_cm);
      read(m, "r_eq_angstrom", c.morse.base.r_eq_angstrom);
      read(m, "m0_debye", c.morse.base.m0_debye);
      read(m, "pade", c.morse.base.pade);
      read(m, "n_r", c.morse.base.n_r);
      read(m, "r_min", c.morse.base.r_min);
      read(m, "r_max", c.morse.base.r_max);
      read(m, "e0", c.morse.e0);
      read(m, "omega_cm", c.morse.omega_cm);
    }
    if (j.contains("hubbard")) {
      const auto& h = j.at("hubbard");
      require_keys(h, {"sites", "t0_ev", "u0", "du", "u_max", "lattice_angstrom", "e0_mv_per_cm", "omega0_thz"},
                   "hubbard");
      read(h, "sites", c.hubbard.sites);
      read(h, "t0_ev", c.hubbard.t0_ev);
      read(h, "u0", c.hubbard.u0);
      read(h, "du", c.hubbard.du);
      read(h, "u_max", c.hubbard.u_max);
      read(h, "lattice_angstrom", c.hubbard.lattice_angstrom);
      read(h, "e0_mv_per_cm", c.hubbard.e0_mv_per_cm);
      read(h, "omega0_thz", c.hubbard.omega0_thz);
    }
    if (j.contains("naive")) {
      const auto& n = j.at("naive");
      require_keys(n, {"envelope", "e0_scale"}, "naive");
      const std::string env = n.value("envelope", std::string("full"));
      if (env == "full") {
        c.envelope = naive_envelope::full;
      } else if (env == "repeated") {
        c.envelope = naive_envelope::repeated;
      } else {
        throw invalid_argument("config: naive.envelope must be 'full' or 'repeated'");
      }
      read(n, "e0_scale", c.naive_e0_scale);
    }
    if (j.contains("order")) {
      if (j.at("order").is_string()) {
        c.order_rule = j.at("order").get<std::string>();
      } else {
        c.order = j.at("order").get<std::vector<std::size_t>>();
      }
    }
    read(j, "sigma_rel", c.sigma_rel);
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_array()) {
        c.seeds = s.get<std::vector<std::uint64_t>>();
      } else {
        require_keys(s, {"first", "count"}, "seeds");
        const auto first = s.value("first", std::uint64_t{0});
        const auto count = s.value("count", std::uint64_t{10});
        c.seeds.clear();
        for (std::uint64_t i = 0; i < count; ++i) c.seeds.push_back(first + i);
      }
      if (c.seeds.empty()) throw invalid_argument("config: seeds is empty");
    }
    read(j, "y", c.y);
    if (j.contains("scan")) {
      const auto& s = j.at("scan");
      require_keys(s, {"axis", "values"}, "scan");
      c.scan_axis = s.at("axis").get<std::string>();
      c.scan_values = s.at("values").get<std::vector<double>>();
    }
    read(j, "save_states", c.save_states);
    read(j, "hard_zero_blocks", c.hard_zero_blocks);
    read(j, "threads", c.threads);
    read(j, "library", c.library_path);
    read(j, "output", c.output_path);
    if (j.contains("extend")) {
      const auto& e = j.at("extend");
      require_keys(e, {"mass", "onsite", "label"}, "extend");
      read(e, "mass", c.extend_mass);
      read(e, "onsite", c.extend_onsite);
      read(e, "label", c.extend_label);
    }
    if (j.contains("krylov")) {
      const auto& k = j.at("krylov");
      require_keys(k, {"max_dim", "tolerance"}, "krylov");
      read(k, "max_dim", c.krylov.max_dim);
      read(k, "tolerance", c.krylov.tolerance);
    }
  } catch (const nlohmann::json::exception& e) {
    throw invalid_argument(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw invalid_argument("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

/// Segment length and step for a config.
struct SegmentTiming {
  double T = 0.0;
  double dt = 0.0;
  std::size_t n_t = 0;
};

inline SegmentTiming segment_timing(const ExperimentConfig& c) {
  SegmentTiming s;
  if (c.family == model_family::morse) {
    s.T = c.T.value_or(2500.0);
    if (c.n_t && !c.dt) {
      s.n_t = *c.n_t;
      s.dt = s.T / static_cast<double>(s.n_t);
      return s;
    }
    s.dt = c.dt.value_or(2.5);
  } else {
    s.T = c.T.value_or(hubbard_pump_duration(c.hubbard.omega0_thz, c.units()));
    if (!c.dt) {
      s.n_t = c.n_t.value_or(2000);
      s.dt = s.T / static_cast<double>(s.n_t);
      return s;
    }
    s.dt = *c.dt;
  }
  const double steps = s.T / s.dt;
  s.n_t = static_cast<std::size_t>(std::llround(steps));
  if (s.n_t == 0 || std::abs(steps - static_cast<double>(s.n_t)) > 1e-9 * steps) {
    throw invalid_argument("config: T must be an integer multiple of dt");
  }
  if (c.n_t && *c.n_t != s.n_t) throw invalid_argument("config: n_t disagrees with T / dt");
  return s;
}

inline std::vector<double> species_masses(const MorseFamily& f, std::size_t n_s) {
  std::vector<double> m(n_s, f.m_ref);
  if (n_s == 1) return m;
  for (std::size_t s = 0; s < n_s; ++s) {
    m[s] = f.m_ref * (1.0 - f.dm + f.dm * static_cast<double>(s) / static_cast<double>(n_s - 1));
  }
  return m;
}

inline std::vector<double> species_onsite(const HubbardFamily& f, std::size_t n_s) {
  std::vector<double> u(n_s, f.u0);
  for (std::size_t s = 0; s < n_s; ++s) {
    if (f.u_max) {
      u[s] = n_s == 1 ? f.u0 : f.u0 + (*f.u_max - f.u0) * static_cast<double>(s) / static_cast<double>(n_s - 1);
    } else {
      u[s] = f.u0 + f.du * static_cast<double>(s);
    }
  }
  return u;
}

inline std::string number_label(const char* prefix, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.10g", prefix, v);
  return buf;
}

inline morse::MorseModel morse_species(const ExperimentConfig& c, double mass, std::string label = {}) {
  morse::MorseParameters p = c.morse.base;
  p.mass = mass;
  return morse::MorseModel(morse::make_spec(p, c.units()), label.empty() ? number_label("m", mass) : std::move(label),
                           c.krylov);
}

inline hubbard::HubbardSpec hubbard_spec(const ExperimentConfig& c, double onsite) {
  hubbard::HubbardSpec h;
  h.sites = c.hubbard.sites;
  h.n_up = h.n_down = c.hubbard.sites / 2;
  h.hopping = 1.0;
  h.onsite = onsite;
  h.lattice = c.hubbard.lattice_angstrom;
  h.validate();
  return h;
}

inline std::vector<morse::MorseModel> build_morse_species(const ExperimentConfig& c) {
  std::vector<morse::MorseModel> out;
  for (double m : species_masses(c.morse, c.n_s)) out.push_back(morse_species(c, m));
  return out;
}

inline std::vector<hubbard::HubbardModel> build_hubbard_species(const ExperimentConfig& c) {
  const auto basis =
      std::make_shared<const hubbard::FockBasis>(c.hubbard.sites, c.hubbard.sites / 2, c.hubbard.sites / 2);
  std::vector<hubbard::HubbardModel> out;
  for (double u : species_onsite(c.hubbard, c.n_s)) {
    out.emplace_back(hubbard_spec(c, u), basis, number_label("U", u), c.krylov);
  }
  return out;
}

inline std::vector<std::size_t> suppression_order(const ExperimentConfig& c) {
  if (!c.order.empty()) {
    detail::require_permutation(c.order, c.n_s);
    return c.order;
  }
  auto o = identity_order(c.n_s);
  if (c.order_rule == "descending") std::reverse(o.begin(), o.end());
  return o;
}

inline SampledField pump_field(const ExperimentConfig& c, const SegmentTiming& t) {
  const TimeGrid grid = make_time_grid(0.0, t.dt, t.n_t);
  if (c.family == model_family::morse) {
    const double omega = convert(c.morse.omega_cm, unit::wavenumber, unit::au_angular_frequency, c.units());
    return pump_pulse_molecular(c.morse.e0, t.T, omega, grid);
  }
  return pump_phase_hubbard(c.hubbard.e0_mv_per_cm, c.hubbard.omega0_thz, c.hubbard.lattice_angstrom, t.T, grid,
                            c.units());
}

/// Transform-limited baseline over [0, n_s T): one sin^2 lobe, or one lobe per T.
inline SampledField naive_field(const ExperimentConfig& c, const SegmentTiming& t) {
  const TimeGrid grid = make_time_grid(0.0, t.dt, c.n_s * t.n_t);
  const double period = c.envelope == naive_envelope::full ? static_cast<double>(c.n_s) * t.T : t.T;
  if (c.family == model_family::morse) {
    const double omega = convert(c.morse.omega_cm, unit::wavenumber, unit::au_angular_frequency, c.units());
    return sin2_carrier_field(c.morse.e0 * c.naive_e0_scale, period, omega, grid);
  }
  return sin2_peierls_phase(c.hubbard.e0_mv_per_cm * c.naive_e0_scale, c.hubbard.omega0_thz,
                            c.hubbard.lattice_angstrom, period, grid, c.units());
}

/// Calls `f` with the species of the configured family as a std::vector.
template <class F>
decltype(auto) with_species(const ExperimentConfig& c, F&& f) {
  if (c.family == model_family::morse) return f(build_morse_species(c));
  return f(build_hubbard_species(c));
}

inline ResponseLibrary build_library(const ExperimentConfig& c, bool naive) {
  if (c.n_s < 2) throw invalid_argument("build_library: n_s must be at least 2");
  const SegmentTiming t = segment_timing(c);
  return with_species(c, [&](const auto& species) {
    using M = typename std::decay_t<decltype(species)>::value_type;
    const std::span<const M> view(species);
    const auto order = suppression_order(c);
    ResponseLibrary lib = naive ? run_naive(view, naive_field(c, t), t.n_t)
                                : run_ssmc(view, pump_field(c, t), std::span<const std::size_t>(order));
    if (!c.save_states) lib.final_states.clear();
    return lib;
  });
}

inline std::vector<morse::MorseModel> morse_models(const ResponseLibrary& lib, KrylovOptions krylov = {}) {
  std::vector<morse::MorseModel> out;
  for (std::size_t s = 0; s < lib.n_species(); ++s) {
    out.emplace_back(std::get<morse::MorseSpec>(lib.species[s]), lib.labels[s], krylov);
  }
  return out;
}

inline std::vector<hubbard::HubbardModel> hubbard_models(const ResponseLibrary& lib, KrylovOptions krylov = {}) {
  std::vector<hubbard::HubbardModel> out;
  std::shared_ptr<const hubbard::FockBasis> basis;
  for (std::size_t s = 0; s < lib.n_species(); ++s) {
    const auto& spec = std::get<hubbard::HubbardSpec>(lib.species[s]);
    if (!basis) basis = std::make_shared<const hubbard::FockBasis>(spec.sites, spec.n_up, spec.n_down);
    out.emplace_back(spec, basis, lib.labels[s], krylov);
  }
  return out;
}

/// Appends the species described by `extend_mass` / `extend_onsite`.
inline ResponseLibrary extend_from_config(const ResponseLibrary& lib, const ExperimentConfig& c) {
  if (lib.family == model_family::morse) {
    if (!c.extend_mass) throw invalid_argument("extend: morse libraries need extend.mass");
    const auto existing = morse_models(lib, c.krylov);
    const auto added = morse_species(c, *c.extend_mass, c.extend_label);
    return extend_library(lib, std::span<const morse::MorseModel>(existing), added);
  }
  if (!c.extend_onsite) throw invalid_argument("extend: hubbard libraries need extend.onsite");
  const auto existing = hubbard_models(lib, c.krylov);
  const auto& ref = std::get<hubbard::HubbardSpec>(lib.species.front());
  hubbard::HubbardSpec spec = ref;
  spec.onsite = *c.extend_onsite;
  const hubbard::HubbardModel added(spec, existing.front().shared_basis(),
                                    c.extend_label.empty() ? number_label("U", spec.onsite) : c.extend_label, c.krylov);
  return extend_library(lib, std::span<const hubbard::HubbardModel>(existing), added);
}

inline method_tag method_of(const ResponseLibrary& lib) { return lib.naive ? method_tag::naive : method_tag::ssmc; }

/// Noise-free and noisy recovery for one concentration draw.
struct SeedOutcome {
  std::uint64_t seed = 0;
  double eps_clean = 0.0;
  double eps_noisy = 0.0;
  EstimationReport noisy;
};

inline Eigen::VectorXd concentrations_for_seed(std::size_t n_s, std::uint64_t seed) {
  return random_concentrations(n_s, Rng::derive(seed, 0));
}

inline SeedOutcome evaluate_seed(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double sigma_rel,
                                 std::uint64_t seed, method_tag method) {
  SeedOutcome out;
  out.seed = seed;
  out.eps_clean = characterize(a, y, 0.0, 0, method).epsilon;
  out.noisy = characterize(a, y, sigma_rel, Rng::derive(seed, 1), method);
  out.eps_noisy = out.noisy.epsilon;
  return out;
}

// ---------------------------------------------------------------------------
// Scans

struct ScanRow {
  std::string axis;
  double value = 0.0;
  std::string method;
  double cond_a = std::numeric_limits<double>::quiet_NaN();
  double eps_clean = std::numeric_limits<double>::quiet_NaN();
  double eps_noisy = std::numeric_limits<double>::quiet_NaN();
  std::string seed;  // decimal seed or "median"
  std::string error;
};

/// Per-(value, method) summary kept alongside the CSV rows.
struct ScanPoint {
  double value = 0.0;
  method_tag method = method_tag::ssmc;
  double cond_a = std::numeric_limits<double>::quiet_NaN();
  double median_eps_clean = std::numeric_limits<double>::quiet_NaN();
  double median_eps_noisy = std::numeric_limits<double>::quiet_NaN();
  double suppression = std::numeric_limits<double>::quiet_NaN();  // SSMC only
  std::vector<SeedOutcome> seeds;
  std::string error;
};

struct ScanResult {
  std::vector<ScanPoint> points;
  std::vector<ScanRow> rows;
};

inline ExperimentConfig with_axis(ExperimentConfig c, const std::string& axis, double v) {
  if (axis == "T") {
    c.T = v;
  } else if (axis == "n_s") {
    if (!(v >= 1.0) || v != std::floor(v)) throw invalid_argument("scan: n_s values must be positive integers");
    c.n_s = static_cast<std::size_t>(v);
    if (c.y) c.y.reset();
  } else if (axis == "dm") {
    c.morse.dm = v;
  } else if (axis == "dU") {
    c.hubbard.du = v;
    c.hubbard.u_max.reset();
  } else if (axis == "sigma") {
    c.sigma_rel = v;
  }
  validate(c);
  return c;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

inline std::string describe_failure(const std::exception& e) {
  if (dynamic_cast<const tracking_error*>(&e)) return std::string("tracking: ") + e.what();
  if (dynamic_cast<const numeric_error*>(&e)) return std::string("numeric: ") + e.what();
  return e.what();
}

inline ScanPoint run_point(const ExperimentConfig& c, double value, method_tag method) {
  ScanPoint p;
  p.value = value;
  p.method = method;
  try {
    const ResponseLibrary lib = build_library(c, method == method_tag::naive);
    const Eigen::MatrixXd a = assemble_matrix(lib, c.hard_zero_blocks);
    p.cond_a = condition_number(a);
    if (!lib.naive) p.suppression = suppression_ratio(lib);
    std::vector<double> clean, noisy;
    for (std::uint64_t seed : c.seeds) {
      const Eigen::VectorXd y = c.y ? Eigen::Map<const Eigen::VectorXd>(c.y->data(), static_cast<Eigen::Index>(c.y->size())).eval()
                                    : concentrations_for_seed(c.n_s, seed);
      p.seeds.push_back(evaluate_seed(a, y, c.sigma_rel, seed, method));
      clean.push_back(p.seeds.back().eps_clean);
      noisy.push_back(p.seeds.back().eps_noisy);
    }
    p.median_eps_clean = median(clean);
    p.median_eps_noisy = median(noisy);
  } catch (const std::exception& e) {
    p.error = describe_failure(e);
  }
  return p;
}

}  // namespace detail

/// Runs both methods at every scan value. Points are independent and are spread
/// over `threads` workers; results come back in (value, method) order.
inline ScanResult run_scan(const ExperimentConfig& c) {
  validate(c);
  if (c.scan_axis.empty()) throw invalid_argument("scan: config has no scan axis");
  struct Job {
    std::size_t index;
    double value;
    method_tag method;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < c.scan_values.size(); ++i) {
    jobs.push_back({2 * i, c.scan_values[i], method_tag::ssmc});
    jobs.push_back({2 * i + 1, c.scan_values[i], method_tag::naive});
  }
  std::vector<ScanPoint> points(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      try {
        points[job.index] = detail::run_point(with_axis(c, c.scan_axis, job.value), job.value, job.method);
      } catch (const std::exception& e) {
        points[job.index].value = job.value;
        points[job.index].method = job.method;
        points[job.index].error = detail::describe_failure(e);
      }
    }
  };
  unsigned n_threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ScanResult out;
  for (const auto& p : points) {
    const std::string method = to_string(p.method);
    if (!p.error.empty()) {
      out.rows.push_back({c.scan_axis, p.value, method, p.cond_a, NAN, NAN, "", p.error});
      continue;
    }
    for (const auto& s : p.seeds) {
      out.rows.push_back({c.scan_axis, p.value, method, p.cond_a, s.eps_clean, s.eps_noisy, std::to_string(s.seed), ""});
    }
    out.rows.push_back({c.scan_axis, p.value, method, p.cond_a, p.median_eps_clean, p.median_eps_noisy, "median", ""});
  }
  out.points = std::move(points);
  return out;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' || ch == '\r' ? ' ' : ch;
  }
  return out + "\"";
}

inline void write_scan_csv(std::ostream& os, const std::vector<ScanRow>& rows) {
  os << "scan_param,value,method,cond_A,eps_clean,eps_noisy,seed,error\n";
  for (const auto& r : rows) {
    os << r.axis << ',' << format_number(r.value) << ',' << r.method << ',' << format_number(r.cond_a) << ','
       << format_number(r.eps_clean) << ',' << format_number(r.eps_noisy) << ',' << r.seed << ',' << csv_field(r.error)
       << '\n';
  }
}

}  // namespace ssmc
