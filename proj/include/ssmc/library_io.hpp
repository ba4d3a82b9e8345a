#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "ssmc/errors.hpp"
#include "ssmc/protocol.hpp"

namespace ssmc {

namespace io {

using json = nlohmann::ordered_json;

inline const char* family_name(model_family f) { return f == model_family::morse ? "morse" : "hubbard"; }

inline model_family parse_family(const std::string& name) {
  if (name == "morse") return model_family::morse;
  if (name == "hubbard") return model_family::hubbard;
  throw invalid_argument("unknown model family '" + name + "'");
}

inline json to_json(const morse::MorseSpec& s) {
  return json{{"mass", s.mass},   {"depth", s.depth},   {"width", s.width}, {"r_eq", s.r_eq},
              {"m0", s.m0},       {"pade", s.pade},     {"n_r", s.n_r},     {"r_min", s.r_min},
              {"r_max", s.r_max}};
}

inline json to_json(const hubbard::HubbardSpec& s) {
  return json{{"sites", s.sites},     {"n_up", s.n_up},       {"n_down", s.n_down},
              {"hopping", s.hopping}, {"onsite", s.onsite},   {"lattice", s.lattice}};
}

inline morse::MorseSpec morse_spec_from(const json& j) {
  morse::MorseSpec s;
  s.mass = j.at("mass").get<double>();
  s.depth = j.at("depth").get<double>();
  s.width = j.at("width").get<double>();
  s.r_eq = j.at("r_eq").get<double>();
  s.m0 = j.at("m0").get<double>();
  s.pade = j.at("pade").get<std::array<double, 4>>();
  s.n_r = j.at("n_r").get<std::size_t>();
  s.r_min = j.at("r_min").get<double>();
  s.r_max = j.at("r_max").get<double>();
  s.validate();
  return s;
}

inline hubbard::HubbardSpec hubbard_spec_from(const json& j) {
  hubbard::HubbardSpec s;
  s.sites = j.at("sites").get<std::size_t>();
  s.n_up = j.at("n_up").get<std::size_t>();
  s.n_down = j.at("n_down").get<std::size_t>();
  s.hopping = j.at("hopping").get<double>();
  s.onsite = j.at("onsite").get<double>();
  s.lattice = j.at("lattice").get<double>();
  s.validate();
  return s;
}

inline json state_to_json(const cvec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json::array({v(i).real(), v(i).imag()}));
  return out;
}

inline cvec state_from_json(const json& j) {
  cvec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& p = j.at(i);
    if (!p.is_array() || p.size() != 2) throw invalid_argument("library: state entries must be [re, im] pairs");
    v(static_cast<Eigen::Index>(i)) = cplx(p.at(0).get<double>(), p.at(1).get<double>());
  }
  return v;
}

}  // namespace io

/// Library as a JSON document. Doubles are written in shortest round-trip form,
/// so load(save(lib)) is bit-exact and save(load(text)) == text.
inline std::string library_to_string(const ResponseLibrary& lib) {
  using io::json;
  validate_library(lib);
  json species = json::array();
  for (const auto& s : lib.species) std::visit([&](const auto& spec) { species.push_back(io::to_json(spec)); }, s);
  json segments = json::array();
  for (const auto& seg : lib.segments) segments.push_back({{"species", seg.species}, {"begin", seg.begin}, {"end", seg.end}});

  json header{
      {"format_version", ResponseLibrary::format_version},
      {"family", io::family_name(lib.family)},
      {"naive", lib.naive},
      {"field_kind", lib.pulse.kind() == field_kind::electric_field ? "electric_field" : "peierls_phase"},
      {"T", lib.segment_duration},
      {"t_start", lib.pulse.grid().t_start},
      {"dt", lib.dt()},
      {"n_t", lib.n_t},
      {"n_s", lib.n_species()},
      {"order", lib.order},
      {"labels", lib.labels},
      {"species", species},
      {"segments", segments},
      {"propagation_steps", lib.propagation_steps},
  };
  json doc{{"header", header}, {"pulse", lib.pulse.values()}, {"traces", lib.traces}};
  if (!lib.final_states.empty()) {
    json states = json::array();
    for (const auto& st : lib.final_states) states.push_back(io::state_to_json(st));
    doc["final_states"] = std::move(states);
  }
  return doc.dump(1) + "\n";
}

inline ResponseLibrary library_from_string(const std::string& text) {
  using io::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw io_error(std::string("library: malformed JSON: ") + e.what());
  }
  try {
    const json& h = doc.at("header");
    const int version = h.at("format_version").get<int>();
    if (version != ResponseLibrary::format_version) {
      throw invalid_argument("library: unsupported format_version " + std::to_string(version));
    }
    const model_family family = io::parse_family(h.at("family").get<std::string>());
    const std::string kind_name = h.at("field_kind").get<std::string>();
    if (kind_name != "electric_field" && kind_name != "peierls_phase") throw invalid_argument("library: bad field_kind");
    const field_kind kind = kind_name == "electric_field" ? field_kind::electric_field : field_kind::peierls_phase;

    std::vector<SpeciesSpec> species;
    for (const auto& s : h.at("species")) {
      if (family == model_family::morse) {
        species.emplace_back(io::morse_spec_from(s));
      } else {
        species.emplace_back(io::hubbard_spec_from(s));
      }
    }
    std::vector<Segment> segments;
    for (const auto& s : h.at("segments")) {
      segments.push_back({s.at("species").get<std::size_t>(), s.at("begin").get<std::size_t>(),
                          s.at("end").get<std::size_t>()});
    }
    auto pulse_values = doc.at("pulse").get<std::vector<double>>();
    const auto n = pulse_values.size();
    if (n == 0) throw invalid_argument("library: empty pulse");
    TimeGrid grid = make_time_grid(h.at("t_start").get<double>(), h.at("dt").get<double>(), n);

    std::vector<cvec> states;
    if (doc.contains("final_states")) {
      for (const auto& st : doc.at("final_states")) states.push_back(io::state_from_json(st));
    }
    ResponseLibrary lib{
        .family = family,
        .naive = h.at("naive").get<bool>(),
        .pulse = SampledField(grid, std::move(pulse_values), kind),
        .n_t = h.at("n_t").get<std::size_t>(),
        .segment_duration = h.at("T").get<double>(),
        .labels = h.at("labels").get<std::vector<std::string>>(),
        .species = std::move(species),
        .traces = doc.at("traces").get<std::vector<std::vector<double>>>(),
        .segments = std::move(segments),
        .order = h.at("order").get<std::vector<std::size_t>>(),
        .final_states = std::move(states),
        .propagation_steps = h.at("propagation_steps").get<std::uint64_t>(),
    };
    if (h.at("n_s").get<std::size_t>() != lib.n_species()) throw invalid_argument("library: n_s disagrees with species");
    if (!lib.final_states.empty() && lib.final_states.size() != lib.n_species()) {
      throw invalid_argument("library: final_states must cover every species");
    }
    validate_library(lib);
    return lib;
  } catch (const json::exception& e) {
    throw invalid_argument(std::string("library: ") + e.what());
  }
}

inline void save_library(const ResponseLibrary& lib, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << library_to_string(lib);
  if (!out) throw io_error("write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ResponseLibrary load_library(const std::string& path) { return library_from_string(read_text_file(path)); }

}  // namespace ssmc
