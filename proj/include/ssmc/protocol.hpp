#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ssmc/errors.hpp"
#include "ssmc/hubbard.hpp"
#include "ssmc/krylov.hpp"
#include "ssmc/morse.hpp"
#include "ssmc/pulsegrid.hpp"

namespace ssmc {

enum class model_family { morse, hubbard };

using SpeciesSpec = std::variant<morse::MorseSpec, hubbard::HubbardSpec>;

/// What the protocol needs from one species: a ground state, a frozen-field step,
/// the instantaneous response and the response-zeroing field.
template <class M>
concept SpeciesModel = requires(const M& m, const cvec& psi, double f) {
  { m.label() } -> std::convertible_to<std::string>;
  { m.initial_state() } -> std::convertible_to<cvec>;
  { m.advance(psi, f, f) } -> std::convertible_to<cvec>;
  { m.response(psi, f) } -> std::convertible_to<double>;
  { m.tracking_field(psi, f) } -> std::convertible_to<double>;
  { m.spec() };
};

template <class M>
constexpr model_family family_of() {
  if constexpr (std::derived_from<M, morse::MorseModel>) {
    return model_family::morse;
  } else {
    static_assert(std::derived_from<M, hubbard::HubbardModel>, "unknown species model");
    return model_family::hubbard;
  }
}

/// Samples of one species' response; sample k is taken at grid.time(k) with the
/// field value that is then held over [t_k, t_k + dt).
struct ResponseTrace {
  TimeGrid grid;
  std::vector<double> values;
};

/// Segment i of an SSMC pulse (i >= 1) covers samples [begin, end) and holds the
/// response of `species` at zero.
struct Segment {
  std::size_t species = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct ResponseLibrary {
  static constexpr int format_version = 1;

  model_family family = model_family::morse;
  bool naive = false;
  SampledField pulse;
  std::size_t n_t = 0;  // samples per segment
  double segment_duration = 0.0;
  std::vector<std::string> labels;
  std::vector<SpeciesSpec> species;
  std::vector<std::vector<double>> traces;  // one per species, full pulse length
  std::vector<Segment> segments;            // empty for naive libraries
  std::vector<std::size_t> order;           // species suppressed in segment 1, 2, ...
  std::vector<cvec> final_states;           // empty when not saved
  std::uint64_t propagation_steps = 0;      // species-steps spent building this library

  std::size_t n_species() const { return species.size(); }
  double dt() const { return pulse.grid().dt; }

  ResponseTrace trace(std::size_t s) const { return ResponseTrace{pulse.grid(), traces.at(s)}; }
};

namespace detail {

inline void require_permutation(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) throw invalid_argument("suppression order must list every species once");
  std::vector<bool> seen(n, false);
  for (std::size_t s : order) {
    if (s >= n || seen[s]) throw invalid_argument("suppression order is not a permutation");
    seen[s] = true;
  }
}

template <SpeciesModel M>
std::vector<SpeciesSpec> specs_of(std::span<const M> species) {
  std::vector<SpeciesSpec> out;
  for (const auto& m : species) out.emplace_back(m.spec());
  return out;
}

template <SpeciesModel M>
std::vector<std::string> labels_of(std::span<const M> species) {
  std::vector<std::string> out;
  for (const auto& m : species) out.push_back(m.label());
  return out;
}

template <SpeciesModel M>
double tracked_field(const M& model, const cvec& psi, double previous, std::size_t step) {
  try {
    return model.tracking_field(psi, previous);
  } catch (const tracking_error& e) {
    throw tracking_error(e, step, model.label());
  }
}

}  // namespace detail

/// Ascending order of species index; the caller lists species by ascending
/// mass or onsite energy.
inline std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> o(n);
  std::iota(o.begin(), o.end(), std::size_t{0});
  return o;
}

/// Pump, then one tracking segment per species in `order`. Every species steps
/// under the same field; the tracked species' field is computed from its state
/// before anyone steps.
template <SpeciesModel M>
ResponseLibrary run_ssmc(std::span<const M> species, const SampledField& pump, std::span<const std::size_t> order) {
  const std::size_t n_s = species.size();
  if (n_s < 2) throw invalid_argument("run_ssmc: need at least two species");
  detail::require_permutation(order, n_s);
  const std::size_t n_t = pump.size();
  const double dt = pump.grid().dt;
  const std::size_t total = (n_s + 1) * n_t;

  std::vector<cvec> states;
  states.reserve(n_s);
  for (const auto& m : species) states.push_back(m.initial_state());
  std::vector<std::vector<double>> traces(n_s, std::vector<double>(total));
  std::vector<double> pulse(total);
  std::uint64_t steps = 0;
  double field = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t seg = k / n_t;
    if (seg == 0) {
      field = pump[k];
    } else {
      const std::size_t tracked = order[seg - 1];
      field = detail::tracked_field(species[tracked], states[tracked], field, k);
    }
    pulse[k] = field;
    for (std::size_t s = 0; s < n_s; ++s) {
      traces[s][k] = species[s].response(states[s], field);
      states[s] = species[s].advance(states[s], field, dt);
      ++steps;
    }
  }

  std::vector<Segment> segments;
  for (std::size_t i = 1; i <= n_s; ++i) segments.push_back({order[i - 1], i * n_t, (i + 1) * n_t});
  return ResponseLibrary{
      .family = family_of<M>(),
      .naive = false,
      .pulse = SampledField(TimeGrid{pump.grid().t_start, dt, total}, std::move(pulse), pump.kind()),
      .n_t = n_t,
      .segment_duration = pump.grid().duration(),
      .labels = detail::labels_of(species),
      .species = detail::specs_of(species),
      .traces = std::move(traces),
      .segments = std::move(segments),
      .order = std::vector<std::size_t>(order.begin(), order.end()),
      .final_states = std::move(states),
      .propagation_steps = steps,
  };
}

template <SpeciesModel M>
ResponseLibrary run_ssmc(std::span<const M> species, const SampledField& pump) {
  const auto order = identity_order(species.size());
  return run_ssmc(species, pump, std::span<const std::size_t>(order));
}

/// Appends one species: it is evolved under the stored pulse, then tracked for a
/// new segment while the stored final states of the others evolve alongside it.
template <SpeciesModel M>
ResponseLibrary extend_library(const ResponseLibrary& lib, std::span<const M> existing, const M& added) {
  if (lib.naive) throw invalid_argument("extend_library: naive libraries cannot be extended");
  if (lib.family != family_of<M>()) throw invalid_argument("extend_library: model family mismatch");
  const std::size_t n_old = lib.n_species();
  if (existing.size() != n_old) throw invalid_argument("extend_library: species list does not match library");
  if (lib.final_states.size() != n_old) {
    throw invalid_argument("extend_library: library has no saved final states");
  }
  const double dt = lib.dt();
  const std::size_t n_t = lib.n_t;
  const std::size_t old_len = lib.pulse.size();

  ResponseLibrary out = lib;
  std::uint64_t steps = 0;
  cvec fresh = added.initial_state();
  std::vector<double> fresh_trace(old_len + n_t);
  for (std::size_t k = 0; k < old_len; ++k) {
    fresh_trace[k] = added.response(fresh, lib.pulse[k]);
    fresh = added.advance(fresh, lib.pulse[k], dt);
    ++steps;
  }

  std::vector<cvec> states = lib.final_states;
  states.push_back(std::move(fresh));
  for (auto& t : out.traces) t.resize(old_len + n_t);
  out.traces.push_back(std::move(fresh_trace));

  auto at = [&](std::size_t s) -> const M& { return s < n_old ? existing[s] : added; };
  std::vector<double> pulse(lib.pulse.values().begin(), lib.pulse.values().end());
  pulse.resize(old_len + n_t);
  double field = lib.pulse[old_len - 1];
  for (std::size_t j = 0; j < n_t; ++j) {
    const std::size_t k = old_len + j;
    field = detail::tracked_field(added, states[n_old], field, k);
    pulse[k] = field;
    for (std::size_t s = 0; s <= n_old; ++s) {
      out.traces[s][k] = at(s).response(states[s], field);
      states[s] = at(s).advance(states[s], field, dt);
      ++steps;
    }
  }

  out.pulse = SampledField(TimeGrid{lib.pulse.grid().t_start, dt, old_len + n_t}, std::move(pulse), lib.pulse.kind());
  out.labels.push_back(added.label());
  out.species.emplace_back(added.spec());
  out.segments.push_back({n_old, old_len, old_len + n_t});
  out.order.push_back(n_old);
  out.final_states = std::move(states);
  out.propagation_steps = steps;
  return out;
}

/// Every species driven by one transform-limited field; the whole trace is data.
template <SpeciesModel M>
ResponseLibrary run_naive(std::span<const M> species, const SampledField& field, std::size_t n_t) {
  const std::size_t n_s = species.size();
  if (n_s < 2) throw invalid_argument("run_naive: need at least two species");
  if (n_t == 0 || field.size() != n_s * n_t) throw invalid_argument("run_naive: field must span n_s segments");
  const double dt = field.grid().dt;
  std::vector<cvec> states;
  for (const auto& m : species) states.push_back(m.initial_state());
  std::vector<std::vector<double>> traces(n_s, std::vector<double>(field.size()));
  std::uint64_t steps = 0;
  for (std::size_t k = 0; k < field.size(); ++k) {
    for (std::size_t s = 0; s < n_s; ++s) {
      traces[s][k] = species[s].response(states[s], field[k]);
      states[s] = species[s].advance(states[s], field[k], dt);
      ++steps;
    }
  }
  return ResponseLibrary{
      .family = family_of<M>(),
      .naive = true,
      .pulse = field,
      .n_t = n_t,
      .segment_duration = static_cast<double>(n_t) * dt,
      .labels = detail::labels_of(species),
      .species = detail::specs_of(species),
      .traces = std::move(traces),
      .segments = {},
      .order = {},
      .final_states = std::move(states),
      .propagation_steps = steps,
  };
}

inline void validate_library(const ResponseLibrary& lib) {
  const std::size_t n_s = lib.n_species();
  if (n_s < 1 || lib.labels.size() != n_s || lib.traces.size() != n_s) {
    throw invalid_argument("library: species, labels and traces disagree");
  }
  for (const auto& t : lib.traces) {
    if (t.size() != lib.pulse.size()) throw invalid_argument("library: incomplete response trace");
    for (double v : t) {
      if (!std::isfinite(v)) throw invalid_argument("library: non-finite response sample");
    }
  }
  if (lib.naive) {
    if (lib.pulse.size() != n_s * lib.n_t) throw invalid_argument("library: naive pulse length is not n_s * n_t");
    return;
  }
  if (lib.pulse.size() != (n_s + 1) * lib.n_t) throw invalid_argument("library: pulse length is not (n_s + 1) * n_t");
  detail::require_permutation(lib.order, n_s);
  if (lib.segments.size() != n_s) throw invalid_argument("library: segment map incomplete");
  for (std::size_t i = 0; i < n_s; ++i) {
    const auto& seg = lib.segments[i];
    if (seg.species != lib.order[i] || seg.begin != (i + 1) * lib.n_t || seg.end != (i + 2) * lib.n_t) {
      throw invalid_argument("library: segment map inconsistent with suppression order");
    }
  }
}

/// The (n_s n_t x n_s) response matrix. Columns follow library species order;
/// SSMC rows run over segments 1..n_s with the pump window dropped. Suppressed
/// blocks keep their computed values unless `hard_zero_blocks` is set.
inline Eigen::MatrixXd assemble_matrix(const ResponseLibrary& lib, bool hard_zero_blocks = false) {
  validate_library(lib);
  const std::size_t n_s = lib.n_species();
  const std::size_t n_t = lib.n_t;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n_s * n_t), static_cast<Eigen::Index>(n_s));
  const std::size_t offset = lib.naive ? 0 : n_t;
  for (std::size_t s = 0; s < n_s; ++s) {
    for (std::size_t row = 0; row < n_s * n_t; ++row) {
      a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(s)) = lib.traces[s][offset + row];
    }
  }
  if (hard_zero_blocks && !lib.naive) {
    for (std::size_t i = 0; i < n_s; ++i) {
      a.block(static_cast<Eigen::Index>(i * n_t), static_cast<Eigen::Index>(lib.segments[i].species),
              static_cast<Eigen::Index>(n_t), 1)
          .setZero();
    }
  }
  return a;
}

/// max |R| of species s over [begin, end).
inline double max_abs_response(const ResponseLibrary& lib, std::size_t s, std::size_t begin, std::size_t end) {
  double m = 0.0;
  for (std::size_t k = begin; k < end; ++k) m = std::max(m, std::abs(lib.traces.at(s).at(k)));
  return m;
}

/// Worst ratio, over species, of the response in its own segment to its response
/// during the pump window.
inline double suppression_ratio(const ResponseLibrary& lib) {
  if (lib.naive) throw invalid_argument("suppression_ratio: naive library has no segments");
  double worst = 0.0;
  for (const auto& seg : lib.segments) {
    const double pump = max_abs_response(lib, seg.species, 0, lib.n_t);
    const double own = max_abs_response(lib, seg.species, seg.begin, seg.end);
    worst = std::max(worst, pump > 0.0 ? own / pump : (own > 0.0 ? INFINITY : 0.0));
  }
  return worst;
}

}  // namespace ssmc
