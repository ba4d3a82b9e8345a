#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "ssmc/errors.hpp"
#include "ssmc/units.hpp"

namespace ssmc {

/// Uniform time grid; sample k sits at t_start + k * dt.
struct TimeGrid {
  double t_start = 0.0;
  double dt = 1.0;
  std::size_t n_steps = 1;

  double time(std::size_t k) const { return t_start + static_cast<double>(k) * dt; }
  double t_end() const { return time(n_steps); }
  double duration() const { return static_cast<double>(n_steps) * dt; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

inline TimeGrid make_time_grid(double t_start, double dt, std::size_t n_steps) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw invalid_argument("time grid: dt must be positive");
  if (n_steps == 0) throw invalid_argument("time grid: n_steps must be at least 1");
  if (!std::isfinite(t_start)) throw invalid_argument("time grid: t_start must be finite");
  return TimeGrid{t_start, dt, n_steps};
}

enum class field_kind { electric_field, peierls_phase };

/// A control signal sampled on a TimeGrid. Value k is held over [t_k, t_k + dt).
class SampledField {
 public:
  SampledField(TimeGrid grid, std::vector<double> values, field_kind kind)
      : grid_(grid), values_(std::move(values)), kind_(kind) {
    if (values_.size() != grid_.n_steps) {
      throw invalid_argument("sampled field: value count does not match grid");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw invalid_argument("sampled field: non-finite sample");
    }
  }

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  field_kind kind() const { return kind_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }

  friend bool operator==(const SampledField&, const SampledField&) = default;

 private:
  TimeGrid grid_;
  std::vector<double> values_;
  field_kind kind_;
};

namespace detail {

inline double sin2_envelope(double t, double period) {
  const double s = std::sin(std::numbers::pi * t / period);
  return s * s;
}

inline void require_within(const TimeGrid& grid, double duration) {
  const double slack = 1e-9 * grid.dt;
  if (grid.t_start < -slack || grid.t_end() > duration + slack) {
    throw invalid_argument("pump pulse: grid extends beyond [0, T)");
  }
}

}  // namespace detail

/// E0 sin^2(pi t / envelope_period) cos(omega t) on `grid`, atomic units. The
/// envelope repeats with period `envelope_period` if the grid is longer.
inline SampledField sin2_carrier_field(double amplitude, double envelope_period, double omega,
                                       const TimeGrid& grid) {
  if (!(envelope_period > 0.0)) throw invalid_argument("pulse: envelope period must be positive");
  std::vector<double> v(grid.n_steps);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const double t = grid.time(k);
    v[k] = amplitude * detail::sin2_envelope(t, envelope_period) * std::cos(omega * t);
  }
  return SampledField(grid, std::move(v), field_kind::electric_field);
}

/// Molecular pump E_p(t) = E0 sin^2(pi t / T) cos(w_e t). All arguments in atomic units.
inline SampledField pump_pulse_molecular(double e0, double duration, double omega_e,
                                         const TimeGrid& grid) {
  detail::require_within(grid, duration);
  return sin2_carrier_field(e0, duration, omega_e, grid);
}

/// Peierls phase a (E0 / w0) sin^2(pi t / period) sin(w0 t) in the Hubbard model units
/// (energy t0, hbar = e = 1, length in angstrom).
inline SampledField sin2_peierls_phase(double e0_mv_per_cm, double omega0_thz, double lattice_angstrom,
                                       double envelope_period, const TimeGrid& grid,
                                       const UnitSystem& units = {}) {
  if (!(omega0_thz > 0.0)) throw invalid_argument("pump phase: omega0 must be positive");
  if (!(envelope_period > 0.0)) throw invalid_argument("pump phase: envelope period must be positive");
  const double field = convert(e0_mv_per_cm, unit::megavolt_per_cm, unit::model_field, units);
  const double omega = convert(omega0_thz, unit::terahertz, unit::model_angular_frequency, units);
  const double amplitude = lattice_angstrom * field / omega;
  std::vector<double> v(grid.n_steps);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const double t = grid.time(k);
    v[k] = amplitude * detail::sin2_envelope(t, envelope_period) * std::sin(omega * t);
  }
  return SampledField(grid, std::move(v), field_kind::peierls_phase);
}

inline SampledField pump_phase_hubbard(double e0_mv_per_cm, double omega0_thz, double lattice_angstrom,
                                       double duration, const TimeGrid& grid,
                                       const UnitSystem& units = {}) {
  if (!(omega0_thz > 0.0)) throw invalid_argument("pump phase: omega0 must be positive");
  detail::require_within(grid, duration);
  return sin2_peierls_phase(e0_mv_per_cm, omega0_thz, lattice_angstrom, duration, grid, units);
}

/// Two carrier periods of omega0, in model time units hbar / t0.
inline double hubbard_pump_duration(double omega0_thz, const UnitSystem& units = {}) {
  if (!(omega0_thz > 0.0) || !std::isfinite(omega0_thz)) throw invalid_argument("hubbard pump: omega0 must be positive");
  const double omega = convert(omega0_thz, unit::terahertz, unit::model_angular_frequency, units);
  return 2.0 * (2.0 * std::numbers::pi / omega);
}

/// Joins contiguous segments with equal dt and kind. Samples are copied verbatim.
inline SampledField concat_pulses(std::span<const SampledField> segments) {
  if (segments.empty()) throw invalid_argument("concat_pulses: no segments");
  const auto& first = segments.front();
  std::vector<double> values;
  std::size_t total = 0;
  for (const auto& s : segments) total += s.size();
  values.reserve(total);
  for (std::size_t j = 0; j < segments.size(); ++j) {
    const auto& s = segments[j];
    if (s.grid().dt != first.grid().dt) throw invalid_argument("concat_pulses: mismatched dt");
    if (s.kind() != first.kind()) throw invalid_argument("concat_pulses: mismatched field kind");
    if (j > 0) {
      const double expected = segments[j - 1].grid().t_end();
      if (std::abs(s.grid().t_start - expected) > 1e-9 * first.grid().dt) {
        throw invalid_argument("concat_pulses: segments are not contiguous");
      }
    }
    values.insert(values.end(), s.values().begin(), s.values().end());
  }
  return SampledField(TimeGrid{first.grid().t_start, first.grid().dt, total}, std::move(values),
                      first.kind());
}

}  // namespace ssmc
