#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "ssmc/errors.hpp"

namespace ssmc {

enum class unit {
  // length
  angstrom,
  bohr,
  // energy
  hartree,
  wavenumber,  // cm^-1
  electronvolt,
  hopping,  // model energy unit t0
  // dipole moment
  debye,
  au_dipole,
  // angular frequency (energy / hbar)
  terahertz,  // ordinary frequency f; converted as omega = 2 pi f
  au_angular_frequency,
  model_angular_frequency,  // t0 / hbar
  // electric field
  megavolt_per_cm,
  au_field,
  model_field,  // t0 / (e * angstrom)
};

enum class dimension { length, energy, dipole, angular_frequency, field };

/// CODATA 2018 conversion constants plus the Hubbard energy scale t0.
/// Canonical unit per dimension is the Hartree atomic unit.
struct UnitSystem {
  double bohr_per_angstrom = 1.8897261246257702;
  double hartree_per_wavenumber = 4.556335252912e-6;
  double hartree_per_electronvolt = 1.0 / 27.211386245988;
  double au_dipole_per_debye = 0.393430307;
  double au_time_seconds = 2.4188843265857e-17;
  double au_field_volt_per_meter = 5.14220674763e11;
  double hopping_electronvolt = 0.52;

  /// Throws if any constant is non-positive.
  void validate() const {
    for (double c : {bohr_per_angstrom, hartree_per_wavenumber, hartree_per_electronvolt,
                     au_dipole_per_debye, au_time_seconds, au_field_volt_per_meter,
                     hopping_electronvolt}) {
      if (!(c > 0.0) || !std::isfinite(c)) {
        throw invalid_argument("UnitSystem: conversion constants must be positive and finite");
      }
    }
  }

  double hopping_hartree() const { return hopping_electronvolt * hartree_per_electronvolt; }
};

inline dimension dimension_of(unit u) {
  switch (u) {
    case unit::angstrom:
    case unit::bohr:
      return dimension::length;
    case unit::hartree:
    case unit::wavenumber:
    case unit::electronvolt:
    case unit::hopping:
      return dimension::energy;
    case unit::debye:
    case unit::au_dipole:
      return dimension::dipole;
    case unit::terahertz:
    case unit::au_angular_frequency:
    case unit::model_angular_frequency:
      return dimension::angular_frequency;
    case unit::megavolt_per_cm:
    case unit::au_field:
    case unit::model_field:
      return dimension::field;
  }
  throw invalid_argument("unknown unit");
}

namespace detail {

// Size of one `u` expressed in the atomic unit of its dimension.
inline double atomic_scale(unit u, const UnitSystem& s) {
  switch (u) {
    case unit::angstrom:
      return s.bohr_per_angstrom;
    case unit::bohr:
    case unit::hartree:
    case unit::au_dipole:
    case unit::au_angular_frequency:
    case unit::au_field:
      return 1.0;
    case unit::wavenumber:
      return s.hartree_per_wavenumber;
    case unit::electronvolt:
      return s.hartree_per_electronvolt;
    case unit::hopping:
    case unit::model_angular_frequency:
      return s.hopping_hartree();
    case unit::debye:
      return s.au_dipole_per_debye;
    case unit::terahertz:
      return 2.0 * std::numbers::pi * 1.0e12 * s.au_time_seconds;
    case unit::megavolt_per_cm:
      return 1.0e8 / s.au_field_volt_per_meter;
    case unit::model_field:
      return s.hopping_hartree() / s.bohr_per_angstrom;
  }
  throw invalid_argument("unknown unit");
}

}  // namespace detail

/// Energy and angular frequency interconvert through hbar = 1.
inline bool convertible(unit from, unit to) {
  auto collapse = [](dimension d) { return d == dimension::angular_frequency ? dimension::energy : d; };
  return collapse(dimension_of(from)) == collapse(dimension_of(to));
}

/// Scales `value` from one unit to another of a compatible dimension.
inline double convert(double value, unit from, unit to, const UnitSystem& units = {}) {
  if (!convertible(from, to)) {
    throw invalid_argument("convert: units have different dimensions");
  }
  return value * detail::atomic_scale(from, units) / detail::atomic_scale(to, units);
}

inline unit parse_unit(std::string_view name) {
  struct entry {
    std::string_view name;
    unit value;
  };
  static constexpr entry table[] = {
      {"angstrom", unit::angstrom},
      {"bohr", unit::bohr},
      {"hartree", unit::hartree},
      {"cm-1", unit::wavenumber},
      {"eV", unit::electronvolt},
      {"t0", unit::hopping},
      {"debye", unit::debye},
      {"au_dipole", unit::au_dipole},
      {"THz", unit::terahertz},
      {"au_angular_frequency", unit::au_angular_frequency},
      {"model_angular_frequency", unit::model_angular_frequency},
      {"MV/cm", unit::megavolt_per_cm},
      {"au_field", unit::au_field},
      {"model_field", unit::model_field},
  };
  for (const auto& e : table) {
    if (e.name == name) return e.value;
  }
  throw invalid_argument("unknown unit '" + std::string(name) + "'");
}

}  // namespace ssmc
