#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ssmc {

/// Precondition violations on user-supplied arguments.
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solver failures: eigen-solver or Krylov non-convergence, rank deficiency.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, unwritable or malformed files.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tracking could not produce a field: singular denominator, |X| > 1, or a
/// degenerate neighbour expectation.
class tracking_error : public std::runtime_error {
 public:
  enum class kind { singular, untrackable, degenerate };

  tracking_error(kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}

  tracking_error(const tracking_error& inner, std::size_t step, const std::string& species)
      : std::runtime_error("species '" + species + "' at step " + std::to_string(step) + ": " +
                           inner.what()),
        kind_(inner.kind_),
        step_(step),
        species_(species) {}

  kind error_kind() const noexcept { return kind_; }
  std::size_t step() const noexcept { return step_; }
  const std::string& species() const noexcept { return species_; }

 private:
  kind kind_;
  std::size_t step_ = 0;
  std::string species_;
};

}  // namespace ssmc
