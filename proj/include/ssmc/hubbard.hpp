#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ssmc/errors.hpp"
#include "ssmc/krylov.hpp"

namespace ssmc::hubbard {

/// One Fermi-Hubbard ring. Energies in units of t0 (so t0 is normally 1),
/// lattice constant in angstrom, hbar = e = 1.
struct HubbardSpec {
  std::size_t sites = 6;
  std::size_t n_up = 3;
  std::size_t n_down = 3;
  double hopping = 1.0;  // t0
  double onsite = 1.0;   // U
  double lattice = 4.0;  // a

  void validate() const {
    if (sites < 2 || sites > 24) throw invalid_argument("HubbardSpec: sites must be in [2, 24]");
    if (n_up < 1 || n_up > sites || n_down < 1 || n_down > sites) {
      throw invalid_argument("HubbardSpec: particle counts must be in [1, L]");
    }
    if (!(hopping > 0.0) || !(lattice > 0.0) || !std::isfinite(onsite)) {
      throw invalid_argument("HubbardSpec: hopping and lattice constant must be positive");
    }
  }

  friend bool operator==(const HubbardSpec&, const HubbardSpec&) = default;
};

/// A single-spin hop c^dag_{j} c_{j+1} taking basis state `source` to `target`.
struct Hop {
  std::uint32_t target;
  std::uint32_t source;
  double sign;
};

/// Fixed-(N_up, N_down) occupation basis, ordered lexicographically by
/// (up pattern, down pattern) with patterns in increasing integer order.
class FockBasis {
 public:
  FockBasis(std::size_t sites, std::size_t n_up, std::size_t n_down) : sites_(sites) {
    if (sites < 2 || sites > 24) throw invalid_argument("FockBasis: sites must be in [2, 24]");
    if (n_up < 1 || n_up > sites || n_down < 1 || n_down > sites) {
      throw invalid_argument("FockBasis: particle counts must be in [1, L]");
    }
    up_ = patterns(sites, n_up);
    down_ = patterns(sites, n_down);
    up_rank_ = ranks(sites, up_);
    down_rank_ = ranks(sites, down_);
    build_hops();
  }

  std::size_t sites() const { return sites_; }
  std::size_t dimension() const { return up_.size() * down_.size(); }
  std::uint32_t up_pattern(std::size_t index) const { return up_[index / down_.size()]; }
  std::uint32_t down_pattern(std::size_t index) const { return down_[index % down_.size()]; }
  std::size_t index_of(std::uint32_t up, std::uint32_t down) const {
    return static_cast<std::size_t>(up_rank_[up]) * down_.size() + static_cast<std::size_t>(down_rank_[down]);
  }
  int double_occupancy(std::size_t index) const { return std::popcount(up_pattern(index) & down_pattern(index)); }

  /// Every hop c^dag_{j sigma} c_{j+1 sigma} over all bonds of the ring and both spins.
  const std::vector<Hop>& hops() const { return hops_; }

 private:
  static std::vector<std::uint32_t> patterns(std::size_t sites, std::size_t count) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t p = 0; p < (1u << sites); ++p) {
      if (static_cast<std::size_t>(std::popcount(p)) == count) out.push_back(p);
    }
    return out;
  }

  static std::vector<std::int32_t> ranks(std::size_t sites, const std::vector<std::uint32_t>& pats) {
    std::vector<std::int32_t> out(std::size_t{1} << sites, -1);
    for (std::size_t i = 0; i < pats.size(); ++i) out[pats[i]] = static_cast<std::int32_t>(i);
    return out;
  }

  // c^dag_i c_j on a single-spin pattern; sign from the occupied orbitals strictly between i and j.
  static bool hop(std::uint32_t pattern, std::size_t i, std::size_t j, std::uint32_t& result, double& sign) {
    const std::uint32_t bi = 1u << i;
    const std::uint32_t bj = 1u << j;
    if (!(pattern & bj) || (pattern & bi)) return false;
    const std::size_t lo = i < j ? i : j;
    const std::size_t hi = i < j ? j : i;
    const std::uint32_t between = ((1u << hi) - 1u) & ~((1u << (lo + 1)) - 1u);
    sign = (std::popcount(pattern & between) % 2 == 0) ? 1.0 : -1.0;
    result = (pattern & ~bj) | bi;
    return true;
  }

  void build_hops() {
    const std::size_t nd = down_.size();
    for (std::size_t u = 0; u < up_.size(); ++u) {
      for (std::size_t d = 0; d < nd; ++d) {
        const auto source = static_cast<std::uint32_t>(u * nd + d);
        for (std::size_t j = 0; j < sites_; ++j) {
          const std::size_t next = (j + 1) % sites_;
          std::uint32_t moved = 0;
          double sign = 1.0;
          // Up electrons are ordered before down electrons; a same-spin hop only
          // sees the parity of its own spin string.
          if (hop(up_[u], j, next, moved, sign)) {
            hops_.push_back({static_cast<std::uint32_t>(index_of(moved, down_[d])), source, sign});
          }
          if (hop(down_[d], j, next, moved, sign)) {
            hops_.push_back({static_cast<std::uint32_t>(index_of(up_[u], moved)), source, sign});
          }
        }
      }
    }
  }

  std::size_t sites_;
  std::vector<std::uint32_t> up_, down_;
  std::vector<std::int32_t> up_rank_, down_rank_;
  std::vector<Hop> hops_;
};

inline FockBasis build_basis(std::size_t sites, std::size_t n_up, std::size_t n_down) {
  return FockBasis(sites, n_up, n_down);
}

inline void require_dimension(const FockBasis& basis, const cvec& psi) {
  if (static_cast<std::size_t>(psi.size()) != basis.dimension()) {
    throw invalid_argument("Hubbard: state dimension " + std::to_string(psi.size()) + " does not match basis dimension " +
                           std::to_string(basis.dimension()));
  }
}

/// out = [sum_{j sigma} (w c^dag_j c_{j+1} + conj(w) c^dag_{j+1} c_j) + U sum_j n_up n_down] psi.
inline void apply_hopping_hamiltonian(const FockBasis& basis, cplx amplitude, double onsite, const cvec& psi, cvec& out,
                                      double shift = 0.0) {
  require_dimension(basis, psi);
  const auto n = static_cast<Eigen::Index>(basis.dimension());
  out.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = (onsite * basis.double_occupancy(static_cast<std::size_t>(i)) - shift) * psi(i);
  }
  const cplx back = std::conj(amplitude);
  for (const Hop& h : basis.hops()) {
    out(h.target) += amplitude * h.sign * psi(h.source);
    out(h.source) += back * h.sign * psi(h.target);
  }
}

/// Peierls-substituted Hamiltonian: hopping amplitude -t0 exp(-i phi).
inline void apply_hamiltonian(const HubbardSpec& spec, const FockBasis& basis, double phi, const cvec& psi, cvec& out) {
  apply_hopping_hamiltonian(basis, -spec.hopping * std::exp(cplx(0.0, -phi)), spec.onsite, psi, out);
}

inline cvec apply_hamiltonian(const HubbardSpec& spec, const FockBasis& basis, double phi, const cvec& psi) {
  cvec out;
  apply_hamiltonian(spec, basis, phi, psi, out);
  return out;
}

inline double energy_expectation(const HubbardSpec& spec, const FockBasis& basis, double phi, const cvec& psi) {
  return psi.dot(apply_hamiltonian(spec, basis, phi, psi)).real();
}

/// <sum_{j sigma} c^dag_{j sigma} c_{j+1 sigma}> as K e^{i theta}.
struct NeighborExpectation {
  double magnitude = 0.0;  // K
  double phase = 0.0;      // theta in (-pi, pi]
  cplx value;
};

inline constexpr double neighbor_floor = 1e-12;

inline NeighborExpectation neighbor_expectation(const FockBasis& basis, const cvec& psi) {
  require_dimension(basis, psi);
  cplx acc = 0.0;
  for (const Hop& h : basis.hops()) acc += std::conj(psi(h.target)) * h.sign * psi(h.source);
  NeighborExpectation out;
  out.value = acc;
  out.magnitude = std::abs(acc);
  out.phase = std::arg(acc);
  if (out.phase <= -std::numbers::pi) out.phase = std::numbers::pi;
  return out;
}

/// Current expectation -i a t0 <sum (e^{-i phi} c^dag_j c_{j+1} - h.c.)> from the operator form.
inline double current_response(const HubbardSpec& spec, const FockBasis& basis, const cvec& psi, double phi) {
  const cplx z = std::exp(cplx(0.0, -phi)) * neighbor_expectation(basis, psi).value;
  // -i a t0 (z - conj z) = 2 a t0 Im z
  return 2.0 * spec.lattice * spec.hopping * z.imag();
}

/// Same response from the polar form -2 a t0 K sin(phi - theta).
inline double current_response_polar(const HubbardSpec& spec, const NeighborExpectation& n, double phi) {
  return -2.0 * spec.lattice * spec.hopping * n.magnitude * std::sin(phi - n.phase);
}

inline double tracking_ratio(const NeighborExpectation& n, double target, double lattice, double hopping) {
  if (!(n.magnitude > neighbor_floor)) {
    throw tracking_error(tracking_error::kind::degenerate,
                         "neighbour expectation magnitude " + std::to_string(n.magnitude) + " is below the floor");
  }
  const double x = target / (2.0 * lattice * hopping * n.magnitude);
  if (!(std::abs(x) <= 1.0)) {
    throw tracking_error(tracking_error::kind::untrackable,
                         "target response needs |X| = " + std::to_string(std::abs(x)) + " > 1");
  }
  return x;
}

/// Phase producing response `target`: arcsin(-X) + theta (principal branch).
inline double tracking_phase(const NeighborExpectation& n, double target, double lattice, double hopping) {
  const double x = tracking_ratio(n, target, lattice, hopping);
  return std::asin(-x) + n.phase;
}

struct GroundState {
  double energy = 0.0;
  cvec state;
};

/// Lowest state at phi = 0 by Lanczos from a fixed real start vector.
inline GroundState ground_state(const HubbardSpec& spec, const FockBasis& basis, const LanczosOptions& opt = {}) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(basis.dimension());
  cvec start(n);
  // deterministic, real, dense start vector
  std::uint64_t x = 0x9E3779B97F4A7C15ull;
  for (Eigen::Index i = 0; i < n; ++i) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    start(i) = 0.5 + static_cast<double>(x >> 11) * 0x1.0p-53;
  }
  auto apply = [&](const cvec& in, cvec& out) { apply_hamiltonian(spec, basis, 0.0, in, out); };
  auto pair = lanczos_ground_state(apply, start, opt);
  // Fix the arbitrary global phase: largest component real positive.
  Eigen::Index imax = 0;
  pair.vector.cwiseAbs().maxCoeff(&imax);
  pair.vector *= std::conj(pair.vector(imax)) / std::abs(pair.vector(imax));
  return GroundState{pair.value, pair.vector};
}

inline cvec propagate_driven_step(const HubbardSpec& spec, const FockBasis& basis, const cvec& psi, double phi, double dt,
                                  const KrylovOptions& opt = {}) {
  require_dimension(basis, psi);
  auto apply = [&](const cvec& in, cvec& out) { apply_hamiltonian(spec, basis, phi, in, out); };
  return krylov_expm(apply, psi, dt, opt);
}

struct TrackingStep {
  cvec state;
  double phi = 0.0;  // emitted phase arcsin(-X) + theta
  cplx amplitude;    // P e^{-i theta}
};

/// One step under the tracking Hamiltonian: hopping amplitude P e^{-i theta} with
/// P = -t0 (sqrt(1 - X^2) + i X), frozen at the step's initial state.
inline TrackingStep propagate_tracking_step(const HubbardSpec& spec, const FockBasis& basis, const cvec& psi,
                                            double target, double dt, const KrylovOptions& opt = {}) {
  require_dimension(basis, psi);
  const auto n = neighbor_expectation(basis, psi);
  const double x = tracking_ratio(n, target, spec.lattice, spec.hopping);
  const cplx p = -spec.hopping * cplx(std::sqrt(1.0 - x * x), x);
  const cplx amplitude = p * std::exp(cplx(0.0, -n.phase));
  auto apply = [&](const cvec& in, cvec& out) { apply_hopping_hamiltonian(basis, amplitude, spec.onsite, in, out); };
  return TrackingStep{krylov_expm(apply, psi, dt, opt), std::asin(-x) + n.phase, amplitude};
}

/// Species adapter used by the SSMC protocol. The basis is shared between species
/// of equal size and filling.
class HubbardModel {
 public:
  HubbardModel(HubbardSpec spec, std::shared_ptr<const FockBasis> basis, std::string label, KrylovOptions krylov = {})
      : spec_(spec), basis_(std::move(basis)), label_(std::move(label)), krylov_(krylov) {
    spec_.validate();
    if (!basis_ || basis_->sites() != spec_.sites || basis_->dimension() != FockBasis(spec_.sites, spec_.n_up, spec_.n_down).dimension()) {
      throw invalid_argument("HubbardModel: basis does not match spec");
    }
  }

  HubbardModel(HubbardSpec spec, std::string label, KrylovOptions krylov = {})
      : HubbardModel(spec, std::make_shared<const FockBasis>(spec.sites, spec.n_up, spec.n_down), std::move(label),
                     krylov) {}

  const HubbardSpec& spec() const { return spec_; }
  const FockBasis& basis() const { return *basis_; }
  std::shared_ptr<const FockBasis> shared_basis() const { return basis_; }
  const std::string& label() const { return label_; }

  cvec initial_state() const { return ground_state(spec_, *basis_).state; }
  cvec advance(const cvec& psi, double phi, double dt) const {
    return propagate_driven_step(spec_, *basis_, psi, phi, dt, krylov_);
  }
  double response(const cvec& psi, double phi) const { return current_response(spec_, *basis_, psi, phi); }

  /// Zero-response phase on the branch theta + 2 pi k nearest to `previous`, so
  /// the emitted phase stays continuous through wraps of theta.
  double tracking_field(const cvec& psi, double previous) const {
    const auto n = neighbor_expectation(*basis_, psi);
    const double phi = tracking_phase(n, 0.0, spec_.lattice, spec_.hopping);
    const double turns = std::round((previous - phi) / (2.0 * std::numbers::pi));
    return phi + 2.0 * std::numbers::pi * turns;
  }

 private:
  HubbardSpec spec_;
  std::shared_ptr<const FockBasis> basis_;
  std::string label_;
  KrylovOptions krylov_;
};

}  // namespace ssmc::hubbard
