#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ssmc/errors.hpp"
#include "ssmc/krylov.hpp"
#include "ssmc/units.hpp"

namespace ssmc::morse {

/// One nonrotating Morse-oscillator species. Atomic units throughout.
struct MorseSpec {
  double mass = 1800.0;
  double depth = 0.0;  // D
  double width = 0.0;  // Morse alpha, 1/bohr
  double r_eq = 0.0;
  double m0 = 0.0;  // dipole scale
  std::array<double, 4> pade{2.0, 2.0, 2.0, 12.0};
  std::size_t n_r = 100;
  double r_min = 0.25;
  double r_max = 12.25;

  void validate() const {
    if (!(mass > 0.0 && depth > 0.0 && width > 0.0 && r_eq > 0.0 && m0 > 0.0)) {
      throw invalid_argument("MorseSpec: mass, depth, width, r_eq and m0 must be positive");
    }
    if (!(r_min < r_eq && r_eq < r_max)) throw invalid_argument("MorseSpec: need r_min < r_eq < r_max");
    if (n_r < 3) throw invalid_argument("MorseSpec: need at least 3 grid points");
  }

  /// Kinetic prefactor hbar^2 / 2m.
  double kinetic_scale() const { return 0.5 / mass; }

  friend bool operator==(const MorseSpec&, const MorseSpec&) = default;
};

/// Laboratory-unit description; `make_spec` converts it.
struct MorseParameters {
  double mass = 1800.0;        // electron masses
  double depth_cm = 37000.0;   // D
  double we_cm = 3000.0;       // harmonic wavenumber
  double be_cm = 11.0;         // rotational constant
  double r_eq_angstrom = 1.3;
  double m0_debye = 0.5;
  std::array<double, 4> pade{2.0, 2.0, 2.0, 12.0};
  std::size_t n_r = 100;
  double r_min = 0.25;
  double r_max = 12.25;
};

/// alpha = w_e / (2 r_e sqrt(B_e D)); wavenumber units cancel.
inline double morse_width(double we_cm, double be_cm, double depth_cm, double r_eq_bohr) {
  return we_cm / (2.0 * r_eq_bohr * std::sqrt(be_cm * depth_cm));
}

inline MorseSpec make_spec(const MorseParameters& p, const UnitSystem& units = {}) {
  MorseSpec s;
  s.mass = p.mass;
  s.depth = convert(p.depth_cm, unit::wavenumber, unit::hartree, units);
  s.r_eq = convert(p.r_eq_angstrom, unit::angstrom, unit::bohr, units);
  s.width = morse_width(p.we_cm, p.be_cm, p.depth_cm, s.r_eq);
  s.m0 = convert(p.m0_debye, unit::debye, unit::au_dipole, units);
  s.pade = p.pade;
  s.n_r = p.n_r;
  s.r_min = p.r_min;
  s.r_max = p.r_max;
  s.validate();
  return s;
}

inline double morse_potential(double r, const MorseSpec& s) {
  const double y = 1.0 - std::exp(-s.width * (r - s.r_eq));
  return s.depth * y * y - s.depth;
}

inline double morse_force_gradient(double r, const MorseSpec& s) {
  const double e = std::exp(-s.width * (r - s.r_eq));
  return 2.0 * s.depth * s.width * e * (1.0 - e);
}

inline double pade_denominator(double r, const MorseSpec& s) {
  const double x = (r - s.r_eq) / s.r_eq;
  return 1.0 + x * (s.pade[0] + x * (s.pade[1] + x * (s.pade[2] + x * s.pade[3])));
}

inline double dipole(double r, const MorseSpec& s) {
  const double x = (r - s.r_eq) / s.r_eq;
  const double n = (1.0 + x) * (1.0 + x) * (1.0 + x);
  return s.m0 * n / pade_denominator(r, s);
}

/// mu and its first four r-derivatives. The Pade numerator and denominator are
/// re-expanded about x and divided as truncated power series.
inline std::array<double, 5> dipole_derivatives(double r, const MorseSpec& s) {
  const double x = (r - s.r_eq) / s.r_eq;
  // numerator (1+x+h)^3
  const double u = 1.0 + x;
  const std::array<double, 5> num{u * u * u, 3.0 * u * u, 3.0 * u, 1.0, 0.0};
  // denominator 1 + sum e_i (x+h)^i, Taylor coefficients in h
  const std::array<double, 5> c{1.0, s.pade[0], s.pade[1], s.pade[2], s.pade[3]};
  std::array<double, 5> den{};
  constexpr int binom[5][5] = {{1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 2, 1, 0, 0}, {1, 3, 3, 1, 0}, {1, 4, 6, 4, 1}};
  for (int i = 0; i < 5; ++i) {
    for (int k = 0; k <= i; ++k) den[k] += c[i] * binom[i][k] * std::pow(x, i - k);
  }
  std::array<double, 5> q{};
  for (int k = 0; k < 5; ++k) {
    double acc = num[k];
    for (int j = 1; j <= k; ++j) acc -= den[j] * q[k - j];
    q[k] = acc / den[0];
  }
  std::array<double, 5> out{};
  double factorial = 1.0;
  double scale = 1.0;
  for (int k = 0; k < 5; ++k) {
    if (k > 0) {
      factorial *= k;
      scale /= s.r_eq;
    }
    out[k] = s.m0 * q[k] * factorial * scale;
  }
  return out;
}

/// Exact Morse level n measured from the dissociation limit.
inline double exact_level(const MorseSpec& s, int n) {
  const double omega = s.width * std::sqrt(2.0 * s.depth / s.mass);
  const double v = omega * (n + 0.5);
  return -s.depth + v - v * v / (4.0 * s.depth);
}

/// Grid-sampled operators for one species. Hard walls just outside [r_min, r_max].
struct GridOperators {
  MorseSpec spec;
  double h = 0.0;
  Eigen::VectorXd r;
  Eigen::VectorXd potential;
  Eigen::VectorXd potential_gradient;
  std::array<Eigen::VectorXd, 5> mu;  // mu, mu', mu'', mu''', mu''''
  double kinetic_diagonal = 0.0;      // 2 alpha / h^2
  double kinetic_offdiagonal = 0.0;   // -alpha / h^2

  Eigen::Index size() const { return r.size(); }
};

inline GridOperators build_grid_operators(const MorseSpec& spec) {
  spec.validate();
  GridOperators g;
  g.spec = spec;
  const auto n = static_cast<Eigen::Index>(spec.n_r);
  g.h = (spec.r_max - spec.r_min) / static_cast<double>(spec.n_r - 1);
  g.r = Eigen::VectorXd::LinSpaced(n, spec.r_min, spec.r_max);
  g.potential.resize(n);
  g.potential_gradient.resize(n);
  for (auto& m : g.mu) m.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = g.r(i);
    if (!(pade_denominator(r, spec) > 0.0)) {
      throw invalid_argument("Morse model: dipole denominator vanishes on the grid at r = " + std::to_string(r));
    }
    g.potential(i) = morse_potential(r, spec);
    g.potential_gradient(i) = morse_force_gradient(r, spec);
    const auto d = dipole_derivatives(r, spec);
    for (std::size_t k = 0; k < 5; ++k) g.mu[k](i) = d[k];
    if (!std::isfinite(g.potential(i)) || !std::isfinite(g.mu[0](i))) {
      throw invalid_argument("Morse model: non-finite potential or dipole on grid");
    }
  }
  const double kappa = spec.kinetic_scale() / (g.h * g.h);
  g.kinetic_diagonal = 2.0 * kappa;
  g.kinetic_offdiagonal = -kappa;
  return g;
}

/// out = (T + V - mu E - shift) psi.
inline void apply_hamiltonian(const GridOperators& g, double field, const cvec& psi, cvec& out, double shift = 0.0) {
  const Eigen::Index n = g.size();
  out.resize(n);
  const double off = g.kinetic_offdiagonal;
  for (Eigen::Index i = 0; i < n; ++i) {
    cplx acc = (g.kinetic_diagonal + g.potential(i) - g.mu[0](i) * field - shift) * psi(i);
    if (i > 0) acc += off * psi(i - 1);
    if (i + 1 < n) acc += off * psi(i + 1);
    out(i) = acc;
  }
}

inline double energy_expectation(const GridOperators& g, const cvec& psi, double field = 0.0) {
  cvec hpsi;
  apply_hamiltonian(g, field, psi, hpsi);
  return psi.dot(hpsi).real();
}

inline double dipole_expectation(const GridOperators& g, const cvec& psi) {
  return (g.mu[0].array() * psi.array().abs2()).sum();
}

struct GroundState {
  double energy = 0.0;
  cvec state;
  double first_excited_energy = 0.0;
  cvec first_excited;
};

/// Dense diagonalisation of the field-free grid Hamiltonian. Eigenvectors are
/// fixed to a positive largest component.
inline GroundState ground_state(const GridOperators& g) {
  const Eigen::Index n = g.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = g.kinetic_diagonal + g.potential(i);
    if (i + 1 < n) h(i, i + 1) = h(i + 1, i) = g.kinetic_offdiagonal;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw numeric_error("Morse ground state: eigensolver failed");
  auto fix_sign = [](Eigen::VectorXd v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    return v;
  };
  GroundState gs;
  gs.energy = es.eigenvalues()(0);
  gs.state = fix_sign(es.eigenvectors().col(0)).cast<cplx>();
  gs.state.normalize();
  gs.first_excited_energy = es.eigenvalues()(1);
  gs.first_excited = fix_sign(es.eigenvectors().col(1)).cast<cplx>();
  gs.first_excited.normalize();
  return gs;
}

inline cvec propagate_step(const GridOperators& g, const cvec& psi, double field, double dt,
                           const KrylovOptions& opt = {}) {
  // A constant shift only changes the global phase bookkeeping; centring the
  // spectrum keeps the Krylov subspace small.
  const double shift = -g.spec.depth;
  auto apply = [&](const cvec& in, cvec& out) { apply_hamiltonian(g, field, in, out, shift); };
  cvec out = krylov_expm(apply, psi, dt, opt);
  out *= std::exp(cplx(0.0, -shift * dt));
  return out;
}

/// Expectations entering the response, evaluated with the grid operators so that
/// the response equals d^2<mu>/dt^2 of the discretised dynamics.
struct ResponseTerms {
  double b_expectation = 0.0;      // <B>
  double gradient_squared = 0.0;   // <(d mu / dr)^2>
};

inline ResponseTerms response_terms(const GridOperators& g, const cvec& psi) {
  const Eigen::Index n = g.size();
  const double alpha = g.spec.kinetic_scale();
  const double kappa = -g.kinetic_offdiagonal;
  const auto& mu = g.mu[0];
  // C = [T, mu] is real antisymmetric tridiagonal: C(i, i+1) = -kappa (mu_{i+1} - mu_i)
  cvec c_psi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cplx acc = 0.0;
    if (i + 1 < n) acc += -kappa * (mu(i + 1) - mu(i)) * psi(i + 1);
    if (i > 0) acc += -kappa * (mu(i - 1) - mu(i)) * psi(i - 1);
    c_psi(i) = acc;
  }
  cvec h_psi;
  apply_hamiltonian(g, 0.0, psi, h_psi);
  const double mean = psi.dot(h_psi).real() / psi.squaredNorm();
  h_psi -= mean * psi;
  // <[H0, [H0, mu]]> = 2 Re <H0 psi | C psi>
  const double double_commutator = 2.0 * h_psi.dot(c_psi).real();
  double grad = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double d = (mu(i + 1) - mu(i)) / g.h;
    grad += d * d * (std::conj(psi(i)) * psi(i + 1)).real();
  }
  return ResponseTerms{double_commutator / alpha, grad};
}

/// d^2<mu>/dt^2 = (alpha/hbar^2) (-<B> + 2 <mu'^2> E).
inline double response(const GridOperators& g, const cvec& psi, double field) {
  const auto t = response_terms(g, psi);
  const double alpha = g.spec.kinetic_scale();
  return alpha * (-t.b_expectation + 2.0 * t.gradient_squared * field);
}

/// Field that zeroes the response of this species: <B> / (2 <mu'^2>).
inline double tracking_field(const GridOperators& g, const cvec& psi) {
  const auto t = response_terms(g, psi);
  const double floor = 1e-14 * g.spec.m0 * g.spec.m0 / (g.spec.r_eq * g.spec.r_eq);
  if (!(t.gradient_squared > floor)) {
    throw tracking_error(tracking_error::kind::singular,
                         "Morse tracking denominator <(dmu/dr)^2> = " + std::to_string(t.gradient_squared) +
                             " is below the singularity floor");
  }
  return t.b_expectation / (2.0 * t.gradient_squared);
}

/// <B> from the continuum operator form, using the analytic dipole derivatives and
/// central differences for d/dr and d^2/dr^2. Agrees with response_terms up to
/// the O(h^2) discretisation error.
inline double b_expectation_analytic(const GridOperators& g, const cvec& psi) {
  const Eigen::Index n = g.size();
  const double alpha = g.spec.kinetic_scale();
  auto at = [&](Eigen::Index i) { return (i >= 0 && i < n) ? psi(i) : cplx(0.0); };
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx d1 = (at(i + 1) - at(i - 1)) / (2.0 * g.h);
    const cplx d2 = (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (g.h * g.h);
    const cplx b_psi = alpha * (g.mu[4](i) * psi(i) + 4.0 * g.mu[3](i) * d1 + 4.0 * g.mu[2](i) * d2) +
                       2.0 * g.mu[1](i) * g.potential_gradient(i) * psi(i);
    acc += std::conj(psi(i)) * b_psi;
  }
  return acc.real();
}

/// Species adapter used by the SSMC protocol.
class MorseModel {
 public:
  MorseModel(MorseSpec spec, std::string label, KrylovOptions krylov = {})
      : ops_(std::make_shared<const GridOperators>(build_grid_operators(spec))),
        label_(std::move(label)),
        krylov_(krylov) {}

  const MorseSpec& spec() const { return ops_->spec; }
  const GridOperators& operators() const { return *ops_; }
  const std::string& label() const { return label_; }

  cvec initial_state() const { return ground_state(*ops_).state; }
  cvec advance(const cvec& psi, double field, double dt) const { return propagate_step(*ops_, psi, field, dt, krylov_); }
  double response(const cvec& psi, double field) const { return morse::response(*ops_, psi, field); }
  double tracking_field(const cvec& psi, double /*previous*/) const { return morse::tracking_field(*ops_, psi); }

 private:
  std::shared_ptr<const GridOperators> ops_;
  std::string label_;
  KrylovOptions krylov_;
};

}  // namespace ssmc::morse
