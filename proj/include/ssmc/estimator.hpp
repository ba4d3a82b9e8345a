#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ssmc/errors.hpp"

namespace ssmc {

/// mt19937_64 seeded through splitmix64, with substreams derived by hashing
/// (seed, stream). Uniforms use the top 53 bits; normals use Box-Muller.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : engine_(mix(seed, stream)) {}

  /// Independent generator for substream `stream` of this seed.
  static Rng split(std::uint64_t seed, std::uint64_t stream) { return Rng(seed, stream + 1); }

  /// A seed for substream `stream`, for APIs that take a plain seed.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) { return mix(seed, stream + 1); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return radius * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) { return splitmix(splitmix(seed) ^ stream); }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class method_tag { ssmc, naive };

inline const char* to_string(method_tag m) { return m == method_tag::ssmc ? "ssmc" : "naive"; }

struct EstimationReport {
  Eigen::VectorXd y_true;
  Eigen::VectorXd y_est;
  double epsilon = 0.0;
  double cond_a = 0.0;
  double noise_sigma_relative = 0.0;
  std::uint64_t seed = 0;
  method_tag method = method_tag::ssmc;
};

/// R_mix = A y.
inline Eigen::VectorXd mixture_response(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  if (a.cols() != y.size()) throw invalid_argument("mixture_response: A has " + std::to_string(a.cols()) +
                                                   " columns but y has " + std::to_string(y.size()) + " entries");
  return a * y;
}

/// Adds i.i.d. N(0, (sigma_rel ||r||_inf)^2) to each entry.
inline Eigen::VectorXd add_noise(const Eigen::VectorXd& r, double sigma_rel, std::uint64_t seed) {
  if (!(sigma_rel >= 0.0)) throw invalid_argument("add_noise: sigma_rel must be non-negative");
  if (sigma_rel == 0.0 || r.size() == 0) return r;
  const double sigma = sigma_rel * r.cwiseAbs().maxCoeff();
  Rng rng(seed);
  Eigen::VectorXd out = r;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += sigma * rng.normal();
  return out;
}

namespace detail {

inline Eigen::JacobiSVD<Eigen::MatrixXd> thin_svd(const Eigen::MatrixXd& a) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

}  // namespace detail

/// Least-squares minimiser of ||A y - r||_2 through the SVD pseudoinverse.
/// Singular values below eps * max(rows, cols) * sigma_max are dropped.
inline Eigen::VectorXd solve_concentrations(const Eigen::MatrixXd& a, const Eigen::VectorXd& r) {
  if (a.rows() < a.cols()) throw invalid_argument("solve_concentrations: A must have at least as many rows as columns");
  if (a.rows() != r.size()) throw invalid_argument("solve_concentrations: dimension mismatch");
  const auto svd = detail::thin_svd(a);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(a.rows(), a.cols())) *
                        (sv.size() > 0 ? sv(0) : 0.0);
  Eigen::VectorXd coeff = svd.matrixU().transpose() * r;
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) {
      coeff(i) /= sv(i);
      ++kept;
    } else {
      coeff(i) = 0.0;
    }
  }
  if (kept == 0) throw numeric_error("solve_concentrations: all singular values below cutoff (rank deficient)");
  return svd.matrixV() * coeff;
}

/// sigma_max / sigma_min; +inf when sigma_min is exactly zero.
inline double condition_number(const Eigen::MatrixXd& a) {
  if (a.size() == 0 || a.cwiseAbs().maxCoeff() == 0.0) throw invalid_argument("condition_number: zero matrix");
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

inline double error_norm(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_est) {
  if (y_true.size() != y_est.size()) throw invalid_argument("error_norm: length mismatch");
  return (y_true - y_est).norm();
}

/// Uniform(0, 1) draws normalised to sum to one.
inline Eigen::VectorXd random_concentrations(std::size_t n_s, std::uint64_t seed) {
  if (n_s == 0) throw invalid_argument("random_concentrations: need at least one species");
  Rng rng(seed);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n_s));
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.uniform();
  return y / y.sum();
}

/// Euclidean projection onto the probability simplex (opt-in post-step).
inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  return (v.array() - tau).max(0.0).matrix();
}

/// Synthesise R_mix = A y, optionally corrupt it, solve, and score.
inline EstimationReport characterize(const Eigen::MatrixXd& a, const Eigen::VectorXd& y_true, double sigma_rel,
                                     std::uint64_t noise_seed, method_tag method) {
  const Eigen::VectorXd clean = mixture_response(a, y_true);
  const Eigen::VectorXd measured = add_noise(clean, sigma_rel, noise_seed);
  EstimationReport rep;
  rep.y_true = y_true;
  rep.y_est = solve_concentrations(a, measured);
  rep.epsilon = error_norm(y_true, rep.y_est);
  rep.cond_a = condition_number(a);
  rep.noise_sigma_relative = sigma_rel;
  rep.seed = noise_seed;
  rep.method = method;
  return rep;
}

}  // namespace ssmc
