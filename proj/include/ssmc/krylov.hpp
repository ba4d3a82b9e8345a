#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmc/errors.hpp"

namespace ssmc {

using cvec = Eigen::VectorXcd;
using cplx = std::complex<double>;

struct KrylovOptions {
  std::size_t max_dim = 30;
  double tolerance = 1e-12;  // a posteriori error bound per step, relative to the input norm
  int max_halvings = 16;
};

namespace detail {

// Lanczos basis stored column-wise, reused between calls on the same thread.
struct LanczosWorkspace {
  Eigen::MatrixXcd basis;
  std::vector<double> alpha, beta;
  cvec w;

  void reset(Eigen::Index n, std::size_t max_dim) {
    if (basis.rows() != n || basis.cols() < static_cast<Eigen::Index>(max_dim)) {
      basis.resize(n, static_cast<Eigen::Index>(max_dim));
    }
    w.resize(n);
    alpha.clear();
    beta.clear();
  }
};

inline LanczosWorkspace& thread_workspace() {
  thread_local LanczosWorkspace ws;
  return ws;
}

// Lanczos with full reorthogonalisation. Extends the basis until
// `accept(dim)` returns true, the dimension cap is hit, or the space becomes
// invariant. Returns the dimension reached.
template <class Apply, class Accept>
std::size_t lanczos(Apply& apply, const cvec& start, std::size_t max_dim, LanczosWorkspace& ws, bool& invariant,
                    Accept&& accept) {
  const auto n = static_cast<std::size_t>(start.size());
  max_dim = std::min(max_dim, n);
  ws.reset(start.size(), max_dim);
  invariant = false;
  ws.basis.col(0) = start / start.norm();
  for (std::size_t j = 0; j < max_dim; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    apply(ws.basis.col(jj), ws.w);
    const double a = ws.basis.col(jj).dot(ws.w).real();
    ws.alpha.push_back(a);
    ws.w -= a * ws.basis.col(jj);
    if (j > 0) ws.w -= ws.beta[j - 1] * ws.basis.col(jj - 1);
    {
      const Eigen::VectorXcd overlap = ws.basis.leftCols(jj + 1).adjoint() * ws.w;
      ws.w.noalias() -= ws.basis.leftCols(jj + 1) * overlap;
    }
    const double b = ws.w.norm();
    ws.beta.push_back(b);
    const double scale = std::abs(a) + (j > 0 ? ws.beta[j - 1] : 0.0) + 1e-300;
    if (b <= 1e-14 * scale) {
      invariant = true;
      return j + 1;
    }
    if (accept(j + 1)) return j + 1;
    if (j + 1 < max_dim) ws.basis.col(jj + 1) = ws.w / b;
  }
  return max_dim;
}

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tridiagonal_eigen(const std::vector<double>& alpha,
                                                                        const std::vector<double>& beta,
                                                                        std::size_t m) {
  const auto mm = static_cast<Eigen::Index>(m);
  Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(alpha.data(), mm);
  Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), mm - 1))
                              : Eigen::VectorXd(0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  return es;
}

// exp(-i T dt) e_1 for the leading m x m block of the tridiagonal matrix.
inline Eigen::VectorXcd small_propagator(const std::vector<double>& alpha, const std::vector<double>& beta,
                                         std::size_t m, double dt) {
  const auto es = tridiagonal_eigen(alpha, beta, m);
  const Eigen::MatrixXd& q = es.eigenvectors();
  Eigen::VectorXcd coeff(static_cast<Eigen::Index>(m));
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    coeff(k) = std::exp(cplx(0.0, -es.eigenvalues()(k) * dt)) * q(0, k);
  }
  return q.cast<cplx>() * coeff;
}

template <class Apply>
bool try_krylov_step(Apply& apply, const cvec& psi, double dt, const KrylovOptions& opt, cvec& out) {
  const double norm = psi.norm();
  if (norm == 0.0) {
    out = psi;
    return true;
  }
  auto& ws = thread_workspace();
  bool invariant = false;
  Eigen::VectorXcd coeff;
  bool converged = false;
  const std::size_t m = lanczos(apply, psi, opt.max_dim, ws, invariant, [&](std::size_t dim) {
    // estimate on a fixed ladder so the result never depends on earlier calls
    if (dim < opt.max_dim && (dim < 4 || dim % 2 != 0)) return false;
    coeff = small_propagator(ws.alpha, ws.beta, dim, dt);
    converged = ws.beta[dim - 1] * std::abs(coeff(static_cast<Eigen::Index>(dim) - 1)) < opt.tolerance;
    return converged;
  });
  if (invariant || (!converged && m == static_cast<std::size_t>(psi.size()))) {
    // invariant subspace or the full space: the projection is exact
    coeff = small_propagator(ws.alpha, ws.beta, m, dt);
    converged = true;
  }
  if (!converged) return false;
  out.noalias() = ws.basis.leftCols(static_cast<Eigen::Index>(m)) * coeff;
  out *= norm;
  return true;
}

}  // namespace detail

/// exp(-i H dt) psi for a Hermitian H given by `apply(in, out)`, via an adaptive
/// Lanczos subspace. Steps that do not converge within `max_dim` are split in half.
template <class Apply>
cvec krylov_expm(Apply&& apply, const cvec& psi, double dt, const KrylovOptions& opt = {}) {
  if (!std::isfinite(dt)) throw invalid_argument("krylov_expm: non-finite time step");
  // backward steps run the same loop on |dt|
  const double sign = dt < 0.0 ? -1.0 : 1.0;
  cvec current = psi;
  cvec next;
  double remaining = std::abs(dt);
  double h = remaining;
  int halvings = 0;
  while (remaining > 0.0) {
    h = std::min(h, remaining);
    if (detail::try_krylov_step(apply, current, sign * h, opt, next)) {
      current.swap(next);
      remaining -= h;
      if (remaining <= 1e-14 * std::abs(dt)) break;
    } else {
      if (++halvings > opt.max_halvings) {
        throw numeric_error("Krylov propagation did not converge after " + std::to_string(opt.max_halvings) +
                            " step halvings");
      }
      h *= 0.5;
    }
  }
  return current;
}

struct EigenPair {
  double value = 0.0;
  cvec vector;
  double residual = 0.0;
};

struct LanczosOptions {
  std::size_t subspace = 60;
  double tolerance = 1e-10;  // on ||H x - lambda x||
  int max_restarts = 200;
};

/// Lowest eigenpair of a Hermitian operator by explicitly restarted Lanczos.
template <class Apply>
EigenPair lanczos_ground_state(Apply&& apply, cvec start, const LanczosOptions& opt = {}) {
  if (start.norm() == 0.0) throw invalid_argument("lanczos: zero start vector");
  detail::LanczosWorkspace ws;
  bool invariant = false;
  cvec hx(start.size());
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    const std::size_t m = detail::lanczos(apply, start, opt.subspace, ws, invariant, [](std::size_t) { return false; });
    const auto es = detail::tridiagonal_eigen(ws.alpha, ws.beta, m);
    cvec x = ws.basis.leftCols(static_cast<Eigen::Index>(m)) * es.eigenvectors().col(0).cast<cplx>();
    x.normalize();
    apply(x, hx);
    const double lambda = x.dot(hx).real();
    const double residual = (hx - lambda * x).norm();
    if (residual < opt.tolerance) return EigenPair{lambda, x, residual};
    start = x;
  }
  throw numeric_error("lanczos ground state did not converge");
}

}  // namespace ssmc
