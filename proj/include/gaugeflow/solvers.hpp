#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gaugeflow/errors.hpp"
#include "gaugeflow/rng.hpp"

namespace gaugeflow {

// Matrix-free linear operator on orthonormal real coordinates. The physical
// inner product differs from the coordinate dot product by the constant h^d
// weight only, so relative tolerances, symmetry and spectra are unchanged.
struct LinOp {
  std::function<void(const std::vector<double>&, std::vector<double>&)> apply;
  long dim = 0;
  bool symmetric = false;
  std::string domain;
  // Orthonormal kernel basis; solvers deflate against it, realizing the
  // restriction to (Ker)^perp.
  std::vector<std::vector<double>> kernel;
};

namespace vecops {

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

inline void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(std::vector<double>& x, double a) {
  for (auto& v : x) v *= a;
}

inline void project_out(const std::vector<std::vector<double>>& basis,
                        std::vector<double>& x) {
  for (const auto& k : basis) axpy(-dot(k, x), k, x);
}

// modified Gram-Schmidt; drops vectors below droptol and returns the basis
inline std::vector<std::vector<double>> orthonormalize(
    std::vector<std::vector<double>> vs, double droptol = 1e-12) {
  std::vector<std::vector<double>> out;
  for (auto& v : vs) {
    for (int pass = 0; pass < 2; ++pass) project_out(out, v);
    const double n = norm(v);
    if (n > droptol) {
      scale(v, 1.0 / n);
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace vecops

// Conjugate gradients for symmetric positive semidefinite operators.
// The right-hand side and iterates are kept orthogonal to op.kernel.
inline std::vector<double> cg_solve(const LinOp& op, std::vector<double> rhs,
                                    double tol, int max_iter) {
  using namespace vecops;
  project_out(op.kernel, rhs);
  const double rhs_norm = norm(rhs);
  std::vector<double> x(rhs.size(), 0.0);
  if (rhs_norm == 0.0) return x;

  std::vector<double> r = rhs, p = rhs, ap(rhs.size());
  double rr = dot(r, r);
  const double target = tol * rhs_norm;
  for (int it = 0; it < max_iter; ++it) {
    if (std::sqrt(rr) <= target) {
      project_out(op.kernel, x);
      return x;
    }
    op.apply(p, ap);
    project_out(op.kernel, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0)) break;  // lost positivity; report failure below
    const double alpha = rr / pap;
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    if ((it + 1) % 50 == 0) project_out(op.kernel, r);
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
  if (std::sqrt(rr) <= target) {
    project_out(op.kernel, x);
    return x;
  }
  throw NoConvergenceError("cg_solve: no convergence on " + op.domain,
                           std::sqrt(rr) / rhs_norm);
}

// BiCGSTAB for the mildly nonsymmetric perturbed operators. Solves on the
// orthogonal complement of op.kernel. Verified residual on exit: never a
// silent wrong answer.
inline std::vector<double> nonsym_solve(const LinOp& op, std::vector<double> rhs,
                                        double tol, int max_iter) {
  using namespace vecops;
  project_out(op.kernel, rhs);
  const double rhs_norm = norm(rhs);
  std::vector<double> x(rhs.size(), 0.0);
  if (rhs_norm == 0.0) return x;
  const double target = tol * rhs_norm;

  std::vector<double> r = rhs;
  std::vector<double> r0 = rhs;
  std::vector<double> p(rhs.size(), 0.0), v(rhs.size(), 0.0);
  std::vector<double> s(rhs.size()), t(rhs.size());
  double rho = 1.0, alpha = 1.0, omega = 1.0;

  auto finish = [&](std::vector<double> sol) {
    project_out(op.kernel, sol);
    std::vector<double> chk(sol.size());
    op.apply(sol, chk);
    project_out(op.kernel, chk);
    for (size_t i = 0; i < chk.size(); ++i) chk[i] -= rhs[i];
    const double res = norm(chk) / rhs_norm;
    if (res > tol)
      throw NoConvergenceError("nonsym_solve: verified residual too large on " +
                                   op.domain,
                               res);
    return sol;
  };

  for (int it = 0; it < max_iter; ++it) {
    const double rho_new = dot(r0, r);
    if (std::abs(rho_new) < 1e-300)
      throw NoConvergenceError("nonsym_solve: breakdown on " + op.domain,
                               norm(r) / rhs_norm);
    if (it == 0) {
      p = r;
    } else {
      const double beta = (rho_new / rho) * (alpha / omega);
      for (size_t i = 0; i < p.size(); ++i)
        p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    rho = rho_new;
    op.apply(p, v);
    project_out(op.kernel, v);
    alpha = rho / dot(r0, v);
    s = r;
    axpy(-alpha, v, s);
    if (norm(s) <= target) {
      axpy(alpha, p, x);
      return finish(x);
    }
    op.apply(s, t);
    project_out(op.kernel, t);
    const double tt = dot(t, t);
    if (tt == 0.0)
      throw NoConvergenceError("nonsym_solve: stagnation on " + op.domain,
                               norm(s) / rhs_norm);
    omega = dot(t, s) / tt;
    axpy(alpha, p, x);
    axpy(omega, s, x);
    r = s;
    axpy(-omega, t, r);
    if (norm(r) <= target) return finish(x);
  }
  throw NoConvergenceError("nonsym_solve: max iterations on " + op.domain,
                           norm(r) / rhs_norm);
}

namespace detail {

// Jacobi eigensolver for small dense symmetric matrices (row-major n x n).
// Returns eigenvalues ascending; V columns are eigenvectors (V[i*n+k] is
// component i of eigenvector k).
inline void jacobi_eigen(std::vector<double> m, int n, std::vector<double>& eigs,
                         std::vector<double>& vecs) {
  vecs.assign(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) vecs[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m[i * n + j] * m[i * n + j];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = m[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = m[p * n + p], aqq = m[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = m[k * n + p], akq = m[k * n + q];
          m[k * n + p] = c * akp - s * akq;
          m[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = m[p * n + k], aqk = m[q * n + k];
          m[p * n + k] = c * apk - s * aqk;
          m[q * n + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vecs[k * n + p], vkq = vecs[k * n + q];
          vecs[k * n + p] = c * vkp - s * vkq;
          vecs[k * n + q] = s * vkp + c * vkq;
        }
      }
  }
  eigs.resize(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = m[i * n + i];
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return diag[a] < diag[b]; });
  std::vector<double> v2(vecs.size());
  for (int k = 0; k < n; ++k) {
    eigs[k] = diag[order[k]];
    for (int i = 0; i < n; ++i) v2[i * n + k] = vecs[i * n + order[k]];
  }
  vecs.swap(v2);
}

}  // namespace detail

// Largest-eigenvalue estimate by power iteration (symmetric op).
inline double largest_eigenvalue_estimate(const LinOp& op, int iters = 30,
                                          std::uint64_t seed = 7) {
  CounterRng rng(seed);
  std::vector<double> v(op.dim);
  for (auto& x : v) x = rng.next_gaussian();
  double n = vecops::norm(v);
  vecops::scale(v, 1.0 / n);
  std::vector<double> w(op.dim);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    op.apply(v, w);
    lambda = vecops::dot(v, w);
    n = vecops::norm(w);
    if (n == 0.0) return 0.0;
    for (size_t i = 0; i < v.size(); ++i) v[i] = w[i] / n;
  }
  return std::max(lambda, n);
}

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending
  int kernel_dim = 0;
  double mu = 0.0;              // least positive eigenvalue
  double worst_residual = 0.0;  // certified bound on the eigenvalue error
};

// Smallest `count` eigenvalues of a symmetric positive semidefinite operator
// by shift-inverted subspace iteration with Rayleigh-Ritz extraction; the
// inner inversions of (L + sigma) use cg_solve.
inline SpectrumReport spectrum_low(const LinOp& op, int count, double tol = 1e-9,
                                   int max_outer = 200, std::uint64_t seed = 11) {
  using namespace vecops;
  if (!op.symmetric)
    throw DimensionMismatchError("spectrum_low requires a symmetric operator");
  const long n = op.dim;
  count = std::min<long>(count, n);
  const int block = std::min<long>(n, std::max(2 * count + 4, count + 6));

  const double lam_max = std::max(largest_eigenvalue_estimate(op), 1e-30);
  const double sigma = 1e-3 * lam_max;

  LinOp shifted;
  shifted.dim = n;
  shifted.symmetric = true;
  shifted.domain = op.domain + "+sigma";
  shifted.apply = [&op, sigma](const std::vector<double>& x,
                               std::vector<double>& y) {
    op.apply(x, y);
    vecops::axpy(sigma, x, y);
  };

  CounterRng rng(seed);
  std::vector<std::vector<double>> basis(block, std::vector<double>(n));
  for (auto& v : basis)
    for (auto& x : v) x = rng.next_gaussian();
  basis = orthonormalize(std::move(basis));

  std::vector<double> ritz(block, 0.0);
  std::vector<double> prev_ritz;
  double prev_drift = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  std::vector<std::vector<double>> tmp;
  for (int outer = 0; outer < max_outer; ++outer) {
    // inverse iteration step
    tmp.clear();
    for (const auto& v : basis)
      tmp.push_back(cg_solve(shifted, v, 1e-12, 10000));
    basis = orthonormalize(std::move(tmp));
    while (static_cast<int>(basis.size()) < block) {  // re-pad on rank loss
      std::vector<double> v(n);
      for (auto& x : v) x = rng.next_gaussian();
      project_out(basis, v);
      const double nv = norm(v);
      if (nv < 1e-12) break;
      scale(v, 1.0 / nv);
      basis.push_back(std::move(v));
    }

    // Rayleigh-Ritz on the subspace
    const int b = static_cast<int>(basis.size());
    std::vector<std::vector<double>> lv(b, std::vector<double>(n));
    for (int i = 0; i < b; ++i) op.apply(basis[i], lv[i]);
    std::vector<double> small(static_cast<size_t>(b) * b);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) small[i * b + j] = dot(basis[i], lv[j]);
    // symmetrize against roundoff
    for (int i = 0; i < b; ++i)
      for (int j = i + 1; j < b; ++j) {
        const double s = 0.5 * (small[i * b + j] + small[j * b + i]);
        small[i * b + j] = small[j * b + i] = s;
      }
    std::vector<double> eigs, vecs;
    detail::jacobi_eigen(small, b, eigs, vecs);
    std::vector<std::vector<double>> rotated(b, std::vector<double>(n, 0.0));
    for (int k = 0; k < b; ++k)
      for (int i = 0; i < b; ++i) axpy(vecs[i * b + k], basis[i], rotated[k]);
    basis = std::move(rotated);

    // residual check on the lowest `count` Ritz pairs; for symmetric
    // operators the eigenvalue error is bounded by the residual
    double worst = 0.0;
    std::vector<double> w(n);
    for (int k = 0; k < count; ++k) {
      op.apply(basis[k], w);
      axpy(-eigs[k], basis[k], w);
      worst = std::max(worst, norm(w));
    }
    // near-degenerate clusters freeze the residual at the cluster width even
    // though the values are settled; accept once the Ritz values stagnate
    double drift = std::numeric_limits<double>::infinity();
    if (!prev_ritz.empty()) {
      drift = 0.0;
      for (int k = 0; k < count; ++k)
        drift = std::max(drift, std::abs(eigs[k] - prev_ritz[k]));
    }
    prev_ritz.assign(eigs.begin(), eigs.begin() + count);
    // cluster rotation shows a small, non-decaying drift; geometric decay
    // means convergence is still in progress and iterating helps
    const bool small_drift = drift <= std::max(1e-13 * std::max(1.0, lam_max),
                                               1e-3 * worst);
    const bool non_decaying = drift >= 0.8 * prev_drift;
    prev_drift = drift;
    stagnant = (small_drift && non_decaying) ? stagnant + 1 : 0;

    ritz.assign(eigs.begin(), eigs.end());
    if (worst <= tol * std::max(1.0, lam_max) || stagnant >= 3) {
      SpectrumReport rep;
      rep.worst_residual = worst;
      rep.eigenvalues.assign(ritz.begin(), ritz.begin() + count);
      for (auto& e : rep.eigenvalues)
        if (std::abs(e) < 1e-14 * std::max(1.0, lam_max)) e = std::abs(e);
      const double kthresh = 1e-10 * lam_max;
      for (double e : rep.eigenvalues)
        if (e < kthresh) ++rep.kernel_dim;
      rep.mu = 0.0;
      for (double e : rep.eigenvalues)
        if (e >= kthresh) {
          rep.mu = e;
          break;
        }
      return rep;
    }
  }
  throw NoConvergenceError("spectrum_low: no convergence on " + op.domain);
}

// Orthonormal basis of the numerical kernel (eigenvalues below the relative
// threshold 1e-10 x lambda_max), at most max_dim vectors.
inline std::vector<std::vector<double>> kernel_basis(const LinOp& op, int max_dim,
                                                     double tol = 1e-9) {
  using namespace vecops;
  const long n = op.dim;
  max_dim = std::min<long>(max_dim, n);
  if (max_dim == 0) return {};
  SpectrumReport rep = spectrum_low(op, max_dim, tol);
  const int kd = rep.kernel_dim;
  if (kd == 0) return {};
  // rerun the extraction to recover the vectors: cheap dedicated pass
  const double lam_max = std::max(largest_eigenvalue_estimate(op), 1e-30);
  const double sigma = 1e-3 * lam_max;
  LinOp shifted;
  shifted.dim = n;
  shifted.symmetric = true;
  shifted.domain = op.domain + "+sigma";
  shifted.apply = [&op, sigma](const std::vector<double>& x,
                               std::vector<double>& y) {
    op.apply(x, y);
    vecops::axpy(sigma, x, y);
  };
  CounterRng rng(23);
  std::vector<std::vector<double>> basis(std::min<long>(n, kd + 4),
                                         std::vector<double>(n));
  for (auto& v : basis)
    for (auto& x : v) x = rng.next_gaussian();
  basis = orthonormalize(std::move(basis));
  for (int outer = 0; outer < 100; ++outer) {
    std::vector<std::vector<double>> tmp;
    for (const auto& v : basis) tmp.push_back(cg_solve(shifted, v, 1e-12, 10000));
    basis = orthonormalize(std::move(tmp));
    // check convergence of the kernel block
    double worst = 0.0;
    std::vector<double> w(n);
    for (int k = 0; k < kd && k < static_cast<int>(basis.size()); ++k) {
      op.apply(basis[k], w);
      worst = std::max(worst, norm(w));
    }
    if (worst <= tol * std::max(1.0, lam_max)) break;
  }
  // Rayleigh-Ritz to sort, keep the kd lowest
  const int b = static_cast<int>(basis.size());
  std::vector<std::vector<double>> lv(b, std::vector<double>(n));
  for (int i = 0; i < b; ++i) op.apply(basis[i], lv[i]);
  std::vector<double> small(static_cast<size_t>(b) * b);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) small[i * b + j] = dot(basis[i], lv[j]);
  std::vector<double> eigs, vecs;
  detail::jacobi_eigen(small, b, eigs, vecs);
  std::vector<std::vector<double>> out;
  for (int k = 0; k < kd; ++k) {
    std::vector<double> v(n, 0.0);
    for (int i = 0; i < b; ++i) axpy(vecs[i * b + k], basis[i], v);
    out.push_back(std::move(v));
  }
  return orthonormalize(std::move(out));
}

}  // namespace gaugeflow
