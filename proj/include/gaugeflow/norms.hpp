#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gaugeflow/errors.hpp"
#include "gaugeflow/fields.hpp"
#include "gaugeflow/solvers.hpp"

namespace gaugeflow {

// Sobolev norm parameters. All norms are taken with respect to the trivial
// reference connection (the discrete A_1), which keeps Fourier oracles exact.
struct NormSpec {
  int k = 1;
  double p = 2.0;

  void validate() const {
    if (k < 0 || k > 2) throw UnsupportedExponentError("NormSpec: k must be 0, 1 or 2");
    if (!(p >= 1.0)) throw UnsupportedExponentError("NormSpec: p must be >= 1");
  }
};

namespace detail {

// Per-site real component arrays of a tangent: the d * alg_dim link values
// attached to the site plus the 2N real matter components.
template <class G>
inline std::vector<std::vector<double>> site_components(const Lattice& lat,
                                                        const Tangent<G>& t) {
  const int d = lat.dim();
  const int c_link = d * G::alg_dim;
  const int c = c_link + 2 * G::N;
  std::vector<std::vector<double>> out(lat.n_sites(), std::vector<double>(c));
  for (long x = 0; x < lat.n_sites(); ++x) {
    for (int mu = 0; mu < d; ++mu) {
      auto co = algebra_coeffs<G>(t.a[lat.link_index(x, mu)]);
      for (int k = 0; k < G::alg_dim; ++k) out[x][mu * G::alg_dim + k] = co[k];
    }
    for (int k = 0; k < G::N; ++k) {
      out[x][c_link + 2 * k] = t.phi[x][k].real();
      out[x][c_link + 2 * k + 1] = t.phi[x][k].imag();
    }
  }
  return out;
}

// forward difference in every direction: components multiply by d
inline std::vector<std::vector<double>> forward_difference(
    const Lattice& lat, const std::vector<std::vector<double>>& f) {
  const int d = lat.dim();
  const int c = static_cast<int>(f[0].size());
  const double inv_h = 1.0 / lat.h();
  std::vector<std::vector<double>> out(lat.n_sites(),
                                       std::vector<double>(c * d));
  for (long x = 0; x < lat.n_sites(); ++x) {
    for (int nu = 0; nu < d; ++nu) {
      const long y = lat.shift(x, nu, +1);
      for (int j = 0; j < c; ++j)
        out[x][nu * c + j] = inv_h * (f[y][j] - f[x][j]);
    }
  }
  return out;
}

inline double lp_accumulate(const Lattice& lat,
                            const std::vector<std::vector<double>>& f, double p) {
  const double w = lat.cell_volume();
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& fx : f) {
      double s = 0.0;
      for (double v : fx) s += v * v;
      m = std::max(m, std::sqrt(s));
    }
    return m;
  }
  double acc = 0.0;
  for (const auto& fx : f) {
    double s = 0.0;
    for (double v : fx) s += v * v;
    acc += std::pow(std::sqrt(s), p);
  }
  return w * acc;
}

}  // namespace detail

// || t ||_{W^{k,p}} with iterated forward differences (trivial reference).
// For finite p: ( sum_{j<=k} integral |grad^j t|^p )^{1/p}; for p = infinity:
// sum of essential sups.
template <class G>
inline double sobolev_norm(const Lattice& lat, const Tangent<G>& t,
                           const NormSpec& spec) {
  spec.validate();
  auto f = detail::site_components(lat, t);
  if (std::isinf(spec.p)) {
    double s = detail::lp_accumulate(lat, f, spec.p);
    for (int j = 1; j <= spec.k; ++j) {
      f = detail::forward_difference(lat, f);
      s += detail::lp_accumulate(lat, f, spec.p);
    }
    return s;
  }
  double acc = detail::lp_accumulate(lat, f, spec.p);
  for (int j = 1; j <= spec.k; ++j) {
    f = detail::forward_difference(lat, f);
    acc += detail::lp_accumulate(lat, f, spec.p);
  }
  return std::pow(acc, 1.0 / spec.p);
}

// Componentwise reference Laplacian (trivial connection) on tangents:
// (Delta t)(x) = -sum_nu ( t(x+nu) - 2 t(x) + t(x-nu) ) / h^2.
template <class G>
inline Tangent<G> trivial_laplacian(const Lattice& lat, const Tangent<G>& t) {
  Tangent<G> out = Tangent<G>::zero(lat);
  const double inv_h2 = 1.0 / (lat.h() * lat.h());
  const int d = lat.dim();
  parallel_for(lat.n_sites(), [&](long x) {
    for (int mu = 0; mu < d; ++mu) {
      const long e = lat.link_index(x, mu);
      typename G::AMat acc = 2.0 * static_cast<double>(d) * t.a[e];
      for (int nu = 0; nu < d; ++nu) {
        acc -= t.a[lat.link_index(lat.shift(x, nu, +1), mu)];
        acc -= t.a[lat.link_index(lat.shift(x, nu, -1), mu)];
      }
      out.a[e] = inv_h2 * acc;
    }
    typename G::RVec accp = (2.0 * d) * t.phi[x];
    for (int nu = 0; nu < d; ++nu) {
      accp -= t.phi[lat.shift(x, nu, +1)];
      accp -= t.phi[lat.shift(x, nu, -1)];
    }
    out.phi[x] = inv_h2 * accp;
  });
  return out;
}

// W^{-1,2} dual norm: < t, (Delta_triv + 1)^{-1} t >^{1/2}. Only p = 2 is
// implemented; other exponents are rejected.
template <class G>
inline double dual_norm_wneg1(const Lattice& lat, const Tangent<G>& t,
                              double p = 2.0) {
  if (p != 2.0)
    throw UnsupportedExponentError("dual_norm_wneg1: only p = 2 is supported");
  std::vector<double> rhs;
  flatten_tan<G>(t, rhs);
  LinOp op;
  op.dim = static_cast<long>(rhs.size());
  op.symmetric = true;
  op.domain = "trivial_laplacian_plus_one";
  op.apply = [&lat](const std::vector<double>& x, std::vector<double>& y) {
    Tangent<G> tx;
    unflatten_tan<G>(lat, x, tx);
    Tangent<G> ty = trivial_laplacian<G>(lat, tx);
    ty += tx;
    flatten_tan<G>(ty, y);
  };
  std::vector<double> sol = cg_solve(op, rhs, 1e-12, 100000);
  const double q = lat.cell_volume() * vecops::dot(rhs, sol);
  return std::sqrt(std::max(0.0, q));
}

}  // namespace gaugeflow
