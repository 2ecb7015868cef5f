#pragma once

#include <cmath>
#include <vector>

#include "gaugeflow/errors.hpp"
#include "gaugeflow/group.hpp"
#include "gaugeflow/lattice.hpp"
#include "gaugeflow/parallel.hpp"
#include "gaugeflow/rng.hpp"

namespace gaugeflow {

// Compact link-holonomy discretization: one group element per oriented link,
// U_e ~ exp(h A_e). Gauge invariance of all energies is then exact; the
// price is a principal log in the field strength.
template <class G>
struct Connection {
  std::vector<typename G::GMat> u;

  static Connection trivial(const Lattice& lat) {
    Connection c;
    c.u.assign(lat.n_links(), G::GMat::identity());
    return c;
  }
};

// Matter field: one representation vector per site.
template <class G>
struct Section {
  std::vector<typename G::RVec> phi;

  static Section zero(const Lattice& lat) {
    Section s;
    s.phi.assign(lat.n_sites(), G::RVec::zero());
    return s;
  }
};

template <class G>
struct GaugeTransform {
  std::vector<typename G::GMat> g;

  static GaugeTransform identity(const Lattice& lat) {
    GaugeTransform t;
    t.g.assign(lat.n_sites(), G::GMat::identity());
    return t;
  }
};

// Lie-algebra element per site (a 0-form with values in ad P).
template <class G>
using AlgebraField = std::vector<typename G::AMat>;

// Tangent vector (a, phi) at a configuration: per-link algebra element with
// units 1/length plus a per-site representation vector.
template <class G>
struct Tangent {
  std::vector<typename G::AMat> a;
  std::vector<typename G::RVec> phi;

  static Tangent zero(const Lattice& lat) {
    Tangent t;
    t.a.assign(lat.n_links(), G::AMat::zero());
    t.phi.assign(lat.n_sites(), G::RVec::zero());
    return t;
  }

  Tangent& operator+=(const Tangent& o) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
    for (size_t i = 0; i < phi.size(); ++i) phi[i] += o.phi[i];
    return *this;
  }
  Tangent& operator-=(const Tangent& o) {
    for (size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
    for (size_t i = 0; i < phi.size(); ++i) phi[i] -= o.phi[i];
    return *this;
  }
  Tangent& operator*=(double s) {
    for (auto& m : a) m *= s;
    for (auto& v : phi) v *= s;
    return *this;
  }
  friend Tangent operator+(Tangent x, const Tangent& y) { return x += y; }
  friend Tangent operator-(Tangent x, const Tangent& y) { return x -= y; }
  friend Tangent operator*(Tangent x, double s) { return x *= s; }
  friend Tangent operator*(double s, Tangent x) { return x *= s; }
};

template <class G>
struct Configuration {
  Connection<G> u;
  Section<G> phi;
};

// ---------------------------------------------------------------------------
// inner products (discrete L^2, measure h^d per site/link)

template <class G>
inline double ip_alg(const Lattice& lat, const AlgebraField<G>& x,
                     const AlgebraField<G>& y) {
  const double w = lat.cell_volume();
  return w * parallel_sum(static_cast<long>(x.size()),
                          [&](long i) { return G::inner(x[i], y[i]); });
}

template <class G>
inline double ip_tan(const Lattice& lat, const Tangent<G>& x, const Tangent<G>& y) {
  const double w = lat.cell_volume();
  double s = parallel_sum(static_cast<long>(x.a.size()),
                          [&](long i) { return G::inner(x.a[i], y.a[i]); });
  s += parallel_sum(static_cast<long>(x.phi.size()),
                    [&](long i) { return hdot(x.phi[i], y.phi[i]).real(); });
  return w * s;
}

template <class G>
inline double l2_norm_alg(const Lattice& lat, const AlgebraField<G>& x) {
  return std::sqrt(std::max(0.0, ip_alg<G>(lat, x, x)));
}

template <class G>
inline double l2_norm_tan(const Lattice& lat, const Tangent<G>& x) {
  return std::sqrt(std::max(0.0, ip_tan<G>(lat, x, x)));
}

// ---------------------------------------------------------------------------
// gauge action: U_mu(x) <- u(x)^{-1} U_mu(x) u(x+mu), Phi <- rho(u^{-1}) Phi

template <class G>
inline Configuration<G> gauge_apply(const G& g, const Lattice& lat,
                                    const GaugeTransform<G>& t,
                                    const Configuration<G>& cfg) {
  Configuration<G> out;
  out.u.u.resize(lat.n_links());
  out.phi.phi.resize(lat.n_sites());
  parallel_for(lat.n_links(), [&](long e) {
    const long x = lat.link_site(e);
    const long y = lat.shift(x, lat.link_dir(e), +1);
    out.u.u[e] = dagger(t.g[x]) * cfg.u.u[e] * t.g[y];
  });
  parallel_for(lat.n_sites(), [&](long x) {
    out.phi.phi[x] = g.rep_group(dagger(t.g[x]), cfg.phi.phi[x]);
  });
  return out;
}

// Sitewise composition (u.v)(x) = u(x) v(x); gauge_apply(v, gauge_apply(u, .))
// equals gauge_apply(compose(u, v), .).
template <class G>
inline GaugeTransform<G> gauge_compose(const GaugeTransform<G>& u,
                                       const GaugeTransform<G>& v) {
  GaugeTransform<G> w = u;
  for (size_t x = 0; x < w.g.size(); ++x) w.g[x] = u.g[x] * v.g[x];
  return w;
}

// ---------------------------------------------------------------------------
// plaquette holonomy and field strength F_p = log(P_p)/h^2

template <class G>
inline typename G::GMat plaquette_holonomy(const Lattice& lat,
                                           const Connection<G>& u, long p) {
  auto links = lat.plaquette_links(p);
  typename G::GMat m = G::GMat::identity();
  for (const auto& ol : links) {
    m = ol.forward ? m * u.u[ol.link] : m * dagger(u.u[ol.link]);
  }
  return m;
}

template <class G>
inline typename G::AMat field_strength(const Lattice& lat, const Connection<G>& u,
                                       long p) {
  const double h2 = lat.h() * lat.h();
  return (1.0 / h2) * G::log_map(plaquette_holonomy(lat, u, p));
}

// ---------------------------------------------------------------------------
// covariant difference of the matter field:
//   (D_mu Phi)(x) = (rho(U_mu(x)) Phi(x+mu) - Phi(x)) / h

template <class G>
inline typename G::RVec cov_diff_site(const G& g, const Lattice& lat,
                                      const Configuration<G>& cfg, long x, int mu) {
  const long e = lat.link_index(x, mu);
  const long y = lat.shift(x, mu, +1);
  return (1.0 / lat.h()) *
         (g.rep_group(cfg.u.u[e], cfg.phi.phi[y]) - cfg.phi.phi[x]);
}

template <class G>
inline std::vector<typename G::RVec> cov_diff(const G& g, const Lattice& lat,
                                              const Configuration<G>& cfg, int mu) {
  std::vector<typename G::RVec> out(lat.n_sites());
  parallel_for(lat.n_sites(),
               [&](long x) { out[x] = cov_diff_site(g, lat, cfg, x, mu); });
  return out;
}

// ---------------------------------------------------------------------------
// d_A on 0-forms and its exact adjoint.
//
// d0 is the differential of the lattice gauge action at the identity in the
// right trivialization:
//   (d_A xi)_e = (Ad_{U_e} xi(x+mu) - xi(x)) / h   for e = (x, mu),
// which reduces to the forward difference on a trivial connection and
// converges to the continuum d_A xi = d xi + [A, xi].

template <class G>
inline AlgebraField<G> d0(const Lattice& lat, const Connection<G>& u,
                          const AlgebraField<G>& xi) {
  AlgebraField<G> out(lat.n_links());
  const double inv_h = 1.0 / lat.h();
  parallel_for(lat.n_links(), [&](long e) {
    const long x = lat.link_site(e);
    const long y = lat.shift(x, lat.link_dir(e), +1);
    out[e] = inv_h * (G::ad_action(u.u[e], xi[y]) - xi[x]);
  });
  return out;
}

// Adjoint under the discrete L^2 products:
//   (d0^* a)(y) = (1/h) sum_mu ( Ad_{U_mu(y-mu)^{-1}} a_(y-mu,mu) - a_(y,mu) ).
template <class G>
inline AlgebraField<G> d0_star(const Lattice& lat, const Connection<G>& u,
                               const AlgebraField<G>& a) {
  AlgebraField<G> out(lat.n_sites());
  const double inv_h = 1.0 / lat.h();
  parallel_for(lat.n_sites(), [&](long y) {
    typename G::AMat s;
    for (int mu = 0; mu < lat.dim(); ++mu) {
      const long xm = lat.shift(y, mu, -1);
      const long eb = lat.link_index(xm, mu);
      const long ef = lat.link_index(y, mu);
      s += G::ad_action(dagger(u.u[eb]), a[eb]);
      s -= a[ef];
    }
    out[y] = inv_h * s;
  });
  return out;
}

// ---------------------------------------------------------------------------
// relative difference (A,Phi) - (A0,Phi0) in the right trivialization:
//   a_e = log(U_e U0_e^{-1}) / h,  phi = Phi - Phi0

template <class G>
inline Tangent<G> relative_difference(const Lattice& lat, const Configuration<G>& x,
                                      const Configuration<G>& x0) {
  Tangent<G> t = Tangent<G>::zero(lat);
  const double inv_h = 1.0 / lat.h();
  for (long e = 0; e < lat.n_links(); ++e) {
    t.a[e] = inv_h * G::log_map(x.u.u[e] * dagger(x0.u.u[e]));
  }
  for (long s = 0; s < lat.n_sites(); ++s) {
    t.phi[s] = x.phi.phi[s] - x0.phi.phi[s];
  }
  return t;
}

// Move a configuration along a tangent: U_e <- exp(eps h a_e) U_e,
// Phi <- Phi + eps phi. Exponential update, so unitarity is exact.
template <class G>
inline Configuration<G> displace(const Lattice& lat, const Configuration<G>& cfg,
                                 const Tangent<G>& t, double eps) {
  Configuration<G> out = cfg;
  const double step = eps * lat.h();
  parallel_for(lat.n_links(), [&](long e) {
    out.u.u[e] = G::exp_map(step * t.a[e]) * cfg.u.u[e];
  });
  parallel_for(lat.n_sites(),
               [&](long s) { out.phi.phi[s] = cfg.phi.phi[s] + eps * t.phi[s]; });
  return out;
}

// ---------------------------------------------------------------------------
// random fields (deterministic per seed; per-object streams)

template <class G>
inline AlgebraField<G> random_algebra_field(const G&, const Lattice& lat,
                                            CounterRng rng, double amplitude) {
  AlgebraField<G> f(lat.n_sites());
  for (long x = 0; x < lat.n_sites(); ++x) {
    auto r = rng.stream(static_cast<std::uint64_t>(x));
    std::array<double, G::alg_dim> c{};
    for (int k = 0; k < G::alg_dim; ++k) c[k] = amplitude * r.next_gaussian();
    f[x] = algebra_from_coeffs<G>(c);
  }
  return f;
}

template <class G>
inline Tangent<G> random_tangent(const G& g, const Lattice& lat, CounterRng rng,
                                 double amplitude) {
  Tangent<G> t = Tangent<G>::zero(lat);
  for (long e = 0; e < lat.n_links(); ++e) {
    auto r = rng.stream(0x10000000ULL + static_cast<std::uint64_t>(e));
    std::array<double, G::alg_dim> c{};
    for (int k = 0; k < G::alg_dim; ++k) c[k] = amplitude * r.next_gaussian();
    t.a[e] = algebra_from_coeffs<G>(c);
  }
  for (long x = 0; x < lat.n_sites(); ++x) {
    auto r = rng.stream(0x20000000ULL + static_cast<std::uint64_t>(x));
    for (int k = 0; k < G::N; ++k)
      t.phi[x][k] = cplx(amplitude * r.next_gaussian(), amplitude * r.next_gaussian());
  }
  return t;
}

template <class G>
inline Connection<G> random_connection(const G& g, const Lattice& lat,
                                       CounterRng rng, double amplitude,
                                       bool balanced = false) {
  Connection<G> c = Connection<G>::trivial(lat);
  std::vector<typename G::AMat> xi(lat.n_links());
  for (long e = 0; e < lat.n_links(); ++e) {
    auto r = rng.stream(0x30000000ULL + static_cast<std::uint64_t>(e));
    std::array<double, G::alg_dim> co{};
    for (int k = 0; k < G::alg_dim; ++k) co[k] = amplitude * r.next_gaussian();
    xi[e] = algebra_from_coeffs<G>(co);
  }
  if (balanced) {
    // remove the lattice-average one-form per direction; keeps the start in
    // the trivial-holonomy sector (no accidental Wilson lines)
    for (int mu = 0; mu < lat.dim(); ++mu) {
      typename G::AMat mean;
      for (long x = 0; x < lat.n_sites(); ++x) mean += xi[lat.link_index(x, mu)];
      mean *= 1.0 / static_cast<double>(lat.n_sites());
      for (long x = 0; x < lat.n_sites(); ++x) xi[lat.link_index(x, mu)] -= mean;
    }
  }
  for (long e = 0; e < lat.n_links(); ++e) c.u[e] = G::exp_map(xi[e]);
  return c;
}

template <class G>
inline Section<G> random_section(const G& g, const Lattice& lat, CounterRng rng,
                                 double amplitude) {
  Section<G> s = Section<G>::zero(lat);
  for (long x = 0; x < lat.n_sites(); ++x) {
    auto r = rng.stream(0x40000000ULL + static_cast<std::uint64_t>(x));
    for (int k = 0; k < G::N; ++k)
      s.phi[x][k] = cplx(amplitude * r.next_gaussian(), amplitude * r.next_gaussian());
  }
  return s;
}

template <class G>
inline GaugeTransform<G> random_gauge_transform(const G& g, const Lattice& lat,
                                                CounterRng rng, double amplitude) {
  GaugeTransform<G> t = GaugeTransform<G>::identity(lat);
  for (long x = 0; x < lat.n_sites(); ++x) {
    auto r = rng.stream(0x50000000ULL + static_cast<std::uint64_t>(x));
    std::array<double, G::alg_dim> c{};
    for (int k = 0; k < G::alg_dim; ++k) c[k] = amplitude * r.next_gaussian();
    t.g[x] = G::exp_map(algebra_from_coeffs<G>(c));
  }
  return t;
}

// U(1) configuration with uniform plaquette flux 2 pi Q / (N0 N1) on a 2-torus.
// All plaquette phases are exactly equal; total flux is 2 pi Q.
inline Connection<U1Group> constant_flux_connection(const Lattice& lat, int q) {
  if (lat.dim() != 2)
    throw DimensionMismatchError("constant flux connection requires d = 2");
  Connection<U1Group> c = Connection<U1Group>::trivial(lat);
  const int n0 = lat.extent(0), n1 = lat.extent(1);
  const double omega = 2.0 * M_PI * q / (static_cast<double>(n0) * n1);
  for (long x = 0; x < lat.n_sites(); ++x) {
    auto co = lat.coords(x);
    CMat<1> ux, uy;
    ux(0, 0) = std::exp(cplx(0.0, -omega * co[1]));
    uy(0, 0) = (co[1] == n1 - 1)
                   ? std::exp(cplx(0.0, 2.0 * M_PI * q * co[0] / n0))
                   : cplx(1.0, 0.0);
    c.u[lat.link_index(x, 0)] = ux;
    c.u[lat.link_index(x, 1)] = uy;
  }
  return c;
}

// ---------------------------------------------------------------------------
// flattening to orthonormal real coordinates (isometric up to the global h^d
// weight), used by the iterative solvers and spectral routines

template <class G>
inline long alg_field_dim(const Lattice& lat) {
  return lat.n_sites() * G::alg_dim;
}

template <class G>
inline long tangent_dim(const Lattice& lat) {
  return lat.n_links() * G::alg_dim + lat.n_sites() * 2 * G::N;
}

template <class G>
inline void flatten_alg(const AlgebraField<G>& f, std::vector<double>& out) {
  out.resize(f.size() * G::alg_dim);
  for (size_t x = 0; x < f.size(); ++x) {
    auto c = algebra_coeffs<G>(f[x]);
    for (int k = 0; k < G::alg_dim; ++k) out[x * G::alg_dim + k] = c[k];
  }
}

template <class G>
inline void unflatten_alg(const std::vector<double>& in, AlgebraField<G>& f) {
  f.resize(in.size() / G::alg_dim);
  for (size_t x = 0; x < f.size(); ++x) {
    std::array<double, G::alg_dim> c{};
    for (int k = 0; k < G::alg_dim; ++k) c[k] = in[x * G::alg_dim + k];
    f[x] = algebra_from_coeffs<G>(c);
  }
}

template <class G>
inline void flatten_tan(const Tangent<G>& t, std::vector<double>& out) {
  const size_t nl = t.a.size(), ns = t.phi.size();
  out.resize(nl * G::alg_dim + ns * 2 * G::N);
  for (size_t e = 0; e < nl; ++e) {
    auto c = algebra_coeffs<G>(t.a[e]);
    for (int k = 0; k < G::alg_dim; ++k) out[e * G::alg_dim + k] = c[k];
  }
  const size_t off = nl * G::alg_dim;
  for (size_t x = 0; x < ns; ++x)
    for (int k = 0; k < G::N; ++k) {
      out[off + (x * G::N + k) * 2] = t.phi[x][k].real();
      out[off + (x * G::N + k) * 2 + 1] = t.phi[x][k].imag();
    }
}

template <class G>
inline void unflatten_tan(const Lattice& lat, const std::vector<double>& in,
                          Tangent<G>& t) {
  t = Tangent<G>::zero(lat);
  const size_t nl = t.a.size(), ns = t.phi.size();
  for (size_t e = 0; e < nl; ++e) {
    std::array<double, G::alg_dim> c{};
    for (int k = 0; k < G::alg_dim; ++k) c[k] = in[e * G::alg_dim + k];
    t.a[e] = algebra_from_coeffs<G>(c);
  }
  const size_t off = nl * G::alg_dim;
  for (size_t x = 0; x < ns; ++x)
    for (int k = 0; k < G::N; ++k)
      t.phi[x][k] = cplx(in[off + (x * G::N + k) * 2],
                         in[off + (x * G::N + k) * 2 + 1]);
}

}  // namespace gaugeflow
