#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gaugeflow/fields.hpp"
#include "gaugeflow/functionals.hpp"
#include "gaugeflow/gaugefix.hpp"
#include "gaugeflow/hodge.hpp"

namespace gaugeflow {

// Property suites behind the `verify` subcommand and the acceptance gate.
// Each suite returns its worst observed defect; the thresholds encode the
// contract: exact gauge invariance, the gradient as the literal derivative
// of the energy, a symmetric second variation, constructed adjoints and a
// projector that is idempotent and annihilates gauge directions.

struct VerifyReport {
  std::map<std::string, double> worst;  // suite -> worst defect
  std::map<std::string, double> threshold;
  std::vector<std::string> failed;
  bool pass = true;

  void add(const std::string& suite, double defect, double tol) {
    worst[suite] = defect;
    threshold[suite] = tol;
    if (!(defect <= tol)) {
      failed.push_back(suite);
      pass = false;
    }
  }
};

namespace detail {

template <class G>
inline std::vector<FunctionalSpec> verify_kinds(const G& g, const Lattice& lat) {
  std::vector<FunctionalSpec> kinds;
  kinds.push_back(FunctionalSpec::pure_ym());
  kinds.push_back(FunctionalSpec::boson_constant(lat, 0.35, 0.15));
  if (G::N == 1 && g.rep_charge == 1 && lat.dim() == 2)
    kinds.push_back(FunctionalSpec::ymh(0.8));
  return kinds;
}

template <class G>
inline Configuration<G> verify_config(const G& g, const Lattice& lat, CounterRng rng,
                                      double amp) {
  Configuration<G> cfg;
  cfg.u = random_connection(g, lat, rng.stream(1), amp);
  cfg.phi = random_section(g, lat, rng.stream(2), amp);
  return cfg;
}

// Richardson-extrapolated central difference of eps -> f(eps)
template <class Fn>
inline double central_derivative(const Fn& f, double eps) {
  const double d1 = (f(eps) - f(-eps)) / (2.0 * eps);
  const double d2 = (f(0.5 * eps) - f(-0.5 * eps)) / eps;
  return (4.0 * d2 - d1) / 3.0;
}

}  // namespace detail

template <class G>
inline double suite_gauge_invariance(const G& g, const Lattice& lat, int trials,
                                     std::uint64_t seed) {
  double worst = 0.0;
  CounterRng rng(seed);
  for (const auto& spec : detail::verify_kinds(g, lat)) {
    for (int i = 0; i < trials; ++i) {
      auto r = rng.stream(1000 + i);
      const auto cfg = detail::verify_config(g, lat, r.stream(0), 0.4);
      const auto u = random_gauge_transform(g, lat, r.stream(1), 0.7);
      const double e0 = energy(g, lat, spec, cfg);
      const double e1 = energy(g, lat, spec, gauge_apply(g, lat, u, cfg));
      worst = std::max(worst, std::abs(e1 - e0) / (1.0 + std::abs(e0)));
    }
  }
  return worst;
}

template <class G>
inline double suite_gradient_fd(const G& g, const Lattice& lat, int configs,
                                int directions, std::uint64_t seed) {
  double worst = 0.0;
  CounterRng rng(seed);
  for (const auto& spec : detail::verify_kinds(g, lat)) {
    for (int i = 0; i < configs; ++i) {
      auto r = rng.stream(2000 + i);
      const auto cfg = detail::verify_config(g, lat, r.stream(0), 0.3);
      const Tangent<G> grad = gradient(g, lat, spec, cfg);
      for (int j = 0; j < directions; ++j) {
        Tangent<G> t = random_tangent(g, lat, r.stream(10 + j), 1.0);
        const double tn = l2_norm_tan(lat, t);
        t *= 1.0 / tn;
        const double analytic = ip_tan(lat, grad, t);
        const double fd = detail::central_derivative(
            [&](double eps) {
              return energy(g, lat, spec, displace(lat, cfg, t, eps));
            },
            1e-4);
        worst = std::max(worst, std::abs(analytic - fd));
      }
    }
  }
  return worst;
}

template <class G>
inline std::pair<double, double> suite_hessian(const G& g, const Lattice& lat,
                                               int trials, std::uint64_t seed) {
  double worst_sym = 0.0, worst_fd = 0.0;
  CounterRng rng(seed);
  for (const auto& spec : detail::verify_kinds(g, lat)) {
    for (int i = 0; i < trials; ++i) {
      auto r = rng.stream(3000 + i);
      const auto cfg = detail::verify_config(g, lat, r.stream(0), 0.3);
      Tangent<G> t1 = random_tangent(g, lat, r.stream(1), 1.0);
      Tangent<G> t2 = random_tangent(g, lat, r.stream(2), 1.0);
      t1 *= 1.0 / l2_norm_tan(lat, t1);
      t2 *= 1.0 / l2_norm_tan(lat, t2);
      const Tangent<G> h1 = hess_vec(g, lat, spec, cfg, t1);
      const Tangent<G> h2 = hess_vec(g, lat, spec, cfg, t2);
      const double h12 = ip_tan(lat, h1, t2);
      const double h21 = ip_tan(lat, h2, t1);
      const double scale = std::max({l2_norm_tan(lat, h1), l2_norm_tan(lat, h2), 1e-30});
      worst_sym = std::max(worst_sym, std::abs(h12 - h21) / scale);

      // symmetrized central difference of the gradient
      auto pairing = [&](const Tangent<G>& dir, const Tangent<G>& probe) {
        return detail::central_derivative(
            [&](double eps) {
              return ip_tan(lat, gradient(g, lat, spec, displace(lat, cfg, dir, eps)),
                            probe);
            },
            1e-4);
      };
      const double fd = 0.5 * (pairing(t1, t2) + pairing(t2, t1));
      worst_fd = std::max(worst_fd, std::abs(h12 - fd) / scale);
    }
  }
  return {worst_sym, worst_fd};
}

template <class G>
inline double suite_adjointness(const G& g, const Lattice& lat, int trials,
                                std::uint64_t seed) {
  double worst = 0.0;
  CounterRng rng(seed);
  for (int i = 0; i < trials; ++i) {
    auto r = rng.stream(4000 + i);
    const auto cfg = detail::verify_config(g, lat, r.stream(0), 0.5);
    const auto xi = random_algebra_field(g, lat, r.stream(1), 1.0);
    const auto t = random_tangent(g, lat, r.stream(2), 1.0);
    // 0-form adjoint
    {
      const auto dxi = d0<G>(lat, cfg.u, xi);
      const auto dsa = d0_star<G>(lat, cfg.u, t.a);
      double lhs = 0.0;
      const double w = lat.cell_volume();
      for (long e = 0; e < lat.n_links(); ++e) lhs += G::inner(dxi[e], t.a[e]);
      lhs *= w;
      const double rhs = ip_alg<G>(lat, xi, dsa);
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
    // pair adjoint
    {
      const auto dxi = pair_d(g, lat, cfg, xi);
      const auto dst = pair_dstar(g, lat, cfg, t);
      const double lhs = ip_tan(lat, dxi, t);
      const double rhs = ip_alg<G>(lat, xi, dst);
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
  }
  return worst;
}

template <class G>
inline double suite_projector(const G& g, const Lattice& lat, int trials,
                              std::uint64_t seed) {
  double worst = 0.0;
  CounterRng rng(seed);
  const auto cfg = detail::verify_config(g, lat, rng.stream(0), 0.3);
  SliceProjector<G> proj(g, lat, cfg);
  for (int i = 0; i < trials; ++i) {
    auto r = rng.stream(5000 + i);
    Tangent<G> t = random_tangent(g, lat, r.stream(0), 1.0);
    t *= 1.0 / l2_norm_tan(lat, t);
    const Tangent<G> pt = proj.apply(t);
    const Tangent<G> ppt = proj.apply(pt);
    // slice condition, idempotency, annihilation of gauge directions
    worst = std::max(worst, l2_norm_alg<G>(lat, pair_dstar(g, lat, cfg, pt)));
    worst = std::max(worst, l2_norm_tan<G>(lat, ppt - pt));
    auto xi = random_algebra_field(g, lat, r.stream(1), 1.0);
    const Tangent<G> gauge_dir = pair_d(g, lat, cfg, xi);
    const double gn = l2_norm_tan(lat, gauge_dir);
    if (gn > 0)
      worst = std::max(worst,
                       l2_norm_tan<G>(lat, proj.apply(gauge_dir)) * (1.0 / gn));
  }
  return worst;
}

template <class G>
inline VerifyReport run_verify(const G& g, const Lattice& lat, int trials,
                               std::uint64_t seed) {
  VerifyReport rep;
  rep.add("gauge_invariance", suite_gauge_invariance(g, lat, trials, seed), 1e-12);
  rep.add("gradient", suite_gradient_fd(g, lat, trials, 3, seed + 1), 1e-6);
  auto [sym, fd] = suite_hessian(g, lat, std::max(1, trials / 2), seed + 2);
  rep.add("hessian_symmetry", sym, 1e-8);
  rep.add("hessian_fd", fd, 1e-5);
  rep.add("adjointness", suite_adjointness(g, lat, trials, seed + 3), 1e-12);
  rep.add("projector", suite_projector(g, lat, std::max(1, trials / 2), seed + 4),
          1e-9);
  return rep;
}

}  // namespace gaugeflow
