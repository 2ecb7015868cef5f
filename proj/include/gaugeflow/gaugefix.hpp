#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "gaugeflow/fields.hpp"
#include "gaugeflow/hodge.hpp"
#include "gaugeflow/norms.hpp"
#include "gaugeflow/solvers.hpp"

namespace gaugeflow {

struct GaugeFixReport {
  bool converged = false;
  double final_residual = 0.0;
  int newton_iterations_total = 0;
  int continuation_steps = 0;
  // |u(A,Phi)-(A0,Phi0)|_{W^{1,2}} / |(A,Phi)-(A0,Phi0)|_{W^{1,2}},
  // the measured counterpart of the 2N factor in the continuity argument
  double norm_ratio = 0.0;
  std::optional<double> empirical_zeta;
};

// Residual of the relative Coulomb gauge condition
// d_{A0,Phi0}^*((A,Phi) - (A0,Phi0)).
template <class G>
inline AlgebraField<G> coulomb_residual(const G& g, const Lattice& lat,
                                        const Configuration<G>& cfg,
                                        const Configuration<G>& ref) {
  return pair_dstar(g, lat, ref, relative_difference(lat, cfg, ref));
}

namespace detail {

template <class G>
struct GaugeFixWorkspace {
  std::vector<std::vector<double>> ref_kernel;  // Ker Delta_{A0,Phi0}

  GaugeFixWorkspace(const G& g, const Lattice& lat, const Configuration<G>& ref) {
    LinOp lap = make_pair_laplacian_op(g, lat, ref);
    ref_kernel = kernel_basis(lap, G::alg_dim);
  }
};

template <class G>
inline double w12_norm_to_ref(const G&, const Lattice& lat,
                              const Configuration<G>& cfg,
                              const Configuration<G>& ref) {
  return sobolev_norm(lat, relative_difference(lat, cfg, ref), NormSpec{1, 2.0});
}

}  // namespace detail

// Newton corrector for the gauge-fixing equation. Seeks u = product of
// exp(chi) steps, each chi orthogonal to Ker Delta_{A0,Phi0}, such that the
// Coulomb residual of u(cfg) relative to ref drops below tol. The linear
// step inverts d_{A0,Phi0}^* d_{A,Phi} at the current configuration.
template <class G>
inline std::pair<GaugeTransform<G>, GaugeFixReport> newton_fix(
    const G& g, const Lattice& lat, const Configuration<G>& cfg,
    const Configuration<G>& ref, double tol, int max_newton = 30,
    const detail::GaugeFixWorkspace<G>* ws = nullptr) {
  std::optional<detail::GaugeFixWorkspace<G>> own;
  if (ws == nullptr) {
    own.emplace(g, lat, ref);
    ws = &*own;
  }

  GaugeTransform<G> u = GaugeTransform<G>::identity(lat);
  Configuration<G> cur = cfg;
  GaugeFixReport rep;

  const double denom = detail::w12_norm_to_ref(g, lat, cfg, ref);

  for (int it = 0; it <= max_newton; ++it) {
    AlgebraField<G> r = coulomb_residual(g, lat, cur, ref);
    rep.final_residual = l2_norm_alg<G>(lat, r);
    if (rep.final_residual <= tol) {
      rep.converged = true;
      const double num = detail::w12_norm_to_ref(g, lat, cur, ref);
      rep.norm_ratio = denom > 0 ? num / denom : (num > 0 ? HUGE_VAL : 1.0);
      return {u, rep};
    }
    if (it == max_newton) break;

    LinOp op = make_perturbed_op(g, lat, ref, cur);
    op.kernel = ws->ref_kernel;
    std::vector<double> rhs;
    flatten_alg<G>(r, rhs);
    vecops::scale(rhs, -1.0);
    std::vector<double> chi_flat = nonsym_solve(op, std::move(rhs), 1e-12, 20000);
    AlgebraField<G> chi;
    unflatten_alg<G>(chi_flat, chi);

    GaugeTransform<G> step = GaugeTransform<G>::identity(lat);
    for (long x = 0; x < lat.n_sites(); ++x) step.g[x] = G::exp_map(chi[x]);
    cur = gauge_apply(g, lat, step, cur);
    u = gauge_compose(u, step);
    ++rep.newton_iterations_total;
  }
  throw NoConvergenceError("newton_fix: residual " +
                               std::to_string(rep.final_residual) +
                               " after max Newton iterations",
                           rep.final_residual);
}

// Method of continuity along the path U_t = exp(t h a) U0, Phi_t = Phi0 + t phi,
// with a the relative difference of the target. Adaptive in t: the step
// halves when the Newton corrector leaves its basin and doubles after two
// consecutive single-iteration successes.
template <class G>
inline std::pair<GaugeTransform<G>, GaugeFixReport> continuation_fix(
    const G& g, const Lattice& lat, const Configuration<G>& cfg,
    const Configuration<G>& ref, double tol, int max_newton = 12,
    double initial_dt = 1.0, double min_dt = 1e-6) {
  detail::GaugeFixWorkspace<G> ws(g, lat, ref);
  const Tangent<G> path = relative_difference(lat, cfg, ref);
  const double denom = detail::w12_norm_to_ref(g, lat, cfg, ref);

  GaugeTransform<G> u = GaugeTransform<G>::identity(lat);
  GaugeFixReport rep;
  double t = 0.0, dt = initial_dt;
  int easy_streak = 0;

  while (t < 1.0) {
    const double target = std::min(1.0, t + dt);
    bool ok = false;
    try {
      Configuration<G> path_cfg = displace(lat, ref, path, target);
      Configuration<G> candidate = gauge_apply(g, lat, u, path_cfg);
      auto [step_u, step_rep] =
          newton_fix(g, lat, candidate, ref, tol, max_newton, &ws);
      u = gauge_compose(u, step_u);
      rep.newton_iterations_total += step_rep.newton_iterations_total;
      rep.final_residual = step_rep.final_residual;
      ++rep.continuation_steps;
      t = target;
      ok = true;
      easy_streak = (step_rep.newton_iterations_total <= 1) ? easy_streak + 1 : 0;
      if (easy_streak >= 2) {
        dt *= 2.0;
        easy_streak = 0;
      }
    } catch (const NoConvergenceError&) {
      ok = false;
    } catch (const LogBranchError&) {
      ok = false;
    }
    if (!ok) {
      dt *= 0.5;
      if (dt < min_dt)
        throw NoConvergenceError(
            "continuation_fix: step underflow, configuration outside the "
            "empirical zeta ball",
            rep.final_residual);
    }
  }

  rep.converged = true;
  Configuration<G> fixed = gauge_apply(g, lat, u, cfg);
  rep.final_residual =
      l2_norm_alg<G>(lat, coulomb_residual(g, lat, fixed, ref));
  const double num = detail::w12_norm_to_ref(g, lat, fixed, ref);
  rep.norm_ratio = denom > 0 ? num / denom : (num > 0 ? HUGE_VAL : 1.0);
  return {u, rep};
}

// Empirical zeta: bisect on the perturbation amplitude along a fixed tangent
// direction until continuation fails; returns the W^{1,2} size of the last
// success and the first failure.
template <class G>
struct ZetaEstimate {
  double last_success = 0.0;
  double first_failure = 0.0;
};

template <class G>
inline ZetaEstimate<G> estimate_zeta(const G& g, const Lattice& lat,
                                     const Configuration<G>& ref,
                                     const Tangent<G>& direction, double tol,
                                     double start_amplitude = 0.05,
                                     int bisections = 8) {
  auto attempt = [&](double amp) -> std::optional<double> {
    Configuration<G> cfg = displace(lat, ref, direction, amp);
    try {
      const double size = detail::w12_norm_to_ref(g, lat, cfg, ref);
      // coarse step floor: a failure here is the bisection signal, there is
      // no need to grind the continuation step down to the production floor
      continuation_fix(g, lat, cfg, ref, tol, 8, 1.0, 1e-2);
      return size;
    } catch (const NoConvergenceError&) {
      return std::nullopt;
    } catch (const LogBranchError&) {
      return std::nullopt;
    }
  };

  double lo = 0.0, lo_size = 0.0;
  double hi = start_amplitude;
  std::optional<double> hi_size;
  // grow until failure
  for (int i = 0; i < 40; ++i) {
    auto s = attempt(hi);
    if (!s) break;
    lo = hi;
    lo_size = *s;
    hi *= 2.0;
  }
  // measure the failing size once for reporting
  {
    Configuration<G> cfg = displace(lat, ref, direction, hi);
    try {
      hi_size = detail::w12_norm_to_ref(g, lat, cfg, ref);
    } catch (const LogBranchError&) {
      hi_size = std::nullopt;
    }
  }
  for (int i = 0; i < bisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    auto s = attempt(mid);
    if (s) {
      lo = mid;
      lo_size = *s;
    } else {
      hi = mid;
      Configuration<G> cfg = displace(lat, ref, direction, mid);
      try {
        hi_size = detail::w12_norm_to_ref(g, lat, cfg, ref);
      } catch (const LogBranchError&) {
      }
    }
  }
  ZetaEstimate<G> z;
  z.last_success = lo_size;
  z.first_failure = hi_size.value_or(0.0);
  return z;
}

}  // namespace gaugeflow
