#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gaugeflow/fields.hpp"
#include "gaugeflow/functionals.hpp"
#include "gaugeflow/norms.hpp"

namespace gaugeflow {

enum class Integrator { Euler, RK3 };

struct FlowParams {
  double dt0 = 0.05;
  Integrator integrator = Integrator::RK3;
  bool adaptive = true;
  double grad_tol = 1e-10;
  double t_max = 1e4;
  int sample_stride = 1;
  int checkpoint_stride = 0;  // 0: no intermediate checkpoints
  // periodic re-gauge-fixing during long flows; off by default since the
  // recorded energies and gradient norms are gauge invariant anyway
  int regauge_stride = 0;

  void validate() const {
    if (!(dt0 > 0)) throw ConfigError("flow: dt0 must be positive");
    if (!(grad_tol > 0)) throw ConfigError("flow: grad_tol must be positive");
    if (sample_stride < 1) throw ConfigError("flow: sample_stride must be >= 1");
    if (regauge_stride < 0) throw ConfigError("flow: regauge_stride must be >= 0");
  }
};

struct FlowSample {
  double t = 0.0;
  double energy = 0.0;
  double grad_l2 = 0.0;
  double grad_wneg1 = 0.0;
  double dist_to_final = 0.0;  // W^{1,2} distance, filled after the run
};

template <class G>
struct Trajectory {
  std::vector<FlowSample> samples;
  std::vector<Configuration<G>> sample_configs;  // parallel to samples
  Configuration<G> final_config;
  std::string termination;  // "converged" | "t_max"
  long steps_accepted = 0;
  long steps_rejected = 0;
  double path_length = 0.0;  // sum |gradient| dt over accepted steps
};

namespace detail {

// right-trivialized flow velocity: minus the gradient, with the link part in
// group-twist units (the h factor mediating exp(h a) U)
template <class G>
struct FlowVelocity {
  std::vector<typename G::AMat> link;  // -h * grad.a
  std::vector<typename G::RVec> site;  // -grad.phi
};

template <class G>
inline FlowVelocity<G> velocity(const G& g, const Lattice& lat,
                                const FunctionalSpec& spec,
                                const Configuration<G>& cfg) {
  Tangent<G> grad = gradient(g, lat, spec, cfg);
  FlowVelocity<G> v;
  v.link.resize(lat.n_links());
  v.site.resize(lat.n_sites());
  const double h = lat.h();
  for (long e = 0; e < lat.n_links(); ++e) v.link[e] = (-h) * grad.a[e];
  for (long x = 0; x < lat.n_sites(); ++x) v.site[x] = -grad.phi[x];
  return v;
}

template <class G>
inline Configuration<G> move_by(const Lattice& lat, const Configuration<G>& cfg,
                                const FlowVelocity<G>& v, double dt) {
  Configuration<G> out = cfg;
  parallel_for(lat.n_links(), [&](long e) {
    out.u.u[e] = G::exp_map(dt * v.link[e]) * cfg.u.u[e];
  });
  parallel_for(lat.n_sites(),
               [&](long x) { out.phi.phi[x] = cfg.phi.phi[x] + dt * v.site[x]; });
  return out;
}

template <class G>
inline FlowVelocity<G> combine(const Lattice& lat,
                               std::initializer_list<std::pair<double, const FlowVelocity<G>*>> terms) {
  FlowVelocity<G> out;
  out.link.assign(lat.n_links(), G::AMat::zero());
  out.site.assign(lat.n_sites(), G::RVec::zero());
  for (const auto& [c, v] : terms) {
    for (long e = 0; e < lat.n_links(); ++e) out.link[e] += c * v->link[e];
    for (long x = 0; x < lat.n_sites(); ++x) out.site[x] += c * v->site[x];
  }
  return out;
}

// dexpinv truncated after one commutator; enough for third order
template <class G>
inline FlowVelocity<G> dexpinv1(const Lattice& lat, const FlowVelocity<G>& theta,
                                const FlowVelocity<G>& v) {
  FlowVelocity<G> out = v;
  if (G::alg_dim > 1) {
    for (long e = 0; e < lat.n_links(); ++e)
      out.link[e] -= 0.5 * commutator(theta.link[e], v.link[e]);
  }
  return out;
}

}  // namespace detail

// One integrator step of the gradient flow (U', Phi') <- step(U, Phi; dt).
// Both integrators update links by group exponentials, so unitarity is exact.
// RK3 is the three-stage Munthe-Kaas form of Kutta's classical tableau.
template <class G>
inline Configuration<G> flow_step(const G& g, const Lattice& lat,
                                  const FunctionalSpec& spec,
                                  const Configuration<G>& cfg, double dt,
                                  Integrator integrator) {
  using detail::combine;
  using detail::dexpinv1;
  using detail::move_by;
  using detail::velocity;

  if (integrator == Integrator::Euler) {
    auto k1 = velocity(g, lat, spec, cfg);
    return move_by(lat, cfg, k1, dt);
  }

  auto k1 = velocity(g, lat, spec, cfg);
  auto theta2 = combine<G>(lat, {{0.5 * dt, &k1}});
  auto k2raw = velocity(g, lat, spec, move_by(lat, cfg, theta2, 1.0));
  auto k2 = dexpinv1<G>(lat, theta2, k2raw);
  auto theta3 = combine<G>(lat, {{-dt, &k1}, {2.0 * dt, &k2}});
  auto k3raw = velocity(g, lat, spec, move_by(lat, cfg, theta3, 1.0));
  auto k3 = dexpinv1<G>(lat, theta3, k3raw);
  auto theta = combine<G>(lat, {{dt / 6.0, &k1}, {2.0 * dt / 3.0, &k2}, {dt / 6.0, &k3}});
  return move_by(lat, cfg, theta, 1.0);
}

// Gradient-flow run with energy-monotone adaptivity and trajectory recording.
// Optional checkpoint callback fires every checkpoint_stride accepted steps;
// the optional regauge hook may replace the state by a gauge-equivalent one
// every regauge_stride accepted steps (returns false to leave it unchanged).
template <class G, class CheckpointFn, class RegaugeFn>
inline Trajectory<G> flow_run(const G& g, const Lattice& lat,
                              const FunctionalSpec& spec, Configuration<G> cfg,
                              const FlowParams& params,
                              const CheckpointFn& on_checkpoint,
                              const RegaugeFn& regauge) {
  params.validate();
  Trajectory<G> traj;
  double t = 0.0;
  double dt = params.dt0;
  double e = energy(g, lat, spec, cfg);
  Tangent<G> grad = gradient(g, lat, spec, cfg);
  double gn = l2_norm_tan(lat, grad);

  auto record = [&](double tt, double ee, double gg, const Tangent<G>& gr) {
    FlowSample s;
    s.t = tt;
    s.energy = ee;
    s.grad_l2 = gg;
    s.grad_wneg1 = dual_norm_wneg1(lat, gr);
    traj.samples.push_back(s);
    traj.sample_configs.push_back(cfg);
  };

  record(t, e, gn, grad);
  long accepted_since_sample = 0;
  long accepted_since_checkpoint = 0;
  int accept_streak = 0;
  // stall watchdog: energy decrease can bottom out at the resolution of E
  // itself (pinned minima), leaving the step controller in a micro-step
  // limit cycle; detect and terminate honestly instead of spinning
  long attempts = 0, marker_attempts = 0;
  double marker_energy = e;
  bool stalled = false;

  while (gn > params.grad_tol && t < params.t_max) {
    ++attempts;
    if (params.adaptive && attempts - marker_attempts >= 256) {
      if (dt < 1e-6 &&
          marker_energy - e <= 1e-13 * (1.0 + std::abs(e))) {
        stalled = true;
        break;
      }
      marker_attempts = attempts;
      marker_energy = e;
    }
    Configuration<G> next = flow_step(g, lat, spec, cfg, dt, params.integrator);
    const double e_next = energy(g, lat, spec, next);
    Tangent<G> grad_next = gradient(g, lat, spec, next);
    const double gn_next = l2_norm_tan(lat, grad_next);
    if (params.adaptive) {
      // a faithful step must decrease the energy at the dissipation rate
      // -dE/dt = |M|^2; large defects flag an integrator outside its
      // stability region even when the total energy still drops
      const double diss = 0.5 * (gn * gn + gn_next * gn_next);
      const double defect = std::abs((e - e_next) / dt - diss);
      // once the per-step energy drop sits near roundoff of E itself the
      // defect measurement is noise; fall back to plain monotonicity there
      const bool scale_tiny = diss * dt <= 1e-11 * (1.0 + std::abs(e));
      if (e_next > e || (!scale_tiny && defect > 0.25 * diss)) {
        ++traj.steps_rejected;
        accept_streak = 0;
        dt *= 0.5;
        if (dt < 1e-12)
          throw StepUnderflowError("flow_run: step size underflow at t = " +
                                   std::to_string(t));
        continue;
      }
    }
    // accepted
    traj.path_length += gn * dt;  // |du/dt| = |gradient| along the flow
    cfg = std::move(next);
    t += dt;
    e = e_next;
    grad = std::move(grad_next);
    gn = gn_next;
    ++traj.steps_accepted;

    if (params.adaptive && ++accept_streak >= 3) {
      accept_streak = 0;
      dt = std::min(dt * 1.25, 10.0 * params.dt0);
    }
    if (++accepted_since_sample >= params.sample_stride) {
      accepted_since_sample = 0;
      record(t, e, gn, grad);
    }
    if (params.checkpoint_stride > 0 &&
        ++accepted_since_checkpoint >= params.checkpoint_stride) {
      accepted_since_checkpoint = 0;
      on_checkpoint(traj.steps_accepted, cfg);
    }
    if (params.regauge_stride > 0 &&
        traj.steps_accepted % params.regauge_stride == 0) {
      if (regauge(cfg)) {  // gauge-equivalent state: refresh cached data
        e = energy(g, lat, spec, cfg);
        grad = gradient(g, lat, spec, cfg);
        gn = l2_norm_tan(lat, grad);
      }
    }
    // periodic drift cleanup; exponential updates keep this tiny
    if (traj.steps_accepted % 256 == 0) {
      for (auto& u : cfg.u.u) u = G::project_group(u);
    }
  }

  if (traj.samples.empty() || traj.samples.back().t != t) record(t, e, gn, grad);
  traj.final_config = cfg;
  traj.termination =
      (gn <= params.grad_tol) ? "converged" : (stalled ? "stalled" : "t_max");

  // retroactive distances to the final configuration (sigma-window data)
  for (size_t i = 0; i < traj.samples.size(); ++i) {
    try {
      traj.samples[i].dist_to_final = sobolev_norm(
          lat, relative_difference(lat, traj.sample_configs[i], traj.final_config),
          NormSpec{1, 2.0});
    } catch (const LogBranchError&) {
      traj.samples[i].dist_to_final = HUGE_VAL;  // far from the limit
    }
  }
  return traj;
}

template <class G, class CheckpointFn>
inline Trajectory<G> flow_run(const G& g, const Lattice& lat,
                              const FunctionalSpec& spec, Configuration<G> cfg,
                              const FlowParams& params,
                              const CheckpointFn& on_checkpoint) {
  return flow_run(g, lat, spec, std::move(cfg), params, on_checkpoint,
                  [](Configuration<G>&) { return false; });
}

template <class G>
inline Trajectory<G> flow_run(const G& g, const Lattice& lat,
                              const FunctionalSpec& spec, Configuration<G> cfg,
                              const FlowParams& params) {
  return flow_run(g, lat, spec, std::move(cfg), params,
                  [](long, const Configuration<G>&) {});
}

// Worst relative defect of -dE/dt against |M(u)|^2 between consecutive
// samples (trapezoid value of the recorded gradient norms).
template <class G>
inline double dissipation_check(const Trajectory<G>& traj) {
  if (traj.samples.size() < 3)
    throw InsufficientDataError("dissipation_check: need at least 3 samples");
  double worst = 0.0;
  for (size_t i = 0; i + 1 < traj.samples.size(); ++i) {
    const auto& s0 = traj.samples[i];
    const auto& s1 = traj.samples[i + 1];
    const double dt = s1.t - s0.t;
    if (!(dt > 0)) continue;
    const double lhs = -(s1.energy - s0.energy) / dt;
    const double rhs = 0.5 * (s0.grad_l2 * s0.grad_l2 + s1.grad_l2 * s1.grad_l2);
    const double scale = std::max(rhs, 1e-300);
    if (lhs == 0.0 && rhs == 0.0) continue;  // critical trajectory: defect 0
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace gaugeflow
