#include <catch2/catch_amalgamated.hpp>

#include "gaugeflow/flow.hpp"

using namespace gaugeflow;

namespace {

Configuration<U1Group> zero_flux_start(const U1Group& g, const Lattice& lat,
                                       std::uint64_t seed, double amp) {
  // exponential of a random one-form keeps the total flux of every plane zero
  Configuration<U1Group> cfg{Connection<U1Group>::trivial(lat),
                             Section<U1Group>::zero(lat)};
  return displace(lat, cfg, random_tangent(g, lat, CounterRng(seed), amp), 1.0);
}

}  // namespace

TEST_CASE("flow step basics") {
  U1Group g;
  Lattice lat({2, {6, 6}, 1.0});
  const auto spec = FunctionalSpec::pure_ym();

  SECTION("critical points are fixed points of both integrators") {
    Configuration<U1Group> flat{Connection<U1Group>::trivial(lat),
                                Section<U1Group>::zero(lat)};
    for (auto integ : {Integrator::Euler, Integrator::RK3}) {
      const auto next = flow_step(g, lat, spec, flat, 0.05, integ);
      for (long e = 0; e < lat.n_links(); ++e)
        CHECK(frob_norm(next.u.u[e] - flat.u.u[e]) == 0.0);
    }
  }
  SECTION("one euler step decreases the energy") {
    const auto cfg = zero_flux_start(g, lat, 5, 0.3);
    const double e0 = energy(g, lat, spec, cfg);
    const auto next = flow_step(g, lat, spec, cfg, 0.02, Integrator::Euler);
    CHECK(energy(g, lat, spec, next) < e0);
  }
  SECTION("rk3 converges at third order, euler at first") {
    const auto cfg = zero_flux_start(g, lat, 6, 0.25);
    const double t_end = 0.5;
    auto integrate = [&](Integrator integ, double dt) {
      auto state = cfg;
      const int n = static_cast<int>(std::round(t_end / dt));
      for (int i = 0; i < n; ++i) state = flow_step(g, lat, spec, state, dt, integ);
      return energy(g, lat, spec, state);
    };
    const double reference = integrate(Integrator::RK3, 0.003125);
    auto order = [&](Integrator integ) {
      const double err1 = std::abs(integrate(integ, 0.05) - reference);
      const double err2 = std::abs(integrate(integ, 0.025) - reference);
      return err1 / std::max(err2, 1e-300);
    };
    CHECK(order(Integrator::Euler) > 1.6);  // ~2 for first order
    CHECK(order(Integrator::Euler) < 3.0);
    CHECK(order(Integrator::RK3) > 6.0);  // ~8 for third order
  }
}

TEST_CASE("flow run") {
  U1Group g;
  Lattice lat({2, {8, 8}, 1.0});
  const auto spec = FunctionalSpec::pure_ym();

  SECTION("starting at a critical point terminates immediately") {
    Configuration<U1Group> flat{Connection<U1Group>::trivial(lat),
                                Section<U1Group>::zero(lat)};
    FlowParams params;
    params.grad_tol = 1e-10;
    const auto traj = flow_run(g, lat, spec, flat, params);
    CHECK(traj.termination == "converged");
    CHECK(traj.samples.size() == 1);
    CHECK(traj.steps_accepted == 0);
  }
  SECTION("zero-flux start relaxes to a flat connection") {
    FlowParams params;
    params.dt0 = 0.05;
    params.grad_tol = 1e-10;
    params.t_max = 1e4;
    const auto traj = flow_run(g, lat, spec, zero_flux_start(g, lat, 7, 0.2), params);
    CHECK(traj.termination == "converged");
    CHECK(traj.samples.back().energy <= 1e-12);
    // energy is nonincreasing across samples
    for (size_t i = 0; i + 1 < traj.samples.size(); ++i)
      CHECK(traj.samples[i + 1].energy <= traj.samples[i].energy);
    // distances to the final configuration decrease to zero
    CHECK(traj.samples.back().dist_to_final < 1e-8);
  }
  SECTION("energy monotone over a batch of random runs") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      FlowParams params;
      params.dt0 = 0.08;
      params.grad_tol = 1e-8;
      params.t_max = 50.0;
      const auto traj =
          flow_run(g, lat, spec, zero_flux_start(g, lat, 100 + seed, 0.3), params);
      for (size_t i = 0; i + 1 < traj.samples.size(); ++i)
        CHECK(traj.samples[i + 1].energy <= traj.samples[i].energy);
    }
  }
  SECTION("t_max termination is reported") {
    FlowParams params;
    params.dt0 = 0.01;
    params.grad_tol = 1e-14;
    params.t_max = 0.05;
    const auto traj = flow_run(g, lat, spec, zero_flux_start(g, lat, 8, 0.3), params);
    CHECK(traj.termination == "t_max");
  }
}

TEST_CASE("dissipation identity") {
  U1Group g;
  Lattice lat({2, {8, 8}, 1.0});
  const auto spec = FunctionalSpec::pure_ym();
  auto run_with_dt = [&](double dt) {
    FlowParams params;
    params.dt0 = dt;
    params.adaptive = false;
    params.integrator = Integrator::RK3;
    params.grad_tol = 1e-13;
    params.t_max = 2.0;
    params.sample_stride = 1;
    return flow_run(g, lat, spec, zero_flux_start(g, lat, 9, 0.25), params);
  };
  const double defect1 = dissipation_check(run_with_dt(0.02));
  const double defect2 = dissipation_check(run_with_dt(0.01));
  CHECK(defect1 <= 1e-2);
  CHECK(defect2 <= 0.6 * defect1);  // halves or better under refinement

  SECTION("constant trajectory has zero defect") {
    Configuration<U1Group> flat{Connection<U1Group>::trivial(lat),
                                Section<U1Group>::zero(lat)};
    Trajectory<U1Group> traj;
    for (int i = 0; i < 3; ++i) {
      FlowSample s;
      s.t = i * 0.1;
      s.energy = 0.0;
      s.grad_l2 = 0.0;
      traj.samples.push_back(s);
    }
    CHECK(dissipation_check(traj) == 0.0);
  }
  SECTION("too few samples is an error") {
    Trajectory<U1Group> traj;
    traj.samples.resize(2);
    CHECK_THROWS_AS(dissipation_check(traj), InsufficientDataError);
  }
}

TEST_CASE("unitarity is preserved over long runs") {
  SU2Group g;
  Lattice lat({2, {4, 4}, 1.0});
  const auto spec = FunctionalSpec::pure_ym();
  auto cfg = displace(lat,
                      Configuration<SU2Group>{Connection<SU2Group>::trivial(lat),
                                              Section<SU2Group>::zero(lat)},
                      random_tangent(g, lat, CounterRng(11), 0.2), 1.0);
  FlowParams params;
  params.dt0 = 1e-3;
  params.adaptive = false;
  params.grad_tol = 1e-16;
  params.t_max = 10.0;  // 10^4 fixed steps
  params.sample_stride = 1000;
  const auto traj = flow_run(g, lat, spec, cfg, params);
  CHECK(traj.steps_accepted >= 10000);  // t accumulates roundoff, +-1 step
  double worst = 0.0;
  for (const auto& u : traj.final_config.u.u)
    worst = std::max(worst, unitarity_defect(u));
  CHECK(worst < 1e-12);
}

TEST_CASE("flow commutes with a fixed gauge transformation") {
  SU2Group g;
  Lattice lat({2, {4, 4}, 1.0});
  const auto spec = FunctionalSpec::boson_constant(lat, 0.2, 0.05);
  CounterRng rng(13);
  Configuration<SU2Group> cfg{random_connection(g, lat, rng.stream(0), 0.2),
                              random_section(g, lat, rng.stream(1), 0.2)};
  const auto u = random_gauge_transform(g, lat, rng.stream(2), 0.5);
  FlowParams params;
  params.dt0 = 0.02;
  params.adaptive = false;
  params.grad_tol = 1e-16;
  params.t_max = 1.0;
  params.sample_stride = 100;
  const auto a = flow_run(g, lat, spec, gauge_apply(g, lat, u, cfg), params);
  const auto b = flow_run(g, lat, spec, cfg, params);
  const auto moved = gauge_apply(g, lat, u, b.final_config);
  double worst = 0.0;
  for (long e = 0; e < lat.n_links(); ++e)
    worst = std::max(worst, frob_norm(a.final_config.u.u[e] - moved.u.u[e]));
  for (long x = 0; x < lat.n_sites(); ++x)
    worst = std::max(worst,
                     std::sqrt(norm2(a.final_config.phi.phi[x] - moved.phi.phi[x])));
  CHECK(worst < 1e-8);
}

TEST_CASE("flow parameter validation") {
  FlowParams p;
  p.dt0 = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = FlowParams{};
  p.grad_tol = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = FlowParams{};
  p.sample_stride = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
