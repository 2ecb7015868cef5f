#pragma once

#include <string>
#include <utility>

#include "gaugeflow/checkpoint.hpp"
#include "gaugeflow/config.hpp"
#include "gaugeflow/fields.hpp"

namespace gaugeflow {

// Dispatch a callable over the configured structure group.
template <class Fn>
inline auto with_group(const GroupKind& kind, Fn&& fn) {
  if (kind.variant == GroupKind::U1) {
    U1Group g{kind.rep_charge};
    return fn(g);
  }
  SU2Group g{};
  g.rep_charge = kind.rep_charge;
  return fn(g);
}

// Start configuration described by the init.* keys.
template <class G>
inline Configuration<G> make_initial_config(const ExperimentConfig& c, const G& g,
                                            const Lattice& lat) {
  Configuration<G> cfg{Connection<G>::trivial(lat), Section<G>::zero(lat)};
  CounterRng rng(c.seed);
  // init.mode shapes the links only; matter comes from init.phi
  if (c.init_mode == "random") {
    cfg.u = random_connection(g, lat, rng.stream(1), c.init_amplitude, c.init_balance);
  } else if (c.init_mode == "flux") {
    if constexpr (G::N == 1) {
      cfg.u = constant_flux_connection(lat, c.init_flux);
      if (c.init_amplitude != 0.0) {
        const auto noise = random_connection(g, lat, rng.stream(1), c.init_amplitude);
        for (long e = 0; e < lat.n_links(); ++e) cfg.u.u[e] = noise.u[e] * cfg.u.u[e];
      }
    } else {
      throw ConfigError("init.mode = flux requires group u1");
    }
  }
  if (c.init_phi == "random") {
    cfg.phi = random_section(g, lat, rng.stream(2), c.init_phi_amplitude);
  } else if (c.init_phi == "constant") {
    for (auto& v : cfg.phi.phi) v[0] = c.init_phi_value;
  }
  return cfg;
}

}  // namespace gaugeflow
