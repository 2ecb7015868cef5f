#pragma once

#include <utility>
#include <vector>

#include "gaugeflow/fields.hpp"
#include "gaugeflow/solvers.hpp"

namespace gaugeflow {

// ---------------------------------------------------------------------------
// pair operators (section 0-forms <-> tangents):
//   d_{A,Phi} xi      = (d_A xi, -rho_*(xi) Phi)
//   d_{A,Phi}^*(a,f)  = d_A^* a - <f, . Phi>^*
// The second is the exact adjoint under the discrete L^2 products.

template <class G>
inline Tangent<G> pair_d(const G& g, const Lattice& lat, const Configuration<G>& cfg,
                         const AlgebraField<G>& xi) {
  Tangent<G> t;
  t.a = d0<G>(lat, cfg.u, xi);
  t.phi.resize(lat.n_sites());
  parallel_for(lat.n_sites(), [&](long x) {
    t.phi[x] = -g.rep_algebra(xi[x], cfg.phi.phi[x]);
  });
  return t;
}

template <class G>
inline AlgebraField<G> pair_dstar(const G& g, const Lattice& lat,
                                  const Configuration<G>& cfg, const Tangent<G>& t) {
  AlgebraField<G> out = d0_star<G>(lat, cfg.u, t.a);
  parallel_for(lat.n_sites(), [&](long x) {
    out[x] -= rep_pairing(g, t.phi[x], cfg.phi.phi[x]);
  });
  return out;
}

// Delta_{A,Phi} = d_{A,Phi}^* d_{A,Phi}; on connections only (Phi = 0) this is
// the 0-form Hodge Laplacian Delta_A = d_A^* d_A.
template <class G>
inline AlgebraField<G> pair_laplacian_apply(const G& g, const Lattice& lat,
                                            const Configuration<G>& cfg,
                                            const AlgebraField<G>& xi) {
  return pair_dstar(g, lat, cfg, pair_d(g, lat, cfg, xi));
}

// ---------------------------------------------------------------------------
// flattened operator handles

template <class G>
inline LinOp make_laplacian0_op(const G& g, const Lattice& lat,
                                const Connection<G>& u) {
  LinOp op;
  op.dim = alg_field_dim<G>(lat);
  op.symmetric = true;
  op.domain = "laplacian0";
  Configuration<G> cfg{u, Section<G>::zero(lat)};
  op.apply = [g, &lat, cfg](const std::vector<double>& x, std::vector<double>& y) {
    AlgebraField<G> xi;
    unflatten_alg<G>(x, xi);
    AlgebraField<G> r = pair_laplacian_apply(g, lat, cfg, xi);
    flatten_alg<G>(r, y);
  };
  return op;
}

template <class G>
inline LinOp make_pair_laplacian_op(const G& g, const Lattice& lat,
                                    const Configuration<G>& cfg) {
  LinOp op;
  op.dim = alg_field_dim<G>(lat);
  op.symmetric = true;
  op.domain = "pair_laplacian";
  op.apply = [g, &lat, &cfg](const std::vector<double>& x, std::vector<double>& y) {
    AlgebraField<G> xi;
    unflatten_alg<G>(x, xi);
    AlgebraField<G> r = pair_laplacian_apply(g, lat, cfg, xi);
    flatten_alg<G>(r, y);
  };
  return op;
}

// Perturbed operator of the Newton corrector: d_{A0,Phi0}^* d_{A,Phi} with the
// derivative taken at the current configuration. Nonsymmetric; invertible on
// (Ker Delta_{A0,Phi0})^perp while the perturbation stays small.
template <class G>
inline LinOp make_perturbed_op(const G& g, const Lattice& lat,
                               const Configuration<G>& ref,
                               const Configuration<G>& cur) {
  LinOp op;
  op.dim = alg_field_dim<G>(lat);
  op.symmetric = false;
  op.domain = "perturbed_pair_laplacian";
  op.apply = [g, &lat, &ref, &cur](const std::vector<double>& x,
                                   std::vector<double>& y) {
    AlgebraField<G> xi;
    unflatten_alg<G>(x, xi);
    AlgebraField<G> r = pair_dstar(g, lat, ref, pair_d(g, lat, cur, xi));
    flatten_alg<G>(r, y);
  };
  return op;
}

// Numerical kernel of Delta_{A,Phi} (the stabilizer algebra); at most the
// dimension of the structure group's algebra.
template <class G>
inline std::vector<std::vector<double>> pair_laplacian_kernel(
    const G& g, const Lattice& lat, const Configuration<G>& cfg) {
  LinOp op = make_pair_laplacian_op(g, lat, cfg);
  return kernel_basis(op, G::alg_dim);
}

// ---------------------------------------------------------------------------
// Green's operator and slice projection Pi = id - d G d^*

template <class G>
class SliceProjector {
 public:
  SliceProjector(const G& g, const Lattice& lat, Configuration<G> cfg,
                 double tol = 1e-11, int max_iter = 100000)
      : g_(g), lat_(lat), cfg_(std::move(cfg)), tol_(tol), max_iter_(max_iter) {
    op_ = make_pair_laplacian_op(g_, lat_, cfg_);
    op_.kernel = kernel_basis(op_, G::alg_dim);
  }

  // the operator closure refers to members; pinning the object keeps it valid
  SliceProjector(const SliceProjector&) = delete;
  SliceProjector& operator=(const SliceProjector&) = delete;

  const Configuration<G>& base() const { return cfg_; }
  const std::vector<std::vector<double>>& kernel() const { return op_.kernel; }

  // Green's operator of Delta_{A,Phi}: zero on the kernel, inverse on the
  // orthogonal complement.
  AlgebraField<G> green(const AlgebraField<G>& rhs) const {
    std::vector<double> b;
    flatten_alg<G>(rhs, b);
    std::vector<double> x = cg_solve(op_, std::move(b), tol_, max_iter_);
    AlgebraField<G> out;
    unflatten_alg<G>(x, out);
    return out;
  }

  // L^2-orthogonal projection onto Ker d_{A,Phi}^*.
  Tangent<G> apply(const Tangent<G>& t) const {
    AlgebraField<G> r = pair_dstar(g_, lat_, cfg_, t);
    AlgebraField<G> xi = green(r);
    Tangent<G> correction = pair_d(g_, lat_, cfg_, xi);
    Tangent<G> out = t;
    out -= correction;
    return out;
  }

 private:
  G g_;
  const Lattice& lat_;
  Configuration<G> cfg_;
  double tol_;
  int max_iter_;
  LinOp op_;
};

// ---------------------------------------------------------------------------
// lattice exterior derivative on 1-forms (plaquette-midpoint transport) and
// the full Hodge Laplacian on 1-forms. Ships as a utility: the discrete
// d_A o d_A equals [F_A, .] only to O(h^2), unlike the continuum identity.

template <class G>
inline std::vector<typename G::AMat> d1(const G&, const Lattice& lat,
                                        const Connection<G>& u,
                                        const std::vector<typename G::AMat>& a) {
  std::vector<typename G::AMat> out(lat.n_plaquettes());
  const double inv_h = 1.0 / lat.h();
  parallel_for(lat.n_plaquettes(), [&](long p) {
    auto links = lat.plaquette_links(p);
    typename G::GMat pre = G::GMat::identity();
    typename G::AMat acc;
    for (const auto& ol : links) {
      if (ol.forward) {
        acc += G::ad_action(pre, a[ol.link]);
        pre = pre * u.u[ol.link];
      } else {
        pre = pre * dagger(u.u[ol.link]);
        acc -= G::ad_action(pre, a[ol.link]);
      }
    }
    out[p] = inv_h * acc;
  });
  return out;
}

template <class G>
inline std::vector<typename G::AMat> d1_star(const G&, const Lattice& lat,
                                             const Connection<G>& u,
                                             const std::vector<typename G::AMat>& f) {
  std::vector<typename G::AMat> out(lat.n_links(), G::AMat::zero());
  const double inv_h = 1.0 / lat.h();
  for (long p = 0; p < lat.n_plaquettes(); ++p) {
    auto links = lat.plaquette_links(p);
    typename G::GMat pre = G::GMat::identity();
    for (const auto& ol : links) {
      if (ol.forward) {
        out[ol.link] += inv_h * G::ad_action(dagger(pre), f[p]);
        pre = pre * u.u[ol.link];
      } else {
        pre = pre * dagger(u.u[ol.link]);
        out[ol.link] -= inv_h * G::ad_action(dagger(pre), f[p]);
      }
    }
  }
  return out;
}

// Delta_A on 1-forms: d1^* d1 + d0 d0^*.
template <class G>
inline LinOp make_laplacian1_op(const G& g, const Lattice& lat,
                                const Connection<G>& u) {
  LinOp op;
  op.dim = lat.n_links() * G::alg_dim;
  op.symmetric = true;
  op.domain = "laplacian1";
  op.apply = [g, &lat, &u](const std::vector<double>& x, std::vector<double>& y) {
    std::vector<typename G::AMat> a;
    unflatten_alg<G>(x, a);  // per-link layout shares the per-site codec
    auto f = d1(g, lat, u, a);
    auto r = d1_star(g, lat, u, f);
    auto div = d0_star<G>(lat, u, a);
    auto grad = d0<G>(lat, u, div);
    for (size_t e = 0; e < r.size(); ++e) r[e] += grad[e];
    flatten_alg<G>(r, y);
  };
  return op;
}

}  // namespace gaugeflow
