#pragma once

#include <array>
#include <cmath>
#include <string>

#include "gaugeflow/errors.hpp"
#include "gaugeflow/smallmat.hpp"

namespace gaugeflow {

// Structure-group selector used by configs, checkpoints and the CLI.
// Template code dispatches once on `variant` and then works with the
// concrete group types below.
struct GroupKind {
  enum Variant { U1 = 0, SU2 = 1 };
  Variant variant = U1;
  int rep_charge = 1;  // U(1) representation charge; ignored for SU(2)
};

// Principal log rejects spectrum within this angle of the cut locus at -1.
inline constexpr double kLogCutMargin = 0.1;

namespace detail {

// atan-based angle of a unit complex number, principal branch (-pi, pi].
inline double principal_angle(cplx z) { return std::atan2(z.imag(), z.real()); }

}  // namespace detail

//
// U(1): 1x1 unitary matrices e^{i theta}; algebra u(1) = i R.
// Representation of charge k acts on C by z -> e^{i k theta} z.
//
struct U1Group {
  static constexpr int N = 1;        // matrix dimension
  static constexpr int alg_dim = 1;  // real dimension of the Lie algebra

  using GMat = CMat<1>;
  using AMat = CMat<1>;
  using RVec = CVec<1>;

  int rep_charge = 1;

  static GroupKind kind_of(const U1Group& g) { return {GroupKind::U1, g.rep_charge}; }
  GroupKind kind() const { return {GroupKind::U1, rep_charge}; }
  static std::string name() { return "u1"; }

  // Orthonormal basis of the algebra under inner(.,.): T_0 = i/sqrt(2).
  static const std::array<AMat, 1>& basis() {
    static const std::array<AMat, 1> b = [] {
      AMat t;
      t(0, 0) = cplx(0.0, 1.0 / std::sqrt(2.0));
      return std::array<AMat, 1>{t};
    }();
    return b;
  }

  static GMat exp_map(const AMat& xi) {
    GMat u;
    u(0, 0) = std::exp(cplx(0.0, xi(0, 0).imag()));
    return u;
  }

  static AMat log_map(const GMat& u) {
    const double theta = detail::principal_angle(u(0, 0));
    if (std::abs(theta) > M_PI - kLogCutMargin)
      throw LogBranchError("u1 log: phase within cut-locus margin of -1");
    AMat x;
    x(0, 0) = cplx(0.0, theta);
    return x;
  }

  // Killing-form metric, normalized as inner(xi,eta) = -2 Re tr(xi eta).
  static double inner(const AMat& xi, const AMat& eta) {
    return -2.0 * (xi(0, 0) * eta(0, 0)).real();
  }

  static AMat ad_action(const GMat&, const AMat& xi) { return xi; }  // abelian

  // Right-trivialized differential of log: trivial for an abelian group.
  static AMat dlog(const AMat&, const AMat& eta) { return eta; }

  RVec rep_group(const GMat& u, const RVec& v) const {
    const double theta = detail::principal_angle(u(0, 0));
    return std::exp(cplx(0.0, rep_charge * theta)) * v;
  }

  RVec rep_algebra(const AMat& xi, const RVec& v) const {
    return cplx(0.0, rep_charge * xi(0, 0).imag()) * v;
  }

  // Project an arbitrary matrix onto the algebra (anti-Hermitian part).
  static AMat project_algebra(const CMat<1>& m) {
    AMat x;
    x(0, 0) = cplx(0.0, m(0, 0).imag());
    return x;
  }

  // Nearest group element (phase of the entry).
  static GMat project_group(const GMat& u) {
    GMat r;
    const double a = std::abs(u(0, 0));
    r(0, 0) = a > 0 ? u(0, 0) / a : cplx(1.0, 0.0);
    return r;
  }
};

//
// SU(2): 2x2 special unitary matrices; algebra su(2) of traceless
// anti-Hermitian matrices. Matter lives in the fundamental representation.
// Closed forms throughout: for X = i x.sigma, exp X = cos|x| + i sin|x| n.sigma.
//
struct SU2Group {
  static constexpr int N = 2;
  static constexpr int alg_dim = 3;

  using GMat = CMat<2>;
  using AMat = CMat<2>;
  using RVec = CVec<2>;

  int rep_charge = 1;  // unused; kept so GroupKind round-trips

  GroupKind kind() const { return {GroupKind::SU2, rep_charge}; }
  static std::string name() { return "su2"; }

  // T_j = i sigma_j / 2, orthonormal under inner(.,.).
  static const std::array<AMat, 3>& basis() {
    static const std::array<AMat, 3> b = [] {
      std::array<AMat, 3> t{};
      const cplx I(0.0, 1.0);
      t[0](0, 1) = 0.5 * I;
      t[0](1, 0) = 0.5 * I;
      t[1](0, 1) = cplx(0.5, 0.0);
      t[1](1, 0) = cplx(-0.5, 0.0);
      t[2](0, 0) = 0.5 * I;
      t[2](1, 1) = -0.5 * I;
      return t;
    }();
    return b;
  }

  // Components x with X = i x.sigma (so |x| is the half rotation angle).
  static std::array<double, 3> pauli_components(const AMat& x) {
    return {0.5 * (x(0, 1) + x(1, 0)).imag(),
            0.5 * (x(0, 1) - x(1, 0)).real(),
            x(0, 0).imag()};
  }

  static GMat exp_map(const AMat& xi) {
    const auto c = pauli_components(xi);
    const double r = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    double sinc;  // sin(r)/r, stable near 0
    if (r < 1e-8) {
      sinc = 1.0 - r * r / 6.0;
    } else {
      sinc = std::sin(r) / r;
    }
    GMat u = cplx(std::cos(r), 0.0) * GMat::identity() + sinc * xi;
    return u;
  }

  static AMat log_map(const GMat& u) {
    // U = cos(r) 1 + i sin(r) n.sigma; recover r from trace and the
    // anti-Hermitian traceless part W = (U - U^dag)/2 = i sin(r) n.sigma.
    const double t = 0.5 * trace(u).real();
    AMat w;
    {
      GMat ud = dagger(u);
      for (int i = 0; i < 4; ++i) w.a[i] = 0.5 * (u.a[i] - ud.a[i]);
      const cplx half_tr = 0.5 * trace(w);
      w(0, 0) -= half_tr;
      w(1, 1) -= half_tr;
    }
    const double s = std::sqrt(0.5 * frob_norm2(w));  // |sin(r)|
    const double r = std::atan2(s, t);
    if (r > M_PI - kLogCutMargin)
      throw LogBranchError("su2 log: rotation angle within cut-locus margin");
    double scale;  // r / sin(r)
    if (s < 1e-8) {
      scale = 1.0 + r * r / 6.0;
    } else {
      scale = r / s;
    }
    return scale * w;
  }

  static double inner(const AMat& xi, const AMat& eta) {
    return -2.0 * trace(xi * eta).real();
  }

  static AMat ad_action(const GMat& u, const AMat& xi) { return u * xi * dagger(u); }

  // Right-trivialized differential of log at X:
  //   dlog_X(eta) = eta - 1/2 [X, eta] + gamma(phi) [X, [X, eta]],
  // phi = 2|x| the rotation angle, gamma = (1 - (phi/2) cot(phi/2)) / phi^2.
  // Closed form from the characteristic ad_X^3 = -phi^2 ad_X on su(2).
  static AMat dlog(const AMat& x, const AMat& eta) {
    const auto c = pauli_components(x);
    const double phi = 2.0 * std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
    double gamma;
    if (phi < 1e-4) {
      gamma = 1.0 / 12.0 + phi * phi / 720.0;
    } else {
      gamma = (1.0 - 0.5 * phi / std::tan(0.5 * phi)) / (phi * phi);
    }
    const AMat c1 = commutator(x, eta);
    return eta - 0.5 * c1 + gamma * commutator(x, c1);
  }

  RVec rep_group(const GMat& u, const RVec& v) const { return u * v; }
  RVec rep_algebra(const AMat& xi, const RVec& v) const { return xi * v; }

  static AMat project_algebra(const CMat<2>& m) {
    AMat x;
    CMat<2> md = dagger(m);
    for (int i = 0; i < 4; ++i) x.a[i] = 0.5 * (m.a[i] - md.a[i]);
    const cplx half_tr = 0.5 * trace(x);
    x(0, 0) -= half_tr;
    x(1, 1) -= half_tr;
    return x;
  }

  // Nearest SU(2) element: normalize first row, complete by symplectic form.
  static GMat project_group(const GMat& u) {
    cplx a = u(0, 0), b = u(0, 1);
    const double n = std::sqrt(std::norm(a) + std::norm(b));
    if (n > 0) {
      a /= n;
      b /= n;
    } else {
      a = 1.0;
      b = 0.0;
    }
    GMat r;
    r(0, 0) = a;
    r(0, 1) = b;
    r(1, 0) = -std::conj(b);
    r(1, 1) = std::conj(a);
    return r;
  }
};

// Algebra element from orthonormal-basis coefficients.
template <class G>
inline typename G::AMat algebra_from_coeffs(const std::array<double, G::alg_dim>& c) {
  typename G::AMat x;
  const auto& b = G::basis();
  for (int k = 0; k < G::alg_dim; ++k) x += c[k] * b[k];
  return x;
}

// Coefficients of an algebra element in the orthonormal basis.
template <class G>
inline std::array<double, G::alg_dim> algebra_coeffs(const typename G::AMat& x) {
  std::array<double, G::alg_dim> c{};
  const auto& b = G::basis();
  for (int k = 0; k < G::alg_dim; ++k) c[k] = G::inner(b[k], x);
  return c;
}

// Algebra-valued pairing <w, rho_*(.) v>: returns the unique Lambda with
// inner(Lambda, xi) = Re <w, rho_*(xi) v> for all xi. This is the moment-map
// kernel behind matter forces and the adjoint d_{A,Phi}^*.
template <class G>
inline typename G::AMat rep_pairing(const G& g, const typename G::RVec& w,
                                    const typename G::RVec& v) {
  typename G::AMat out;
  const auto& b = G::basis();
  for (int k = 0; k < G::alg_dim; ++k) {
    const double coeff = hdot(w, g.rep_algebra(b[k], v)).real();
    out += coeff * b[k];
  }
  return out;
}

}  // namespace gaugeflow
