#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>

#include "gaugeflow/fields.hpp"
#include "gaugeflow/hodge.hpp"

using namespace gaugeflow;

namespace {

Eigen::MatrixXd assemble_dense(const LinOp& op) {
  const long n = op.dim;
  Eigen::MatrixXd m(n, n);
  std::vector<double> e(n, 0.0), col(n);
  for (long j = 0; j < n; ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    for (long i = 0; i < n; ++i) m(i, j) = col[i];
    e[j] = 0.0;
  }
  return m;
}

std::vector<double> fourier_eigs_2d(int n, double h, int copies) {
  std::vector<double> eigs;
  for (int m0 = 0; m0 < n; ++m0)
    for (int m1 = 0; m1 < n; ++m1) {
      const double lam = (4.0 * std::pow(std::sin(M_PI * m0 / n), 2) +
                          4.0 * std::pow(std::sin(M_PI * m1 / n), 2)) /
                         (h * h);
      for (int c = 0; c < copies; ++c) eigs.push_back(lam);
    }
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

template <class G>
Configuration<G> random_config(const G& g, const Lattice& lat, std::uint64_t seed,
                               double amp) {
  CounterRng rng(seed);
  Configuration<G> cfg;
  cfg.u = random_connection(g, lat, rng.stream(1), amp);
  cfg.phi = random_section(g, lat, rng.stream(2), amp);
  return cfg;
}

}  // namespace

TEST_CASE("laplacian0: quadratic form, kernel, fourier spectrum") {
  SECTION("energy identity <Delta xi, xi> = |d xi|^2") {
    SU2Group g;
    Lattice lat({2, {4, 4}, 0.7});
    const auto cfg = random_config(g, lat, 3, 0.5);
    Configuration<SU2Group> conn_only{cfg.u, Section<SU2Group>::zero(lat)};
    const auto xi = random_algebra_field(g, lat, CounterRng(4), 1.0);
    const auto lap = pair_laplacian_apply(g, lat, conn_only, xi);
    const auto dxi = d0<SU2Group>(lat, cfg.u, xi);
    double lhs = ip_alg<SU2Group>(lat, lap, xi);
    double rhs = 0.0;
    for (long e = 0; e < lat.n_links(); ++e) rhs += SU2Group::inner(dxi[e], dxi[e]);
    rhs *= lat.cell_volume();
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
  }
  SECTION("trivial su2 on 4x4 has a 3-dimensional kernel") {
    SU2Group g;
    Lattice lat({2, {4, 4}, 1.0});
    LinOp op = make_laplacian0_op(g, lat, Connection<SU2Group>::trivial(lat));
    Eigen::MatrixXd m = assemble_dense(op);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    int kd = 0;
    for (long i = 0; i < m.rows(); ++i)
      if (es.eigenvalues()[i] < 1e-10 * es.eigenvalues()[m.rows() - 1]) ++kd;
    CHECK(kd == 3);
    auto rep = spectrum_low(op, 6);
    CHECK(rep.kernel_dim == 3);
    CHECK(rep.mu == Catch::Approx(2.0).margin(1e-8));  // 4 sin^2(pi/4)
    for (int i = 0; i < 6; ++i)
      CHECK(rep.eigenvalues[i] == Catch::Approx(es.eigenvalues()[i]).margin(1e-8));
  }
  SECTION("trivial u1 spectrum matches the fourier oracle") {
    U1Group g;
    const int n = 8;
    Lattice lat({2, {n, n}, 1.0});
    LinOp op = make_laplacian0_op(g, lat, Connection<U1Group>::trivial(lat));
    auto rep = spectrum_low(op, 6);
    auto expected = fourier_eigs_2d(n, 1.0, 1);
    for (int i = 0; i < 6; ++i)
      CHECK(rep.eigenvalues[i] == Catch::Approx(expected[i]).margin(1e-9));
    CHECK(rep.kernel_dim == 1);
    CHECK(rep.mu == Catch::Approx(4.0 * std::pow(std::sin(M_PI / n), 2)).margin(1e-9));
  }
  SECTION("random holonomy has no kernel") {
    SU2Group g;
    Lattice lat({2, {4, 4}, 1.0});
    LinOp op = make_laplacian0_op(g, lat,
                                  random_connection(g, lat, CounterRng(9), 0.8));
    Eigen::MatrixXd m = assemble_dense(op);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues()[0] > 1e-6);
    auto rep = spectrum_low(op, 4);
    CHECK(rep.kernel_dim == 0);
    CHECK(rep.eigenvalues[0] == Catch::Approx(es.eigenvalues()[0]).margin(1e-8));
  }
}

TEST_CASE("pair operators") {
  SU2Group g;
  Lattice lat({2, {4, 4}, 0.8});
  SECTION("phi = 0 reduces to the 0-form operator") {
    auto cfg = random_config(g, lat, 11, 0.5);
    cfg.phi = Section<SU2Group>::zero(lat);
    const auto xi = random_algebra_field(g, lat, CounterRng(12), 1.0);
    const auto t = pair_d(g, lat, cfg, xi);
    const auto dxi = d0<SU2Group>(lat, cfg.u, xi);
    for (long e = 0; e < lat.n_links(); ++e)
      CHECK(frob_norm(t.a[e] - dxi[e]) == 0.0);
    for (long x = 0; x < lat.n_sites(); ++x) CHECK(norm2(t.phi[x]) == 0.0);
  }
  SECTION("a nonzero constant section breaks the constant stabilizer") {
    Configuration<SU2Group> cfg{Connection<SU2Group>::trivial(lat),
                                Section<SU2Group>::zero(lat)};
    for (auto& v : cfg.phi.phi) v[0] = 1.0;
    AlgebraField<SU2Group> xi(lat.n_sites(),
                              algebra_from_coeffs<SU2Group>({1.0, 0.0, 0.0}));
    const auto t = pair_d(g, lat, cfg, xi);
    CHECK(l2_norm_tan(lat, t) > 0.1);
  }
  SECTION("adjointness under the combined product") {
    const auto cfg = random_config(g, lat, 13, 0.6);
    const auto xi = random_algebra_field(g, lat, CounterRng(14), 1.0);
    const auto t = random_tangent(g, lat, CounterRng(15), 1.0);
    const double lhs = ip_tan(lat, pair_d(g, lat, cfg, xi), t);
    const double rhs = ip_alg<SU2Group>(lat, xi, pair_dstar(g, lat, cfg, t));
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("cg_solve") {
  U1Group g;
  const int n = 6;
  Lattice lat({2, {n, n}, 1.0});
  LinOp lap = make_laplacian0_op(g, lat, Connection<U1Group>::trivial(lat));
  LinOp shifted;
  shifted.dim = lap.dim;
  shifted.symmetric = true;
  shifted.domain = "lap+1";
  shifted.apply = [&lap](const std::vector<double>& x, std::vector<double>& y) {
    lap.apply(x, y);
    vecops::axpy(1.0, x, y);
  };
  SECTION("zero rhs gives zero") {
    std::vector<double> rhs(shifted.dim, 0.0);
    auto x = cg_solve(shifted, rhs, 1e-12, 100);
    CHECK(vecops::norm(x) == 0.0);
  }
  SECTION("single fourier mode inverts by the symbol") {
    AlgebraField<U1Group> xi(lat.n_sites());
    const int m0 = 2, m1 = 1;
    for (long x = 0; x < lat.n_sites(); ++x) {
      auto c = lat.coords(x);
      xi[x](0, 0) =
          cplx(0.0, std::sin(2.0 * M_PI * (m0 * c[0] + m1 * c[1]) / double(n)));
    }
    std::vector<double> rhs;
    flatten_alg<U1Group>(xi, rhs);
    auto x = cg_solve(shifted, rhs, 1e-13, 10000);
    const double lam = 4.0 * std::pow(std::sin(M_PI * m0 / n), 2) +
                       4.0 * std::pow(std::sin(M_PI * m1 / n), 2);
    for (size_t i = 0; i < rhs.size(); ++i)
      CHECK(x[i] == Catch::Approx(rhs[i] / (lam + 1.0)).margin(1e-10));
  }
  SECTION("matches a dense solve on a random SPD case") {
    SU2Group gs;
    Lattice lat3({2, {3, 3}, 1.0});
    const auto cfg = random_config(gs, lat3, 17, 0.5);
    LinOp op = make_pair_laplacian_op(gs, lat3, cfg);
    LinOp spd;
    spd.dim = op.dim;
    spd.symmetric = true;
    spd.apply = [&op](const std::vector<double>& x, std::vector<double>& y) {
      op.apply(x, y);
      vecops::axpy(0.7, x, y);
    };
    Eigen::MatrixXd m = assemble_dense(spd);
    CounterRng rng(18);
    std::vector<double> rhs(spd.dim);
    for (auto& v : rhs) v = rng.next_gaussian();
    auto x = cg_solve(spd, rhs, 1e-13, 10000);
    Eigen::VectorXd b(spd.dim);
    for (long i = 0; i < spd.dim; ++i) b[i] = rhs[i];
    Eigen::VectorXd xd = m.ldlt().solve(b);
    for (long i = 0; i < spd.dim; ++i) CHECK(x[i] == Catch::Approx(xd[i]).margin(1e-8));
  }
}

TEST_CASE("nonsym_solve on the perturbed operator") {
  SU2Group g;
  Lattice lat({2, {4, 4}, 1.0});
  Configuration<SU2Group> ref{random_connection(g, lat, CounterRng(21), 0.4),
                              random_section(g, lat, CounterRng(22), 0.4)};
  SECTION("agrees with cg_solve in the symmetric limit") {
    LinOp sym = make_pair_laplacian_op(g, lat, ref);
    LinOp pert = make_perturbed_op(g, lat, ref, ref);
    sym.kernel = pert.kernel = kernel_basis(sym, 3);
    CounterRng rng(23);
    std::vector<double> rhs(sym.dim);
    for (auto& v : rhs) v = rng.next_gaussian();
    auto x1 = cg_solve(sym, rhs, 1e-12, 20000);
    auto x2 = nonsym_solve(pert, rhs, 1e-12, 20000);
    for (long i = 0; i < sym.dim; ++i) CHECK(x1[i] == Catch::Approx(x2[i]).margin(1e-8));
  }
  SECTION("small perturbation: verified residual") {
    const auto dir = random_tangent(g, lat, CounterRng(24), 0.05);
    auto cur = displace(lat, ref, dir, 1.0);
    LinOp sym = make_pair_laplacian_op(g, lat, ref);
    LinOp pert = make_perturbed_op(g, lat, ref, cur);
    pert.kernel = kernel_basis(sym, 3);
    CounterRng rng(25);
    std::vector<double> rhs(pert.dim);
    for (auto& v : rhs) v = rng.next_gaussian();
    vecops::project_out(pert.kernel, rhs);
    auto x = nonsym_solve(pert, rhs, 1e-10, 20000);
    std::vector<double> check(pert.dim);
    pert.apply(x, check);
    vecops::project_out(pert.kernel, check);
    for (size_t i = 0; i < check.size(); ++i) check[i] -= rhs[i];
    CHECK(vecops::norm(check) <= 1e-10 * vecops::norm(rhs));
  }
  SECTION("huge perturbation never returns a silent wrong answer") {
    auto cur = displace(lat, ref, random_tangent(g, lat, CounterRng(26), 10.0), 1.0);
    LinOp sym = make_pair_laplacian_op(g, lat, ref);
    LinOp pert = make_perturbed_op(g, lat, ref, cur);
    pert.kernel = kernel_basis(sym, 3);
    CounterRng rng(27);
    std::vector<double> rhs(pert.dim);
    for (auto& v : rhs) v = rng.next_gaussian();
    vecops::project_out(pert.kernel, rhs);
    try {
      auto x = nonsym_solve(pert, rhs, 1e-10, 500);
      std::vector<double> check(pert.dim);
      pert.apply(x, check);
      vecops::project_out(pert.kernel, check);
      for (size_t i = 0; i < check.size(); ++i) check[i] -= rhs[i];
      CHECK(vecops::norm(check) <= 1e-10 * vecops::norm(rhs));
    } catch (const NoConvergenceError&) {
      SUCCEED("NoConvergence is acceptable for a huge perturbation");
    }
  }
}

TEST_CASE("slice projection") {
  SU2Group g;
  Lattice lat({2, {4, 4}, 0.9});
  const auto cfg = random_config(g, lat, 31, 0.4);
  SliceProjector<SU2Group> proj(g, lat, cfg);
  CounterRng rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    Tangent<SU2Group> t = random_tangent(g, lat, rng.stream(trial), 1.0);
    t *= 1.0 / l2_norm_tan(lat, t);
    const auto pt = proj.apply(t);
    // lands in the slice and is idempotent
    CHECK(l2_norm_alg<SU2Group>(lat, pair_dstar(g, lat, cfg, pt)) < 1e-10);
    CHECK(l2_norm_tan<SU2Group>(lat, proj.apply(pt) - pt) < 1e-9);
    // annihilates gauge directions
    const auto xi = random_algebra_field(g, lat, rng.stream(100 + trial), 1.0);
    const auto gd = pair_d(g, lat, cfg, xi);
    CHECK(l2_norm_tan<SU2Group>(lat, proj.apply(gd)) < 1e-9 * l2_norm_tan(lat, gd));
    // self-adjointness probe
    Tangent<SU2Group> s = random_tangent(g, lat, rng.stream(200 + trial), 1.0);
    const double lhs = ip_tan(lat, proj.apply(t), s);
    const double rhs = ip_tan(lat, t, proj.apply(s));
    CHECK(lhs == Catch::Approx(rhs).margin(1e-9));
  }
}

TEST_CASE("symmetric handles pass random symmetry probes") {
  SU2Group g;
  Lattice lat({2, {4, 4}, 1.0});
  const auto cfg = random_config(g, lat, 41, 0.5);
  for (LinOp op : {make_pair_laplacian_op(g, lat, cfg),
                   make_laplacian1_op(g, lat, cfg.u)}) {
    CounterRng rng(42);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> x(op.dim), y(op.dim), lx(op.dim), ly(op.dim);
      for (auto& v : x) v = rng.next_gaussian();
      for (auto& v : y) v = rng.next_gaussian();
      op.apply(x, lx);
      op.apply(y, ly);
      const double a = vecops::dot(lx, y);
      const double b = vecops::dot(x, ly);
      CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
      CHECK(vecops::dot(x, lx) >= -1e-10);  // positive semidefinite
    }
  }
}

TEST_CASE("finite-dimensional index-zero structure of dense assemblies") {
  SU2Group g;
  Lattice lat({2, {3, 3}, 1.0});
  for (std::uint64_t seed : {1ULL, 2ULL}) {
    Configuration<SU2Group> cfg{
        random_connection(g, lat, CounterRng(seed), seed == 1 ? 0.0 : 0.4),
        Section<SU2Group>::zero(lat)};
    LinOp op = make_pair_laplacian_op(g, lat, cfg);
    Eigen::MatrixXd m = assemble_dense(op);
    const double thresh = 1e-10 * m.norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_m(m);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_mt(m.transpose().eval());
    int ker = 0, coker = 0;
    for (long i = 0; i < m.rows(); ++i) {
      if (svd_m.singularValues()[i] < thresh) ++ker;
      if (svd_mt.singularValues()[i] < thresh) ++coker;
    }
    CHECK(ker == coker);  // index zero, exactly
  }
}
