#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "gaugeflow/config.hpp"
#include "gaugeflow/trajectory_io.hpp"

using namespace gaugeflow;

namespace {

const char* kFullConfig = R"(
# full example
group = su2
rep_charge = 1
lattice.d = 2
lattice.extents = 8 8
lattice.spacing = 0.5
functional.kind = boson
functional.m = 0.4
functional.s = 0.1
seed = 42
init.mode = random
init.amplitude = 0.2
flow.dt0 = 0.05
flow.integrator = rk3
flow.adaptive = true
flow.grad_tol = 1e-10
flow.t_max = 100
flow.sample_stride = 2
gaugefix.tol = 1e-10
gaugefix.max_newton = 25
ls.window_lo = 1e-9
ls.window_hi = 1e-4
threads = 2
)";

}  // namespace

TEST_CASE("config parsing") {
  SECTION("full round trip of a valid config") {
    auto c = parse_config_text(kFullConfig);
    CHECK(c.group.variant == GroupKind::SU2);
    CHECK(c.lattice.extents == std::vector<int>{8, 8});
    CHECK(c.lattice.spacing == 0.5);
    CHECK(c.functional == FunctionalKind::Boson);
    CHECK(c.functional_m_const == 0.4);
    CHECK(c.seed == 42);
    CHECK(c.flow.sample_stride == 2);
    CHECK(c.ls.lo == 1e-9);
    CHECK(c.threads == 2);
  }
  SECTION("unknown keys are rejected by name") {
    try {
      parse_config_text("group = u1\nlattice.d = 2\nlattice.extents = 4 4\nbogus.key = 1\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("bogus.key") != std::string::npos);
    }
  }
  SECTION("missing required keys") {
    CHECK_THROWS_AS(parse_config_text("lattice.d = 2\nlattice.extents = 4 4\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("group = u1\nlattice.extents = 4 4\n"),
                    ConfigError);
  }
  SECTION("malformed values") {
    CHECK_THROWS_AS(
        parse_config_text("group = u1\nlattice.d = 2\nlattice.extents = 4 4\nseed = abc\n"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_config_text("group = su3\nlattice.d = 2\nlattice.extents = 4 4\n"),
        ConfigError);
    CHECK_THROWS_AS(parse_config_text("group = u1\ngroup = u1\nlattice.d = 2\n"),
                    ConfigError);
  }
  SECTION("ymh requires u1 charge 1") {
    CHECK_THROWS_AS(
        parse_config_text("group = su2\nlattice.d = 2\nlattice.extents = 4 4\n"
                          "functional.kind = ymh\n"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_config_text("group = u1\nrep_charge = 2\nlattice.d = 2\n"
                          "lattice.extents = 4 4\nfunctional.kind = ymh\n"),
        ConfigError);
  }
  SECTION("site tables load from @file") {
    const auto dir = std::filesystem::temp_directory_path() / "gflx_cfg";
    std::filesystem::create_directories(dir);
    const auto table = (dir / "m.dat").string();
    {
      std::ofstream f(table);
      for (int i = 0; i < 16; ++i) f << 0.1 * i << "\n";
    }
    auto c = parse_config_text("group = u1\nlattice.d = 2\nlattice.extents = 4 4\n"
                               "functional.kind = boson\nfunctional.m = @" +
                               table + "\nfunctional.s = 0\n");
    Lattice lat(c.lattice);
    auto spec = make_functional_spec(c, lat);
    CHECK(spec.m.size() == 16);
    CHECK(spec.m[3] == Catch::Approx(0.3));
    // wrong length is rejected
    {
      std::ofstream f(table);
      f << "1 2 3\n";
    }
    CHECK_THROWS_AS(make_functional_spec(c, lat), ConfigError);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("trajectory csv io") {
  std::vector<FlowSample> samples;
  for (int i = 0; i < 5; ++i) {
    FlowSample s;
    s.t = 0.1 * i;
    s.energy = std::exp(-0.3 * i) / 3.0;
    s.grad_l2 = std::sqrt(s.energy) * 1.7;
    s.grad_wneg1 = s.grad_l2 * 0.5;
    s.dist_to_final = 1e-3 * (5 - i);
    samples.push_back(s);
  }
  const auto dir = std::filesystem::temp_directory_path() / "gflx_csv";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "traj.csv").string();
  write_trajectory_csv(path, samples);

  SECTION("header and exact round trip") {
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "t,energy,grad_l2,grad_wneg1,dist");
    auto back = read_trajectory_csv(path);
    REQUIRE(back.size() == samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
      CHECK(back[i].t == samples[i].t);  // 17 significant digits round-trip
      CHECK(back[i].energy == samples[i].energy);
      CHECK(back[i].grad_l2 == samples[i].grad_l2);
      CHECK(back[i].grad_wneg1 == samples[i].grad_wneg1);
      CHECK(back[i].dist_to_final == samples[i].dist_to_final);
    }
  }
  SECTION("serialization is deterministic") {
    CHECK(trajectory_csv(samples) == trajectory_csv(samples));
  }
  SECTION("bad header is rejected") {
    const auto bad = (dir / "bad.csv").string();
    std::ofstream f(bad);
    f << "time,e\n1,2\n";
    f.close();
    CHECK_THROWS_AS(read_trajectory_csv(bad), IoError);
  }
  std::filesystem::remove_all(dir);
}
