#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gaugeflow/errors.hpp"
#include "gaugeflow/flow.hpp"
#include "gaugeflow/functionals.hpp"
#include "gaugeflow/group.hpp"
#include "gaugeflow/lattice.hpp"
#include "gaugeflow/lojasiewicz.hpp"

namespace gaugeflow {

// Flat key = value text with dotted sections. Grammar:
//   file       := { line }
//   line       := [ key '=' value ] [ '#' comment ]
//   key        := word { '.' word }
//   value      := whitespace-separated tokens (kept verbatim)
// Unknown keys are rejected by name; a value of the form '@path' for the
// boson coefficient fields loads a whitespace-separated table of site values.
struct ExperimentConfig {
  GroupKind group;
  LatticeSpec lattice;
  FunctionalKind functional = FunctionalKind::PureYM;
  double functional_m_const = 0.0;
  double functional_s_const = 0.0;
  std::string functional_m_file;  // empty: constant
  std::string functional_s_file;
  double tau = 0.0;
  std::uint64_t seed = 0;

  // start configuration
  std::string init_mode = "random";  // cold | random | flux
  double init_amplitude = 0.1;
  bool init_balance = false;  // remove the lattice-average one-form
  int init_flux = 0;
  std::string init_phi = "zero";  // zero | random | constant
  double init_phi_amplitude = 0.1;
  cplx init_phi_value = 0.0;

  FlowParams flow;
  double gaugefix_tol = 1e-10;
  int gaugefix_max_newton = 30;
  LSWindow ls;
  int threads = 1;

  // verify-suite controls
  int verify_trials = 8;
};

namespace detail {

struct KvFile {
  std::map<std::string, std::string> kv;
  std::set<std::string> consumed;

  std::optional<std::string> take(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    consumed.insert(key);
    return it->second;
  }
};

inline KvFile parse_kv(const std::string& text) {
  KvFile f;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      // blank or comment-only lines allowed
      bool blank = true;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
      if (!blank)
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (f.kv.count(key))
      throw ConfigError("config: duplicate key '" + key + "'");
    f.kv[key] = val;
  }
  return f;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

inline std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  std::vector<int> out;
  std::string tok;
  while (in >> tok) out.push_back(static_cast<int>(to_long(key, tok)));
  if (out.empty()) throw ConfigError("config: key '" + key + "' expects integers");
  return out;
}

inline std::vector<double> load_site_table(const std::string& path, long n_sites) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open site table '" + path + "'");
  std::vector<double> vals;
  double x;
  while (f >> x) vals.push_back(x);
  if (static_cast<long>(vals.size()) != n_sites)
    throw ConfigError("config: site table '" + path + "' has " +
                      std::to_string(vals.size()) + " values, lattice needs " +
                      std::to_string(n_sites));
  return vals;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  auto f = detail::parse_kv(text);
  ExperimentConfig c;

  if (auto v = f.take("group")) {
    if (*v == "u1")
      c.group.variant = GroupKind::U1;
    else if (*v == "su2")
      c.group.variant = GroupKind::SU2;
    else
      throw ConfigError("config: group must be u1 or su2, got '" + *v + "'");
  } else {
    throw ConfigError("config: missing required key 'group'");
  }
  if (auto v = f.take("rep_charge"))
    c.group.rep_charge = static_cast<int>(detail::to_long("rep_charge", *v));

  if (auto v = f.take("lattice.d"))
    c.lattice.d = static_cast<int>(detail::to_long("lattice.d", *v));
  else
    throw ConfigError("config: missing required key 'lattice.d'");
  if (auto v = f.take("lattice.extents"))
    c.lattice.extents = detail::to_int_list("lattice.extents", *v);
  else
    throw ConfigError("config: missing required key 'lattice.extents'");
  if (auto v = f.take("lattice.spacing"))
    c.lattice.spacing = detail::to_double("lattice.spacing", *v);
  c.lattice.validate();

  if (auto v = f.take("functional.kind")) {
    if (*v == "pure_ym")
      c.functional = FunctionalKind::PureYM;
    else if (*v == "boson")
      c.functional = FunctionalKind::Boson;
    else if (*v == "ymh")
      c.functional = FunctionalKind::YMH;
    else
      throw ConfigError("config: functional.kind must be pure_ym, boson or ymh");
  }
  if (auto v = f.take("functional.m")) {
    if (!v->empty() && (*v)[0] == '@')
      c.functional_m_file = v->substr(1);
    else
      c.functional_m_const = detail::to_double("functional.m", *v);
  }
  if (auto v = f.take("functional.s")) {
    if (!v->empty() && (*v)[0] == '@')
      c.functional_s_file = v->substr(1);
    else
      c.functional_s_const = detail::to_double("functional.s", *v);
  }
  if (auto v = f.take("functional.tau")) c.tau = detail::to_double("functional.tau", *v);

  if (auto v = f.take("seed"))
    c.seed = static_cast<std::uint64_t>(detail::to_long("seed", *v));

  if (auto v = f.take("init.mode")) {
    if (*v != "cold" && *v != "random" && *v != "flux")
      throw ConfigError("config: init.mode must be cold, random or flux");
    c.init_mode = *v;
  }
  if (auto v = f.take("init.amplitude"))
    c.init_amplitude = detail::to_double("init.amplitude", *v);
  if (auto v = f.take("init.balance"))
    c.init_balance = detail::to_bool("init.balance", *v);
  if (auto v = f.take("init.flux"))
    c.init_flux = static_cast<int>(detail::to_long("init.flux", *v));
  if (auto v = f.take("init.phi")) {
    if (*v != "zero" && *v != "random" && *v != "constant")
      throw ConfigError("config: init.phi must be zero, random or constant");
    c.init_phi = *v;
  }
  if (auto v = f.take("init.phi_amplitude"))
    c.init_phi_amplitude = detail::to_double("init.phi_amplitude", *v);
  if (auto v = f.take("init.phi_value"))
    c.init_phi_value = detail::to_double("init.phi_value", *v);

  if (auto v = f.take("flow.dt0")) c.flow.dt0 = detail::to_double("flow.dt0", *v);
  if (auto v = f.take("flow.integrator")) {
    if (*v == "euler")
      c.flow.integrator = Integrator::Euler;
    else if (*v == "rk3")
      c.flow.integrator = Integrator::RK3;
    else
      throw ConfigError("config: flow.integrator must be euler or rk3");
  }
  if (auto v = f.take("flow.adaptive"))
    c.flow.adaptive = detail::to_bool("flow.adaptive", *v);
  if (auto v = f.take("flow.grad_tol"))
    c.flow.grad_tol = detail::to_double("flow.grad_tol", *v);
  if (auto v = f.take("flow.t_max")) c.flow.t_max = detail::to_double("flow.t_max", *v);
  if (auto v = f.take("flow.sample_stride"))
    c.flow.sample_stride = static_cast<int>(detail::to_long("flow.sample_stride", *v));
  if (auto v = f.take("flow.checkpoint_stride"))
    c.flow.checkpoint_stride =
        static_cast<int>(detail::to_long("flow.checkpoint_stride", *v));
  if (auto v = f.take("flow.regauge_stride"))
    c.flow.regauge_stride =
        static_cast<int>(detail::to_long("flow.regauge_stride", *v));
  c.flow.validate();

  if (auto v = f.take("gaugefix.tol"))
    c.gaugefix_tol = detail::to_double("gaugefix.tol", *v);
  if (auto v = f.take("gaugefix.max_newton"))
    c.gaugefix_max_newton =
        static_cast<int>(detail::to_long("gaugefix.max_newton", *v));

  if (auto v = f.take("ls.window_lo")) c.ls.lo = detail::to_double("ls.window_lo", *v);
  if (auto v = f.take("ls.window_hi")) c.ls.hi = detail::to_double("ls.window_hi", *v);
  if (auto v = f.take("ls.sigma")) c.ls.sigma = detail::to_double("ls.sigma", *v);

  if (auto v = f.take("threads"))
    c.threads = static_cast<int>(detail::to_long("threads", *v));
  if (auto v = f.take("verify.trials"))
    c.verify_trials = static_cast<int>(detail::to_long("verify.trials", *v));

  // strict: anything left over is a config error, named
  for (const auto& [k, v] : f.kv)
    if (!f.consumed.count(k))
      throw ConfigError("config: unknown key '" + k + "'");

  if (c.functional == FunctionalKind::YMH &&
      (c.group.variant != GroupKind::U1 || c.group.rep_charge != 1))
    throw ConfigError("config: ymh requires group u1 with rep_charge 1");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

// Site-sampled functional coefficients for the configured lattice.
inline FunctionalSpec make_functional_spec(const ExperimentConfig& c,
                                           const Lattice& lat) {
  FunctionalSpec spec;
  spec.kind = c.functional;
  spec.tau = c.tau;
  if (c.functional == FunctionalKind::Boson) {
    spec.m = c.functional_m_file.empty()
                 ? std::vector<double>(lat.n_sites(), c.functional_m_const)
                 : detail::load_site_table(c.functional_m_file, lat.n_sites());
    spec.s = c.functional_s_file.empty()
                 ? std::vector<double>(lat.n_sites(), c.functional_s_const)
                 : detail::load_site_table(c.functional_s_file, lat.n_sites());
  }
  return spec;
}

}  // namespace gaugeflow
