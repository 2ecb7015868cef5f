#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gaugeflow/errors.hpp"
#include "gaugeflow/flow.hpp"

namespace gaugeflow {

enum class RateClass { Exponential, PowerLaw, Undetermined };

inline const char* to_string(RateClass c) {
  switch (c) {
    case RateClass::Exponential: return "exponential";
    case RateClass::PowerLaw: return "power_law";
    case RateClass::Undetermined: return "undetermined";
  }
  return "?";
}

struct LSEstimate {
  double theta = 0.0;
  double Z = 0.0;  // infimum-tightened over the fit window
  double sigma_window = std::numeric_limits<double>::infinity();
  double fit_r2 = 0.0;
  int n_points = 0;
  RateClass rate_class = RateClass::Undetermined;
  bool theta_in_guaranteed_range = true;  // [0.4, 0.99] report range
};

struct LSWindow {
  double lo = 1e-10;  // in E - E_inf
  double hi = 1e-3;
  double sigma = std::numeric_limits<double>::infinity();
};

struct PathBoundReport {
  double numeric_length = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
};

struct RateReport {
  RateClass rate_class = RateClass::Undetermined;
  double lambda = 0.0;  // exponential rate (E - E_inf ~ A exp(-2 lambda t))
  double beta = 0.0;    // power-law exponent
  double r2_exponential = 0.0;
  double r2_power = 0.0;
  double mu_reference = 0.0;  // slice-spectrum comparison value, 0 if absent
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x,
                             const std::vector<double>& y) {
  const size_t n = x.size();
  double sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

inline void check_e_inf(const std::vector<FlowSample>& samples, double e_inf) {
  double emin = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) emin = std::min(emin, s.energy);
  if (e_inf > emin + 1e-14 * std::max(1.0, std::abs(emin)))
    throw InsufficientDataError("lojasiewicz: e_inf exceeds the recorded minimum");
}

inline std::vector<size_t> window_indices(const std::vector<FlowSample>& samples,
                                          double e_inf, const LSWindow& w) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < samples.size(); ++i) {
    const double de = samples[i].energy - e_inf;
    if (de >= w.lo && de <= w.hi && samples[i].dist_to_final <= w.sigma)
      idx.push_back(i);
  }
  return idx;
}

}  // namespace detail

// Fit |M| = Z (E - E_inf)^theta on the window, then tighten Z to the infimum
// of |M| / (E - E_inf)^theta so the inequality holds with equality at the
// worst recorded sample. use_wneg1 selects the dual-norm column.
inline LSEstimate ls_estimate(const std::vector<FlowSample>& samples, double e_inf,
                              const LSWindow& w = {}, bool use_wneg1 = false) {
  detail::check_e_inf(samples, e_inf);
  auto idx = detail::window_indices(samples, e_inf, w);
  std::vector<double> lx, ly;
  for (size_t i : idx) {
    const double de = samples[i].energy - e_inf;
    const double gn = use_wneg1 ? samples[i].grad_wneg1 : samples[i].grad_l2;
    if (de > 0 && gn > 0) {
      lx.push_back(std::log(de));
      ly.push_back(std::log(gn));
    }
  }
  if (lx.size() < 10)
    throw InsufficientDataError("ls_estimate: fewer than 10 samples in window");

  auto fit = detail::least_squares(lx, ly);
  LSEstimate est;
  est.theta = fit.slope;
  est.fit_r2 = fit.r2;
  est.n_points = static_cast<int>(lx.size());
  est.sigma_window = w.sigma;
  est.theta_in_guaranteed_range = est.theta >= 0.4 && est.theta <= 0.99;
  // report-range clamp; the continuum guarantee theta in [1/2, 1) need not
  // hold on the lattice
  const double theta_c = std::min(std::max(est.theta, 1e-6), 1.0 - 1e-6);
  double zmin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < lx.size(); ++i)
    zmin = std::min(zmin, std::exp(ly[i] - theta_c * lx[i]));
  est.Z = zmin;
  return est;
}

// Minimum over the window of |M| / (Z (E - E_inf)^theta); >= 1 means the
// gradient inequality holds on the sampled orbit.
inline double verify_inequality(const std::vector<FlowSample>& samples, double theta,
                                double Z, double e_inf, const LSWindow& w = {},
                                bool use_wneg1 = false) {
  detail::check_e_inf(samples, e_inf);
  auto idx = detail::window_indices(samples, e_inf, w);
  double margin = std::numeric_limits<double>::infinity();
  int n = 0;
  for (size_t i : idx) {
    const double de = samples[i].energy - e_inf;
    const double gn = use_wneg1 ? samples[i].grad_wneg1 : samples[i].grad_l2;
    if (de > 0 && gn > 0) {
      margin = std::min(margin, gn / (Z * std::pow(de, theta)));
      ++n;
    }
  }
  if (n < 1) throw InsufficientDataError("verify_inequality: empty window");
  return margin;
}

// Numeric path length from the first in-window sample against the closed
// form (E0 - E_inf)^(1-theta) / (Z (1-theta)).
inline PathBoundReport path_length_bound(const std::vector<FlowSample>& samples,
                                         double theta, double Z, double e_inf,
                                         const LSWindow& w = {}) {
  if (!(theta < 1.0))
    throw InsufficientDataError("path_length_bound: requires theta < 1");
  detail::check_e_inf(samples, e_inf);
  auto idx = detail::window_indices(samples, e_inf, w);
  if (idx.empty())
    throw InsufficientDataError("path_length_bound: empty window");
  const size_t i0 = idx.front();
  PathBoundReport rep;
  for (size_t i = i0; i + 1 < samples.size(); ++i) {
    const double dt = samples[i + 1].t - samples[i].t;
    rep.numeric_length +=
        0.5 * (samples[i].grad_l2 + samples[i + 1].grad_l2) * dt;
  }
  const double de0 = samples[i0].energy - e_inf;
  rep.bound = std::pow(de0, 1.0 - theta) / (Z * (1.0 - theta));
  rep.ratio = rep.bound > 0 ? rep.numeric_length / rep.bound
                            : std::numeric_limits<double>::infinity();
  return rep;
}

// Exponential-versus-power-law dichotomy on the energy tail. Exponential is
// accepted when its fit wins at r^2 >= 0.99 and, when a slice spectrum is
// supplied, the fitted rate matches mu within 10 percent.
inline RateReport classify_rate(const std::vector<FlowSample>& samples, double e_inf,
                                double mu_reference = 0.0, const LSWindow& w = {}) {
  detail::check_e_inf(samples, e_inf);
  auto idx = detail::window_indices(samples, e_inf, w);
  std::vector<double> t, lde, lt;
  for (size_t i : idx) {
    const double de = samples[i].energy - e_inf;
    if (de > 0 && samples[i].t > 0) {
      t.push_back(samples[i].t);
      lde.push_back(std::log(de));
      lt.push_back(std::log(samples[i].t));
    }
  }
  RateReport rep;
  rep.mu_reference = mu_reference;
  if (t.size() < 10) return rep;  // Undetermined

  auto fexp = detail::least_squares(t, lde);   // ln dE = ln A - 2 lambda t
  auto fpow = detail::least_squares(lt, lde);  // ln dE = ln C - beta ln t
  rep.lambda = -0.5 * fexp.slope;
  rep.beta = -fpow.slope;
  rep.r2_exponential = fexp.r2;
  rep.r2_power = fpow.r2;

  const bool exp_ok = fexp.r2 >= 0.99 && fexp.r2 >= fpow.r2 && rep.lambda > 0;
  const bool mu_ok = mu_reference <= 0.0 ||
                     std::abs(rep.lambda - mu_reference) <= 0.1 * mu_reference;
  if (exp_ok && mu_ok) {
    rep.rate_class = RateClass::Exponential;
  } else if (fpow.r2 >= 0.99 && fpow.r2 > fexp.r2 && rep.beta > 0) {
    rep.rate_class = RateClass::PowerLaw;
  }
  return rep;
}

struct EInfEstimate {
  double e_final = 0.0;
  double e_aitken = 0.0;
  double discrepancy = 0.0;
  std::string method = "aitken";
};

// Limit energy: final recorded value refined by Aitken delta-squared on the
// energy tail; the discrepancy between the two is reported, not hidden.
inline EInfEstimate estimate_e_inf(const std::vector<FlowSample>& samples) {
  if (samples.empty()) throw InsufficientDataError("estimate_e_inf: no samples");
  EInfEstimate est;
  est.e_final = samples.back().energy;
  est.e_aitken = est.e_final;
  const size_t n = samples.size();
  if (n >= 3) {
    const double e0 = samples[n - 3].energy;
    const double e1 = samples[n - 2].energy;
    const double e2 = samples[n - 1].energy;
    const double den = (e2 - e1) - (e1 - e0);
    if (std::abs(den) > 1e-300) {
      const double aitken = e2 - (e2 - e1) * (e2 - e1) / den;
      // only trust the extrapolation when it stays below the tail
      if (aitken <= e2 + 1e-14 * std::max(1.0, std::abs(e2)))
        est.e_aitken = aitken;
    }
  }
  est.discrepancy = std::abs(est.e_aitken - est.e_final);
  return est;
}

}  // namespace gaugeflow
