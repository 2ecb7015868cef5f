#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gaugeflow/errors.hpp"

namespace gaugeflow {

// Periodic hypercubic lattice for the flat torus T^d, d in {2,3,4}.
// Sites are indexed lexicographically (site-major, axis 0 fastest);
// a link is (site, direction), a plaquette is (site, mu < nu).
struct LatticeSpec {
  int d = 2;
  std::vector<int> extents;  // N_mu, each >= 3
  double spacing = 1.0;      // h > 0, length units

  void validate() const {
    if (d < 2 || d > 4) throw ConfigError("lattice: d must be 2, 3 or 4");
    if (static_cast<int>(extents.size()) != d)
      throw ConfigError("lattice: extents size must equal d");
    for (int n : extents)
      if (n < 3) throw ConfigError("lattice: extents must be >= 3");
    if (!(spacing > 0)) throw ConfigError("lattice: spacing must be positive");
  }
};

class Lattice {
 public:
  explicit Lattice(LatticeSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    strides_.resize(spec_.d);
    long s = 1;
    for (int mu = 0; mu < spec_.d; ++mu) {
      strides_[mu] = s;
      s *= spec_.extents[mu];
    }
    n_sites_ = s;
    // plaquette planes in lexicographic (mu, nu) order, mu < nu
    for (int mu = 0; mu < spec_.d; ++mu)
      for (int nu = mu + 1; nu < spec_.d; ++nu) planes_.push_back({mu, nu});
  }

  const LatticeSpec& spec() const { return spec_; }
  int dim() const { return spec_.d; }
  double h() const { return spec_.spacing; }
  int extent(int mu) const { return spec_.extents[mu]; }

  long n_sites() const { return n_sites_; }
  long n_links() const { return n_sites_ * spec_.d; }
  long n_plaquettes() const { return n_sites_ * static_cast<long>(planes_.size()); }
  int n_planes() const { return static_cast<int>(planes_.size()); }
  std::array<int, 2> plane(int p) const { return planes_[p]; }

  // volume element h^d
  double cell_volume() const {
    double v = 1.0;
    for (int mu = 0; mu < spec_.d; ++mu) v *= spec_.spacing;
    return v;
  }

  std::vector<int> coords(long site) const {
    std::vector<int> c(spec_.d);
    for (int mu = 0; mu < spec_.d; ++mu) {
      c[mu] = static_cast<int>((site / strides_[mu]) % spec_.extents[mu]);
    }
    return c;
  }

  long site(const std::vector<int>& c) const {
    long s = 0;
    for (int mu = 0; mu < spec_.d; ++mu) {
      int x = c[mu] % spec_.extents[mu];
      if (x < 0) x += spec_.extents[mu];
      s += static_cast<long>(x) * strides_[mu];
    }
    return s;
  }

  // periodic neighbor; shift(shift(x,mu,+1),mu,-1) == x
  long shift(long site, int mu, int sign) const {
    const long n = spec_.extents[mu];
    const long stride = strides_[mu];
    long x = (site / stride) % n;
    long rest = site - x * stride;
    x += (sign > 0 ? 1 : n - 1);
    x %= n;
    return rest + x * stride;
  }

  long link_index(long site, int mu) const { return site * spec_.d + mu; }
  long link_site(long link) const { return link / spec_.d; }
  int link_dir(long link) const { return static_cast<int>(link % spec_.d); }

  long plaquette_index(long site, int plane) const {
    return site * planes_.size() + plane;
  }
  long plaquette_site(long p) const { return p / planes_.size(); }
  int plaquette_plane(long p) const { return static_cast<int>(p % planes_.size()); }

  // The four oriented boundary links of plaquette (x; mu < nu), counterclockwise:
  //   (x, mu) forward, (x+mu, nu) forward, (x+nu, mu) reversed, (x, nu) reversed.
  struct OrientedLink {
    long link;
    bool forward;
  };
  std::array<OrientedLink, 4> plaquette_links(long p) const {
    const long x = plaquette_site(p);
    const auto [mu, nu] = planes_[plaquette_plane(p)];
    const long xmu = shift(x, mu, +1);
    const long xnu = shift(x, nu, +1);
    return {OrientedLink{link_index(x, mu), true},
            OrientedLink{link_index(xmu, nu), true},
            OrientedLink{link_index(xnu, mu), false},
            OrientedLink{link_index(x, nu), false}};
  }

 private:
  LatticeSpec spec_;
  std::vector<long> strides_;
  long n_sites_ = 0;
  std::vector<std::array<int, 2>> planes_;
};

}  // namespace gaugeflow
