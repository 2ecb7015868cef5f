#pragma once

#include <cmath>
#include <cstdint>

namespace gaugeflow {

// Counter-based generator: every value is a stateless hash of
// (seed, stream, counter), so per-site streams are reproducible no matter
// how sweeps are scheduled. Mixer is the splitmix64 finalizer.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  // Independent stream for e.g. a site or link index.
  CounterRng stream(std::uint64_t id) const {
    return CounterRng(seed_, mix(stream_ ^ (0x9e3779b97f4a7c15ULL + id)));
  }

  std::uint64_t next_u64() { return mix(seed_ ^ mix(stream_ ^ counter_++)); }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; draws two uniforms per call
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace gaugeflow
