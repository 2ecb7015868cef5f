#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "gaugeflow/checkpoint.hpp"
#include "gaugeflow/flow.hpp"

namespace gaugeflow {

// Trajectory CSV: fixed header, 17 significant digits, C locale formatting.
inline std::string trajectory_csv(const std::vector<FlowSample>& samples) {
  std::string out = "t,energy,grad_l2,grad_wneg1,dist\n";
  char line[256];
  for (const auto& s : samples) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t,
                  s.energy, s.grad_l2, s.grad_wneg1, s.dist_to_final);
    out += line;
  }
  return out;
}

inline void write_trajectory_csv(const std::string& path,
                                 const std::vector<FlowSample>& samples) {
  detail::atomic_write(path, trajectory_csv(samples));
}

inline std::vector<FlowSample> read_trajectory_csv(const std::string& path) {
  const std::string buf = detail::read_all(path);
  std::vector<FlowSample> samples;
  size_t pos = 0;
  bool header = true;
  while (pos < buf.size()) {
    size_t eol = buf.find('\n', pos);
    if (eol == std::string::npos) eol = buf.size();
    const std::string line = buf.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    if (header) {
      if (line != "t,energy,grad_l2,grad_wneg1,dist")
        throw IoError("trajectory csv: unexpected header in " + path);
      header = false;
      continue;
    }
    FlowSample s;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg,%lg", &s.t, &s.energy,
                    &s.grad_l2, &s.grad_wneg1, &s.dist_to_final) != 5)
      throw IoError("trajectory csv: malformed row in " + path);
    samples.push_back(s);
  }
  if (header) throw IoError("trajectory csv: empty file " + path);
  return samples;
}

}  // namespace gaugeflow
