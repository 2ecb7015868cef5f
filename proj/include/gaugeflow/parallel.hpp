#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace gaugeflow {

// Process-wide worker count for sweep parallelism. Reductions are chunked
// and combined in chunk order, so results are identical run to run for a
// fixed thread count.
inline int& thread_count() {
  static int n = [] {
    if (const char* env = std::getenv("GAUGEFLOW_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    return 1;
  }();
  return n;
}

inline void set_threads(int n) { thread_count() = std::max(1, n); }

template <class Body>
inline void parallel_for(long n, const Body& body) {
  const int nt = std::min<long>(thread_count(), n > 0 ? n : 1);
  if (nt <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(nt);
  const long chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const long lo = t * chunk;
    const long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, &body] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& w : workers) w.join();
}

// sum_i f(i) with a deterministic chunked reduction
template <class Fn>
inline double parallel_sum(long n, const Fn& f) {
  const int nt = std::min<long>(thread_count(), n > 0 ? n : 1);
  if (nt <= 1) {
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += f(i);
    return s;
  }
  const long chunk = (n + nt - 1) / nt;
  std::vector<double> partial(nt, 0.0);
  std::vector<std::thread> workers;
  workers.reserve(nt);
  for (int t = 0; t < nt; ++t) {
    const long lo = t * chunk;
    const long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([lo, hi, t, &partial, &f] {
      double s = 0.0;
      for (long i = lo; i < hi; ++i) s += f(i);
      partial[t] = s;
    });
  }
  for (auto& w : workers) w.join();
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace gaugeflow
