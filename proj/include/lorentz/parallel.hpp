#pragma once

// Ensemble execution. A per-sample kernel is evaluated either by the serial
// reference loop or by the OpenMP loop; both fill the same indexed output
// vector, and every reduction downstream runs over that vector in a fixed
// order, so results do not depend on the policy or on the worker count.

#include <cstddef>
#include <exception>
#include <numeric>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lorentz {

enum class Exec { serial, parallel };

struct ExecPolicy {
  Exec mode = Exec::parallel;
  int workers = 0;  // 0: OpenMP default

  static ExecPolicy serial() { return {Exec::serial, 1}; }
  static ExecPolicy threads(int n) { return {Exec::parallel, n}; }
};

inline int available_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Serial reference: out[i] = kernel(i) in index order.
template <class T, class Kernel>
std::vector<T> serial_map(std::size_t n, Kernel&& kernel) {
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(kernel(i));
  return out;
}

/// OpenMP version of serial_map. An exception thrown by kernel(i) is
/// rethrown after the loop; when several samples fail, the lowest index wins
/// so the reported error is schedule independent.
template <class T, class Kernel>
std::vector<T> parallel_map(std::size_t n, Kernel&& kernel, int workers = 0) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  bool any_error = false;
  const auto count = static_cast<long long>(n);
#ifdef _OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 256) num_threads(threads) reduction(|| : any_error)
#endif
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = kernel(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
      any_error = true;
    }
  }
  (void)workers;
  if (any_error) {
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return out;
}

template <class T, class Kernel>
std::vector<T> ensemble_map(std::size_t n, Kernel&& kernel, ExecPolicy policy) {
  if (policy.mode == Exec::serial) return serial_map<T>(n, std::forward<Kernel>(kernel));
  return parallel_map<T>(n, std::forward<Kernel>(kernel), policy.workers);
}

/// Pairwise (cascade) summation with a fixed tree: blocks of 64 summed left
/// to right, then halves combined recursively.
inline double pairwise_sum(std::span<const double> xs) {
  constexpr std::size_t kLeaf = 64;
  if (xs.size() <= kLeaf) return std::accumulate(xs.begin(), xs.end(), 0.0);
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

template <class T, class Proj>
double pairwise_sum(std::span<const T> xs, Proj&& proj) {
  std::vector<double> vals;
  vals.reserve(xs.size());
  for (const auto& x : xs) vals.push_back(proj(x));
  return pairwise_sum(std::span<const double>(vals));
}

}  // namespace lorentz
