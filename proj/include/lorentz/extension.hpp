#pragma once

// Z^d-extension f(x, k) = (T x, k + psi(x)) over any BaseSystem: cocycle
// sums, first return to the zero cell, and the pathwise last-visit renewal
// identity 1 = sum_j 1{phi > n-j} o T^j * 1{S_j = 0}.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lorentz/lattice.hpp"
#include "lorentz/system.hpp"

namespace lorentz {

template <class State>
struct TrajectoryRecord {
  std::vector<State> points;                 // x, Tx, ..., T^n x
  std::vector<Cell> sums;                    // S_0 = 0, S_1, ..., S_n
  std::vector<std::uint64_t> symbols;        // symbol of T^j x, j < n
  std::size_t grazing_count = 0;

  [[nodiscard]] std::size_t length() const noexcept { return sums.empty() ? 0 : sums.size() - 1; }
};

template <BaseSystem S>
TrajectoryRecord<typename S::State> birkhoff_sum(const S& sys, typename S::State x, std::size_t n) {
  TrajectoryRecord<typename S::State> rec;
  rec.points.reserve(n + 1);
  rec.sums.reserve(n + 1);
  rec.symbols.reserve(n);
  rec.points.push_back(x);
  rec.sums.push_back(Cell{});
  for (std::size_t j = 0; j < n; ++j) {
    const StepResult step = sys.step(x);
    rec.symbols.push_back(step.symbol);
    rec.grazing_count += step.grazing ? 1 : 0;
    rec.sums.push_back(rec.sums.back() + step.jump);
    rec.points.push_back(x);
  }
  return rec;
}

/// First n in [1, cap] with S_n = 0; empty when the orbit has not returned
/// by cap (a right-censored observation).
struct ReturnTime {
  std::optional<std::size_t> time;
  std::size_t cap = 0;

  [[nodiscard]] bool censored() const noexcept { return !time.has_value(); }
};

template <BaseSystem S>
ReturnTime first_return_time(const S& sys, typename S::State x, std::size_t cap) {
  if (cap < 1) throw std::invalid_argument("first_return_time: cap must be >= 1");
  Cell sum;
  for (std::size_t n = 1; n <= cap; ++n) {
    sum += sys.step(x).jump;
    if (sum.is_zero()) return {n, cap};
  }
  return {std::nullopt, cap};
}

/// Evaluates sum_{j=0}^{n} 1{phi > n-j}(T^j x) 1{S_j = 0} term by term from
/// the recorded sums, where phi(T^j x) > n - j iff S_m != S_j for j < m <= n.
/// Returns the value of the sum (1 on every orbit).
inline std::size_t renewal_sum(const std::vector<Cell>& sums) {
  const std::size_t n = sums.empty() ? 0 : sums.size() - 1;
  std::unordered_map<Cell, std::size_t, CellHash> next_seen;
  std::vector<std::size_t> next_same(n + 1, n + 1);
  for (std::size_t j = n + 1; j-- > 0;) {
    auto [it, inserted] = next_seen.try_emplace(sums[j], j);
    if (!inserted) {
      next_same[j] = it->second;
      it->second = j;
    }
  }
  std::size_t total = 0;
  for (std::size_t j = 0; j <= n; ++j) {
    const bool at_zero = sums[j].is_zero();
    const bool no_return_before_n = next_same[j] > n;
    total += (at_zero && no_return_before_n) ? 1 : 0;
  }
  return total;
}

template <class State>
bool renewal_pathwise_check(const TrajectoryRecord<State>& rec) {
  return renewal_sum(rec.sums) == 1;
}

template <BaseSystem S>
bool renewal_pathwise_check(const S& sys, typename S::State x, std::size_t n) {
  return renewal_pathwise_check(birkhoff_sum(sys, x, n));
}

}  // namespace lorentz
