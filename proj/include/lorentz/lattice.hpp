#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <ostream>

namespace lorentz {

/// A point of the lattice Z^2 (also used for Z^1 with y == 0).
struct Cell {
  std::int64_t x = 0;
  std::int64_t y = 0;

  constexpr Cell& operator+=(const Cell& o) noexcept {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Cell& operator-=(const Cell& o) noexcept {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend constexpr Cell operator+(Cell a, const Cell& b) noexcept { return a += b; }
  friend constexpr Cell operator-(Cell a, const Cell& b) noexcept { return a -= b; }
  friend constexpr Cell operator-(const Cell& a) noexcept { return {-a.x, -a.y}; }
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;

  [[nodiscard]] constexpr bool is_zero() const noexcept { return x == 0 && y == 0; }
  [[nodiscard]] constexpr std::int64_t norm1() const noexcept {
    return (x < 0 ? -x : x) + (y < 0 ? -y : y);
  }
  [[nodiscard]] constexpr std::int64_t norm_inf() const noexcept {
    const auto ax = x < 0 ? -x : x;
    const auto ay = y < 0 ? -y : y;
    return ax > ay ? ax : ay;
  }
};

inline std::ostream& operator<<(std::ostream& os, const Cell& c) {
  return os << '(' << c.x << ',' << c.y << ')';
}

struct CellHash {
  std::size_t operator()(const Cell& c) const noexcept {
    auto h = static_cast<std::uint64_t>(c.x) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(c.y) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

}  // namespace lorentz
