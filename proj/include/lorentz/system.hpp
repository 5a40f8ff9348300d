#pragma once

#include <concepts>
#include <cstdint>

#include "lorentz/lattice.hpp"
#include "lorentz/rng.hpp"

namespace lorentz {

/// One application of the base map: the cocycle value emitted at the
/// departing point, the itinerary symbol of that point, and whether the step
/// passed within the grazing tolerance of a tangency.
struct StepResult {
  Cell jump;
  std::uint64_t symbol = 0;
  bool grazing = false;
};

// Symbol codes pack (scatterer or state index, jump) into 64 bits:
// [63..32] index, [31..16] jump.x, [15..0] jump.y (two's complement).
[[nodiscard]] constexpr std::uint64_t encode_symbol(std::uint32_t index, Cell jump) noexcept {
  return (static_cast<std::uint64_t>(index) << 32) |
         (static_cast<std::uint64_t>(static_cast<std::uint16_t>(jump.x)) << 16) |
         static_cast<std::uint64_t>(static_cast<std::uint16_t>(jump.y));
}
[[nodiscard]] constexpr std::uint32_t symbol_index(std::uint64_t code) noexcept {
  return static_cast<std::uint32_t>(code >> 32);
}
[[nodiscard]] constexpr Cell symbol_jump(std::uint64_t code) noexcept {
  return {static_cast<std::int16_t>(static_cast<std::uint16_t>(code >> 16)),
          static_cast<std::int16_t>(static_cast<std::uint16_t>(code))};
}

/// A probability-preserving base map together with its Z^d cocycle.
template <class S>
concept BaseSystem = requires(const S& sys, typename S::State& x, const RngSpec& spec) {
  typename S::State;
  { sys.sample(spec) } -> std::same_as<typename S::State>;
  { sys.step(x) } -> std::same_as<StepResult>;
  { sys.dimension() } -> std::convertible_to<int>;
};

/// A base system whose map can be inverted (needed for two-sided itinerary
/// windows). step_back moves x to its preimage and returns the step record
/// of the preimage (jump = cocycle value at the preimage).
template <class S>
concept ReversibleSystem = BaseSystem<S> && requires(const S& sys, typename S::State& x) {
  { sys.step_back(x) } -> std::same_as<StepResult>;
};

}  // namespace lorentz
