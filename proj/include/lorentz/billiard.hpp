#pragma once

// Z^2-periodic Sinai billiard with circular scatterers: table validation,
// exact ray-circle collision search, the quotient collision map with its
// displacement cocycle, the invariant measure and symbolic itineraries.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorentz/lattice.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/system.hpp"

namespace lorentz::billiard {

inline constexpr double kSeparationMargin = 1e-9;
inline constexpr double kGrazingTolerance = 1e-8;
inline constexpr double kPushOff = 1e-12;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

[[nodiscard]] constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
[[nodiscard]] constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
[[nodiscard]] inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }

struct ScattererSpec {
  Vec2 center;    // in the fundamental cell [0,1)^2
  double radius;  // in (0, 1/2)
};

struct TableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OverlapError : TableError {
  OverlapError(std::size_t i, std::size_t j, Cell cell, double gap);
  std::size_t first;
  std::size_t second;
  Cell second_cell;
};

struct CorridorError : TableError {
  CorridorError(Cell direction, double offset, double width);
  Cell direction;
  double offset;  // position of the open strip along the normal
  double width;
};

struct NoCollisionWithinBound : std::runtime_error {
  explicit NoCollisionWithinBound(double bound);
  double bound;
};

class BilliardTable {
 public:
  explicit BilliardTable(std::vector<ScattererSpec> scatterers);

  [[nodiscard]] const std::vector<ScattererSpec>& scatterers() const noexcept { return scatterers_; }
  [[nodiscard]] std::size_t size() const noexcept { return scatterers_.size(); }
  [[nodiscard]] bool validated() const noexcept { return validated_; }
  [[nodiscard]] double horizon_bound() const noexcept { return horizon_bound_; }

  [[nodiscard]] double total_perimeter() const noexcept;
  /// Area of the free region inside one period cell.
  [[nodiscard]] double free_area() const noexcept;
  /// Mean free path under the invariant measure: pi * free area / perimeter.
  [[nodiscard]] double mean_free_path() const noexcept;

  /// Disc translates that can intersect a unit cell, as (scatterer, offset)
  /// pairs: cell q is touched by scatterer j placed in cell q + offset.
  struct Candidate {
    std::uint32_t scatterer;
    Cell offset;
  };
  [[nodiscard]] const std::vector<Candidate>& cell_candidates() const noexcept { return candidates_; }

 private:
  friend double validate_table(BilliardTable& table, int n_dirs, std::size_t n_rays, std::uint64_t seed);

  std::vector<ScattererSpec> scatterers_;
  std::vector<Candidate> candidates_;
  double horizon_bound_ = 0.0;
  bool validated_ = false;
};

/// The default two-disc finite-horizon table.
BilliardTable default_table();

/// Checks radii, pairwise disjointness (margin kSeparationMargin) and the
/// absence of corridors in every rational direction (p,q) with gcd 1 and
/// |p|,|q| <= n_dirs, then samples n_rays free flights. Marks the table
/// validated and returns the horizon bound (max sampled flight * 1.1).
double validate_table(BilliardTable& table, int n_dirs = 8, std::size_t n_rays = 1'000'000,
                      std::uint64_t seed = 0x5EED);

/// Reflected vector based on the boundary of one scatterer of the zero cell.
struct PhasePoint {
  std::uint32_t scatterer = 0;
  double theta = 0.0;  // boundary angle in [0, 2pi)
  double phi = 0.0;    // outgoing angle from the outward normal, in (-pi/2, pi/2)
};

struct ExtendedPhasePoint {
  PhasePoint base;
  Cell cell;
};

struct CollisionRecord {
  PhasePoint next;
  Cell psi;
  double flight = 0.0;
  bool grazing = false;
};

[[nodiscard]] inline Vec2 outward_normal(double theta) noexcept { return {std::cos(theta), std::sin(theta)}; }
[[nodiscard]] inline Vec2 direction_of(const PhasePoint& x) noexcept {
  return {std::cos(x.theta + x.phi), std::sin(x.theta + x.phi)};
}
[[nodiscard]] Vec2 position_of(const BilliardTable& table, const PhasePoint& x) noexcept;

/// Specular reflection v - 2<v,n>n; requires <v,n> < 0 and |n| = 1.
[[nodiscard]] Vec2 reflect(Vec2 incoming, Vec2 normal) noexcept;

/// Where a ray starts: on scatterer `scatterer` placed in `cell`, or free
/// (scatterer < 0, source cell taken as floor(position)).
struct RaySource {
  int scatterer = -1;
  Cell cell;
};

/// Earliest hit of the ray position + t*direction (t > 0) with a disc
/// translate, searched up to `max_flight`. The returned phase point is the
/// reflected vector reduced modulo Z^2; psi = hit cell - source cell.
[[nodiscard]] CollisionRecord next_collision(const BilliardTable& table, Vec2 position, Vec2 direction,
                                             RaySource source, double max_flight);
/// Same, bounded by the table's validated horizon.
[[nodiscard]] CollisionRecord next_collision(const BilliardTable& table, Vec2 position, Vec2 direction,
                                             RaySource source = {});

/// One application of the quotient collision map and its displacement.
[[nodiscard]] CollisionRecord billiard_map(const BilliardTable& table, const PhasePoint& x);
/// Preimage under the collision map: time_reversal . map . time_reversal.
[[nodiscard]] CollisionRecord inverse_billiard_map(const BilliardTable& table, const PhasePoint& x);

[[nodiscard]] ExtendedPhasePoint lorentz_map(const BilliardTable& table, const ExtendedPhasePoint& x);

[[nodiscard]] constexpr PhasePoint time_reversal(const PhasePoint& x) noexcept {
  return {x.scatterer, x.theta, -x.phi};
}

/// Draw from the normalized invariant measure cos(phi) ds dphi / (2 |dQ|).
[[nodiscard]] PhasePoint sample_mu_bar(const BilliardTable& table, RngStream& rng);

struct Symbol {
  std::uint32_t scatterer = 0;
  Cell psi;
  friend constexpr auto operator<=>(const Symbol&, const Symbol&) = default;
  [[nodiscard]] constexpr std::uint64_t code() const noexcept { return encode_symbol(scatterer, psi); }
};

struct Itinerary {
  int k_back = 0;
  std::vector<Symbol> symbols;  // symbols[j + k_back] for j = -k_back..k_fwd
  bool grazing = false;

  [[nodiscard]] const Symbol& at(int j) const { return symbols.at(static_cast<std::size_t>(j + k_back)); }
};

/// Collision symbols (scatterer, psi) of the orbit of x at times
/// -k_back..k_fwd.
[[nodiscard]] Itinerary itinerary(const BilliardTable& table, const PhasePoint& x, int k_back, int k_fwd);

/// The billiard as a base system for the generic extension machinery.
class BilliardSystem {
 public:
  using State = PhasePoint;

  explicit BilliardSystem(const BilliardTable& table);

  [[nodiscard]] State sample(const RngSpec& spec) const;
  StepResult step(State& x) const;
  StepResult step_back(State& x) const;
  [[nodiscard]] int dimension() const noexcept { return 2; }
  [[nodiscard]] const BilliardTable& table() const noexcept { return *table_; }

 private:
  const BilliardTable* table_;
};

static_assert(ReversibleSystem<BilliardSystem>);

}  // namespace lorentz::billiard
