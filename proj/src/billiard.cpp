#include "lorentz/billiard.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

namespace lorentz::billiard {
namespace {

std::string overlap_message(std::size_t i, std::size_t j, Cell cell, double gap) {
  std::ostringstream os;
  os << "scatterers " << i << " and " << j << " (cell " << cell << ") overlap: gap " << gap
     << " <= margin " << kSeparationMargin;
  return os.str();
}

std::string corridor_message(Cell dir, double offset, double width) {
  std::ostringstream os;
  os << "infinite corridor in direction " << dir << " at normal offset " << offset << " (width " << width << ")";
  return os.str();
}

double wrap_angle(double a) noexcept {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

// Entry parameter of the ray into a disc, or +inf.
double ray_disc_entry(Vec2 p, Vec2 v, Vec2 center, double radius) noexcept {
  const Vec2 f = p - center;
  const double b = dot(f, v);
  if (b >= 0.0) return std::numeric_limits<double>::infinity();
  const double c = dot(f, f) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  // c / (-b + sqrt(disc)) is the smaller root without cancellation.
  const double t = c / (-b + std::sqrt(disc));
  return t > 0.0 ? t : std::numeric_limits<double>::infinity();
}

bool disc_touches_unit_cell(Vec2 center, double radius) noexcept {
  const double cx = std::clamp(center.x, 0.0, 1.0);
  const double cy = std::clamp(center.y, 0.0, 1.0);
  return std::hypot(center.x - cx, center.y - cy) <= radius;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) { return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b); }

// Union of the shadows of all discs on the normal of direction (p,q),
// reduced modulo the lattice period. Returns the widest uncovered gap.
std::pair<double, double> widest_gap(const std::vector<ScattererSpec>& discs, std::int64_t p, std::int64_t q) {
  const double len = std::hypot(static_cast<double>(p), static_cast<double>(q));
  const double period = 1.0 / len;
  const Vec2 normal{-static_cast<double>(q) / len, static_cast<double>(p) / len};

  std::vector<std::pair<double, double>> shadows;
  for (const auto& d : discs) {
    if (2.0 * d.radius >= period) return {0.0, 0.0};
    double s = std::fmod(dot(d.center, normal), period);
    if (s < 0.0) s += period;
    const double lo = s - d.radius;
    const double hi = s + d.radius;
    if (lo < 0.0) {
      shadows.emplace_back(0.0, hi);
      shadows.emplace_back(lo + period, period);
    } else if (hi > period) {
      shadows.emplace_back(lo, period);
      shadows.emplace_back(0.0, hi - period);
    } else {
      shadows.emplace_back(lo, hi);
    }
  }
  std::sort(shadows.begin(), shadows.end());
  double covered = 0.0;
  double best_gap = 0.0;
  double best_at = 0.0;
  for (const auto& [lo, hi] : shadows) {
    if (lo > covered && lo - covered > best_gap) {
      best_gap = lo - covered;
      best_at = 0.5 * (lo + covered);
    }
    covered = std::max(covered, hi);
  }
  if (period - covered > best_gap) {
    best_gap = period - covered;
    best_at = 0.5 * (period + covered);
  }
  return {best_gap, best_at};
}

}  // namespace

OverlapError::OverlapError(std::size_t i, std::size_t j, Cell cell, double gap)
    : TableError(overlap_message(i, j, cell, gap)), first(i), second(j), second_cell(cell) {}

CorridorError::CorridorError(Cell dir, double off, double w)
    : TableError(corridor_message(dir, off, w)), direction(dir), offset(off), width(w) {}

NoCollisionWithinBound::NoCollisionWithinBound(double b)
    : std::runtime_error("no collision within horizon bound " + std::to_string(b) + "; table is not finite-horizon"),
      bound(b) {}

BilliardTable::BilliardTable(std::vector<ScattererSpec> scatterers) : scatterers_(std::move(scatterers)) {
  if (scatterers_.empty()) throw TableError("table has no scatterers");
  for (std::size_t i = 0; i < scatterers_.size(); ++i) {
    const auto& s = scatterers_[i];
    if (!(s.radius > 0.0 && s.radius < 0.5))
      throw TableError("scatterer " + std::to_string(i) + ": radius must lie in (0, 1/2)");
    if (!(s.center.x >= 0.0 && s.center.x < 1.0 && s.center.y >= 0.0 && s.center.y < 1.0))
      throw TableError("scatterer " + std::to_string(i) + ": center must lie in [0,1)^2");
  }
  for (std::uint32_t j = 0; j < scatterers_.size(); ++j) {
    for (std::int64_t ox = -2; ox <= 2; ++ox) {
      for (std::int64_t oy = -2; oy <= 2; ++oy) {
        const Vec2 c = scatterers_[j].center + Vec2{static_cast<double>(ox), static_cast<double>(oy)};
        if (disc_touches_unit_cell(c, scatterers_[j].radius)) candidates_.push_back({j, Cell{ox, oy}});
      }
    }
  }
}

double BilliardTable::total_perimeter() const noexcept {
  double total = 0.0;
  for (const auto& s : scatterers_) total += kTwoPi * s.radius;
  return total;
}

double BilliardTable::free_area() const noexcept {
  double area = 1.0;
  for (const auto& s : scatterers_) area -= kPi * s.radius * s.radius;
  return area;
}

double BilliardTable::mean_free_path() const noexcept { return kPi * free_area() / total_perimeter(); }

BilliardTable default_table() { return BilliardTable({{{0.0, 0.0}, 0.45}, {{0.5, 0.5}, 0.2}}); }

Vec2 position_of(const BilliardTable& table, const PhasePoint& x) noexcept {
  const auto& s = table.scatterers()[x.scatterer];
  return s.center + s.radius * outward_normal(x.theta);
}

Vec2 reflect(Vec2 incoming, Vec2 normal) noexcept { return incoming - (2.0 * dot(incoming, normal)) * normal; }

CollisionRecord next_collision(const BilliardTable& table, Vec2 position, Vec2 direction, RaySource source,
                               double max_flight) {
  const auto& discs = table.scatterers();
  Cell q{static_cast<std::int64_t>(std::floor(position.x)), static_cast<std::int64_t>(std::floor(position.y))};
  const Cell source_cell = source.scatterer >= 0 ? source.cell : q;

  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::int64_t step_x = direction.x > 0.0 ? 1 : -1;
  const std::int64_t step_y = direction.y > 0.0 ? 1 : -1;
  double t_max_x = direction.x > 0.0   ? (static_cast<double>(q.x + 1) - position.x) / direction.x
                   : direction.x < 0.0 ? (position.x - static_cast<double>(q.x)) / -direction.x
                                       : inf;
  double t_max_y = direction.y > 0.0   ? (static_cast<double>(q.y + 1) - position.y) / direction.y
                   : direction.y < 0.0 ? (position.y - static_cast<double>(q.y)) / -direction.y
                                       : inf;
  const double t_delta_x = direction.x != 0.0 ? 1.0 / std::abs(direction.x) : inf;
  const double t_delta_y = direction.y != 0.0 ? 1.0 / std::abs(direction.y) : inf;

  double best_t = inf;
  std::uint32_t best_disc = 0;
  Cell best_cell;
  double t_enter = 0.0;
  while (t_enter <= max_flight) {
    const double t_exit = std::min(t_max_x, t_max_y);
    for (const auto& cand : table.cell_candidates()) {
      const Cell cell = q + cand.offset;
      if (static_cast<int>(cand.scatterer) == source.scatterer && cell == source_cell) continue;
      const Vec2 center =
          discs[cand.scatterer].center + Vec2{static_cast<double>(cell.x), static_cast<double>(cell.y)};
      const double t = ray_disc_entry(position, direction, center, discs[cand.scatterer].radius);
      if (t < best_t) {
        best_t = t;
        best_disc = cand.scatterer;
        best_cell = cell;
      }
    }
    if (best_t <= t_exit) break;
    t_enter = t_exit;
    if (t_max_x < t_max_y) {
      q.x += step_x;
      t_max_x += t_delta_x;
    } else {
      q.y += step_y;
      t_max_y += t_delta_y;
    }
  }
  if (!(best_t <= max_flight)) throw NoCollisionWithinBound(max_flight);

  const auto& disc = discs[best_disc];
  const Vec2 center = disc.center + Vec2{static_cast<double>(best_cell.x), static_cast<double>(best_cell.y)};
  const Vec2 hit = position + best_t * direction;
  const Vec2 offset = hit - center;
  const double theta = wrap_angle(std::atan2(offset.y, offset.x));
  const Vec2 normal = outward_normal(theta);
  const Vec2 out = reflect(direction, normal);
  const double phi = std::atan2(cross(normal, out), dot(normal, out));

  CollisionRecord rec;
  rec.next = {best_disc, theta, phi};
  rec.psi = best_cell - source_cell;
  rec.flight = best_t;
  rec.grazing = std::abs(dot(normal, direction)) < kGrazingTolerance;
  return rec;
}

CollisionRecord next_collision(const BilliardTable& table, Vec2 position, Vec2 direction, RaySource source) {
  return next_collision(table, position, direction, source, table.horizon_bound());
}

CollisionRecord billiard_map(const BilliardTable& table, const PhasePoint& x) {
  const Vec2 v = direction_of(x);
  const Vec2 p = position_of(table, x) + kPushOff * v;
  return next_collision(table, p, v, RaySource{static_cast<int>(x.scatterer), Cell{}});
}

CollisionRecord inverse_billiard_map(const BilliardTable& table, const PhasePoint& x) {
  CollisionRecord rec = billiard_map(table, time_reversal(x));
  rec.next = time_reversal(rec.next);
  rec.psi = -rec.psi;
  return rec;
}

ExtendedPhasePoint lorentz_map(const BilliardTable& table, const ExtendedPhasePoint& x) {
  const auto rec = billiard_map(table, x.base);
  return {rec.next, x.cell + rec.psi};
}

PhasePoint sample_mu_bar(const BilliardTable& table, RngStream& rng) {
  const auto& discs = table.scatterers();
  double pick = rng.uniform() * table.total_perimeter();
  std::uint32_t index = 0;
  for (; index + 1 < discs.size(); ++index) {
    pick -= kTwoPi * discs[index].radius;
    if (pick < 0.0) break;
  }
  const double theta = kTwoPi * rng.uniform();
  const double phi = std::asin(2.0 * rng.uniform() - 1.0);
  return {index, theta, phi};
}

double validate_table(BilliardTable& table, int n_dirs, std::size_t n_rays, std::uint64_t seed) {
  table.validated_ = false;
  const auto& discs = table.scatterers();

  for (std::size_t i = 0; i < discs.size(); ++i) {
    for (std::size_t j = i; j < discs.size(); ++j) {
      for (std::int64_t mx = -1; mx <= 1; ++mx) {
        for (std::int64_t my = -1; my <= 1; ++my) {
          const Cell m{mx, my};
          if (i == j && m.is_zero()) continue;
          const Vec2 cj = discs[j].center + Vec2{static_cast<double>(mx), static_cast<double>(my)};
          const double gap = norm(cj - discs[i].center) - discs[i].radius - discs[j].radius;
          if (!(gap > kSeparationMargin)) throw OverlapError(i, j, m, gap);
        }
      }
    }
  }

  for (std::int64_t p = 0; p <= n_dirs; ++p) {
    for (std::int64_t q = -n_dirs; q <= n_dirs; ++q) {
      if (p == 0 && q <= 0) continue;
      if (gcd64(p, q) != 1) continue;
      const auto [gap, at] = widest_gap(discs, p, q);
      if (gap > kSeparationMargin) throw CorridorError(Cell{p, q}, at, gap);
    }
  }

  // Free flights from uniformly spread boundary points and angles; uniform
  // phi over-samples near-tangent departures, which carry the longest flights.
  constexpr double kSearchLimit = 64.0;
  double longest = 0.0;
  for (std::size_t r = 0; r < n_rays; ++r) {
    RngStream rng(RngSpec{seed, r});
    PhasePoint x = sample_mu_bar(table, rng);
    x.phi = (rng.uniform() - 0.5) * kPi;
    const Vec2 v = direction_of(x);
    const Vec2 start = position_of(table, x) + kPushOff * v;
    try {
      const auto rec = next_collision(table, start, v, RaySource{static_cast<int>(x.scatterer), Cell{}}, kSearchLimit);
      longest = std::max(longest, rec.flight);
    } catch (const NoCollisionWithinBound&) {
      throw TableError("sampled free flight exceeds " + std::to_string(kSearchLimit) +
                       ": corridor beyond the enumerated directions");
    }
  }
  table.horizon_bound_ = 1.1 * longest;
  table.validated_ = true;
  return table.horizon_bound_;
}

Itinerary itinerary(const BilliardTable& table, const PhasePoint& x, int k_back, int k_fwd) {
  Itinerary it;
  it.k_back = k_back;
  it.symbols.resize(static_cast<std::size_t>(k_back + k_fwd + 1));
  auto tangent = [](const PhasePoint& y) { return std::abs(std::cos(y.phi)) < kGrazingTolerance; };
  it.grazing = tangent(x);

  PhasePoint y = x;
  for (int j = 0; j <= k_fwd; ++j) {
    const auto rec = billiard_map(table, y);
    it.symbols[static_cast<std::size_t>(j + k_back)] = {y.scatterer, rec.psi};
    it.grazing = it.grazing || rec.grazing;
    y = rec.next;
  }
  y = x;
  for (int j = -1; j >= -k_back; --j) {
    const auto rec = inverse_billiard_map(table, y);
    y = rec.next;
    it.symbols[static_cast<std::size_t>(j + k_back)] = {y.scatterer, rec.psi};
    it.grazing = it.grazing || rec.grazing;
  }
  return it;
}

BilliardSystem::BilliardSystem(const BilliardTable& table) : table_(&table) {
  if (!table.validated()) throw TableError("billiard system requires a validated table");
}

PhasePoint BilliardSystem::sample(const RngSpec& spec) const {
  RngStream rng(spec);
  return sample_mu_bar(*table_, rng);
}

StepResult BilliardSystem::step(PhasePoint& x) const {
  const auto rec = billiard_map(*table_, x);
  StepResult out{rec.psi, Symbol{x.scatterer, rec.psi}.code(), rec.grazing};
  x = rec.next;
  return out;
}

StepResult BilliardSystem::step_back(PhasePoint& x) const {
  const auto rec = inverse_billiard_map(*table_, x);
  x = rec.next;
  return {rec.psi, Symbol{x.scatterer, rec.psi}.code(), rec.grazing};
}

}  // namespace lorentz::billiard
