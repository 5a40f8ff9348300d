#include "doctest.h"

#include <cmath>

#include "lorentz/billiard.hpp"
#include "lorentz/observables.hpp"

using namespace lorentz;
using namespace lorentz::obs;

namespace {

const billiard::BilliardTable& table() {
  static const billiard::BilliardTable t = [] {
    auto tab = billiard::default_table();
    billiard::validate_table(tab, 8, 200'000);
    return tab;
  }();
  return t;
}

// depth-1 scatterer-key local over the two discs of the default table
CylinderFunction neighbour_local() {
  std::map<Window, double> t;
  for (std::uint64_t a = 0; a < 2; ++a)
    for (std::uint64_t s = 0; s < 2; ++s)
      for (std::uint64_t b = 0; b < 2; ++b) t[{a, s, b}] = 1.0 + 0.5 * double(s) + (a == b ? 0.25 : 0.0);
  return CylinderFunction(1, SymbolKey::scatterer, t, 0.0, 2);
}

}  // namespace

TEST_CASE("geometric profile sums in closed form") {
  for (const double rho : {0.3, 0.5, 0.8}) {
    const auto p2 = CellWeightProfile::geometric(-2.0, rho, 2);
    const auto s2 = p2.abs_sum();
    const double want = 2.0 * std::pow((1 + rho) / (1 - rho), 2);
    CHECK(s2.finite);
    CHECK(std::abs(s2.value - want) < 1e-10 * want);
    CHECK(std::abs(s2.partial - want) < 1e-10 * want);
    CHECK(p2.total() == doctest::Approx(-want).epsilon(1e-12));
    const auto s1 = CellWeightProfile::geometric(1.0, rho, 1).abs_sum();
    CHECK(std::abs(s1.value - (1 + rho) / (1 - rho)) < 1e-10);
  }
}

TEST_CASE("geometric tails and truncation") {
  const auto p = CellWeightProfile::geometric(1.0, 0.5, 2);
  for (const std::int64_t r : {0, 3, 10}) {
    CHECK(p.partial_abs_sum(r) + p.tail_abs_sum(r) == doctest::Approx(9.0).epsilon(1e-13));
  }
  CHECK(p.shell_count(0) == 1);
  CHECK(p.shell_count(5) == 20);
  const auto cut = p.truncate(1e-4);
  CHECK(cut.tail <= 1e-4 * 9.0);
  CHECK(p.tail_abs_sum(cut.radius - 1) > 1e-4 * 9.0);
  CHECK(cut.cells.size() == static_cast<std::size_t>(2 * cut.radius * (cut.radius + 1) + 1));
  CHECK(p.weight({2, -1}) == 0.125);
}

TEST_CASE("power-law profiles") {
  const auto ok = CellWeightProfile::power_law(1.0, 3.0, 2).abs_sum();
  CHECK(ok.finite);
  CHECK(ok.value == doctest::Approx(1.0 + 4.0 * (std::riemann_zeta(2.0) - std::riemann_zeta(3.0))).epsilon(1e-12));
  const auto bad = CellWeightProfile::power_law(1.0, 1.5, 2);
  const auto s = bad.abs_sum();
  CHECK_FALSE(s.finite);
  CHECK(std::isinf(s.value));
  CHECK(s.partial > 100.0);
  CHECK_FALSE(s.method.empty());
}

TEST_CASE("non-summable profiles are rejected before any sampling") {
  auto tab = table();
  const billiard::BilliardSystem sys(tab);
  CHECK_THROWS_AS(make_observable(sys, CellWeightProfile::power_law(1.0, 2.0, 2), CylinderFunction::constant(1.0),
                                  {}, 2.0, 1000, 1),
                  HypothesisFailed);
  const Observable wide(CellWeightProfile::power_law(1.0, 1.0, 2), CylinderFunction::constant(1.0));
  const auto r = hypothesis_check(indicator_zero_cell(), wide);
  CHECK_FALSE(r.passed());
  CHECK_THROWS_AS(certify(indicator_zero_cell(), wide), HypothesisFailed);
  const auto good = hypothesis_check(indicator_zero_cell(), indicator_zero_cell());
  CHECK(good.passed());
  CHECK(good.u_sup_sum == 1.0);
}

TEST_CASE("cylinder evaluation and keys") {
  const auto g = neighbour_local();
  CHECK(g.sup_norm() == 1.75);
  const auto code = [](std::uint32_t s, Cell j) { return encode_symbol(s, j); };
  const Window w{code(1, {1, 0}), code(0, {0, 0}), code(1, {-1, 1})};
  CHECK(g(w) == 1.25);
  CHECK(g.at(Window{0, code(1, {1, 0}), code(1, {0, 0}), code(0, {-1, 1})}, 2) == 1.5);
  CHECK_THROWS_AS((void)g(Window{0, 0}), std::invalid_argument);
  const CylinderFunction full(0, SymbolKey::full, {{{code(0, {1, 0})}, 3.0}}, -1.0);
  CHECK(full(Window{code(0, {1, 0})}) == 3.0);
  CHECK(full(Window{code(0, {0, 1})}) == -1.0);
  CHECK(full.sup_norm() == 3.0);
  CHECK(CylinderFunction::constant(2.5).is_constant());
}

TEST_CASE("envelopes of a complete table") {
  const auto g = neighbour_local();
  const auto lo = g.envelope(0, -1);
  const auto hi = g.envelope(0, +1);
  CHECK(lo.depth() == 0);
  CHECK(lo.table().size() == 2);
  CHECK(lo.table().at({0}) == 1.0);
  CHECK(lo.table().at({1}) == 1.5);
  CHECK(hi.table().at({0}) == 1.25);
  CHECK(hi.table().at({1}) == 1.75);
  CHECK(g.envelope(1, -1).table() == g.table());
}

TEST_CASE("envelopes see the fallback of an incomplete table") {
  const CylinderFunction g(1, SymbolKey::scatterer, {{{0, 0, 0}, 2.0}, {{1, 0, 1}, 3.0}}, -1.0, 2);
  const auto lo = g.envelope(0, -1);
  const auto hi = g.envelope(0, +1);
  CHECK(lo.table().at({0}) == -1.0);
  CHECK(hi.table().at({0}) == 3.0);
  CHECK(lo.fallback() == -1.0);
  const auto [a, b] = g.range_on_atom(Window{0, 0, 0}, 0, 0);
  CHECK(a == -1.0);
  CHECK(b == 3.0);
  const auto [c, d] = g.range_on_atom(Window{0, 0, 0}, 1, 1);
  CHECK(c == 2.0);
  CHECK(d == 2.0);
}

TEST_CASE("separation time and the ultrametric") {
  const billiard::BilliardSystem sys(table());
  const SeparationParams params{0.5, 24};
  std::size_t tested = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto x = sys.sample(RngSpec{31, i});
    auto y = x;
    auto z = x;
    y.theta += 1e-7;
    z.theta += 2e-7 * (i % 2 == 0 ? 1.0 : -0.3);
    z.phi = std::clamp(z.phi + 3e-8, -1.5, 1.5);
    const auto sxy = separation_time(table(), x, y, params.cap);
    const auto syz = separation_time(table(), y, z, params.cap);
    const auto sxz = separation_time(table(), x, z, params.cap);
    if (sxy.grazing || syz.grazing || sxz.grazing) continue;
    ++tested;
    CHECK(sxz.s >= std::min(sxy.s, syz.s));
    const double dxz = d_theta(table(), x, z, params);
    CHECK(dxz <= std::max(d_theta(table(), x, y, params), d_theta(table(), y, z, params)));
    CHECK(d_theta(table(), x, y, params) == d_theta(table(), y, x, params));
  }
  CHECK(tested > 150);
  const auto x = sys.sample(RngSpec{31, 0});
  CHECK(d_theta(table(), x, x, params) == 0.0);
  CHECK(separation_time(table(), x, x, 5).reached_cap);
  // points on different scatterers are separated at time 0
  auto far = x;
  far.scatterer = 1 - x.scatterer;
  CHECK(separation_time(table(), x, far, 5).s == 0);
  CHECK(d_theta(table(), x, far, params) == 1.0);
}

TEST_CASE("lipschitz bounds of cylinder functions") {
  const auto g = neighbour_local();
  const SeparationParams params{0.5, 24};
  const auto est = lipschitz_estimate(table(), g, params, 2000, 41);
  REQUIRE(est.upper_bound.has_value());
  CHECK(*est.upper_bound == doctest::Approx(2.0 * 1.75 / 0.5));
  CHECK(est.lower_bound <= *est.upper_bound + 1e-12);
  CHECK(est.lower_bound > 0.0);
  CHECK(est.pairs_used > 1500);
  const auto flat = lipschitz_estimate(table(), CylinderFunction::constant(3.0), params, 200, 41);
  CHECK(flat.lower_bound == 0.0);
  const auto u = Observable(CellWeightProfile::geometric(1.0, 0.5, 2), g);
  CHECK(u.lipschitz_bound(params) == doctest::Approx(9.0 * 7.0));
}

TEST_CASE("continuity moduli") {
  const billiard::BilliardSystem sys(table());
  const auto g = neighbour_local();
  const auto x = sys.sample(RngSpec{51, 7});
  const auto m1 = continuity_modulus(table(), g, x, 1, 1);
  CHECK(m1.exact);
  CHECK(m1.value == 0.0);
  const auto m0 = continuity_modulus(table(), g, x, 0, 0);
  CHECK(m0.value == 0.25);
  const PointFunction f = [&](const billiard::PhasePoint& p) { return evaluate(table(), g, p); };
  const auto sampled = continuity_modulus(table(), f, x, 1, 1, 50, 3);
  CHECK(sampled.value == 0.0);
  CHECK_FALSE(sampled.exact);
}

TEST_CASE("observable integrals") {
  const billiard::BilliardSystem sys(table());
  const auto ind = indicator_zero_cell();
  REQUIRE(ind.integral().has_value());
  CHECK(ind.integral()->value == 1.0);
  CHECK(ind.integral()->exact);

  // g = 1 + 0.5 [scatterer = 1]; the small disc carries 0.2 / 0.65 of the measure
  const CylinderFunction g(0, SymbolKey::scatterer, {{{0}, 1.0}, {{1}, 1.5}}, 0.0, 2);
  const auto u = make_observable(sys, CellWeightProfile::geometric(0.5, 0.3, 2), g, {}, 2.0, 100'000, 61);
  const double local = 1.0 + 0.5 * 0.2 / 0.65;
  const double mass = 0.5 * std::pow(1.3 / 0.7, 2);
  REQUIRE(u.integral().has_value());
  CHECK(std::abs(u.local_integral()->value - local) < 4 * u.local_integral()->std_err);
  CHECK(std::abs(u.integral()->value - mass * local) < 4 * u.integral()->std_err);
  CHECK(u.sup_norm_sum() == doctest::Approx(1.5 * mass));
  CHECK(u.p_norm_sum() <= u.sup_norm_sum());

  const std::map<Cell, CylinderFunction> over{{Cell{0, 0}, CylinderFunction::constant(4.0)}};
  const auto w = make_observable(sys, CellWeightProfile::finite({{{0, 0}, 1.0}, {{1, 0}, 2.0}}),
                                 CylinderFunction::constant(1.0), over, 2.0, 1000, 62);
  CHECK(w.integral()->value == doctest::Approx(6.0));
  CHECK(w.local_at({0, 0}).fallback() == 4.0);
  CHECK(w.local_at({1, 0}).fallback() == 1.0);
}
