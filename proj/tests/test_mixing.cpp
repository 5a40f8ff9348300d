#include "doctest.h"

#include <cmath>

#include "lorentz/billiard.hpp"
#include "lorentz/markov.hpp"
#include "lorentz/mixing.hpp"

using namespace lorentz;
using namespace lorentz::mixing;

namespace {

const billiard::BilliardTable& table() {
  static const billiard::BilliardTable t = [] {
    auto tab = billiard::default_table();
    billiard::validate_table(tab, 8, 200'000);
    return tab;
  }();
  return t;
}

}  // namespace

TEST_CASE("indicator correlations are the cell probabilities") {
  const billiard::BilliardSystem sys(table());
  const auto ind = obs::indicator_zero_cell();
  const auto c = correlation_integral(sys, ind, ind, 30, 5000, 77);
  const auto p = stats::empirical_cell_prob(sys, 30, {0, 0}, 5000, 77);
  CHECK(c.estimate.value == p.value);
  CHECK(c.estimate.std_err == p.std_err);
  CHECK(c.truncation == 0.0);
}

TEST_CASE("zero observable and bilinearity") {
  const auto srw = markov::simple_random_walk();
  const obs::Observable zero(obs::CellWeightProfile::zero(), obs::CylinderFunction::constant(1.0));
  const auto ind = obs::indicator_zero_cell();
  CHECK(correlation_integral(srw, ind, zero, 10, 2000, 3).estimate.value == 0.0);

  const obs::Observable a(obs::CellWeightProfile::finite({{{0, 0}, 1.0}, {{1, 1}, -0.5}}),
                          obs::CylinderFunction::constant(1.0));
  const obs::Observable b(obs::CellWeightProfile::finite({{{0, 0}, 2.0}, {{1, 1}, -1.0}}),
                          obs::CylinderFunction::constant(1.0));
  const ObservablePair pairs[] = {{&ind, &a}, {&ind, &b}};
  const auto s = correlation_samples(srw, pairs, {4, 8}, 5000, 9);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 5000; ++i) CHECK(s.values[1][k][i] == 2.0 * s.values[0][k][i]);
}

TEST_CASE("oracle sigma") {
  const auto srw = markov::simple_random_walk();
  const auto s = oracle_sigma(srw);
  CHECK(s.xx == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.yy == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(s.xy) < 1e-14);
  const auto chain = markov::random_symmetric_extension(3, kOracleSeed);
  const auto sc = oracle_sigma(chain);
  const auto est = stats::estimate_sigma(chain, 400, 40'000, 5);
  CHECK(std::abs(est.sigma.xx - sc.xx) < 5 * est.std_err.xx + 0.01 * sc.xx);
  CHECK(std::abs(est.sigma.yy - sc.yy) < 5 * est.std_err.yy + 0.01 * sc.yy);
}

TEST_CASE("exact correlations match Monte Carlo on the oracle suite") {
  for (const auto& [name, sys] : oracle_suite()) {
    for (const auto& [oname, u] : oracle_observables(sys)) {
      const auto exact = exact_correlation(sys, u, u, 12);
      const auto mc = correlation_integral(sys, u, u, 12, 40'000, 101);
      CHECK_MESSAGE(std::abs(mc.estimate.value - exact) <= 4 * mc.estimate.std_err + mc.truncation + 1e-12,
                    name << "/" << oname << " exact " << exact << " mc " << mc.estimate.value);
    }
  }
}

TEST_CASE("exact correlation of the indicator is q_n(0)") {
  const auto srw = markov::simple_random_walk();
  const auto ind = obs::indicator_zero_cell();
  CHECK(exact_correlation(srw, ind, ind, 4) == doctest::Approx(9.0 / 64.0).epsilon(1e-14));
  CHECK(exact_correlation(srw, ind, ind, 5) == 0.0);
}

TEST_CASE("empirical return tails") {
  const auto srw = markov::simple_random_walk();
  const auto tail = return_tail_empirical(srw, 50, 40'000, 13);
  CHECK(std::abs(tail.survival[2].value - 0.75) < 4 * tail.survival[2].std_err);
  CHECK(tail.survival[1].value == 1.0);
  std::size_t returned = 0;
  for (std::size_t j = 1; j <= 50; ++j) returned += tail.return_counts[j];
  CHECK(returned + tail.censored == 40'000);
  for (std::size_t n = 0; n <= 50; ++n) {
    std::size_t later = tail.censored;
    for (std::size_t j = n + 1; j <= 50; ++j) later += tail.return_counts[j];
    CHECK(tail.survivor_counts[n] == later);
  }
  const auto exact = markov::exact_return_tail(srw, 50);
  CHECK(std::abs(tail.survival[50].value - exact.tail[50]) < 4 * tail.survival[50].std_err);
  CHECK(std::abs(tail.first_return(4).value - exact.first_return[4]) < 4 * tail.first_return(4).std_err);
}

TEST_CASE("mixing rows on the walk with the period correction") {
  const auto srw = markov::simple_random_walk();
  const auto ind = obs::indicator_zero_cell();
  const auto phi0 = LimitDensity::exact(oracle_sigma(srw));
  const auto rep = mixing_rate_report(srw, ind, ind, {100, 200}, 200'000, phi0, 17, {}, 2.0);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].target == doctest::Approx(2.0 / stats::kPi));
  CHECK(rep.verdict);
  CHECK(rep.plateau);
}

TEST_CASE("quantitative local limit error on an aperiodic oracle") {
  const auto chain = markov::random_symmetric_extension(3, kOracleSeed);
  REQUIRE(chain.return_period() == 1);
  const auto sigma = oracle_sigma(chain);
  const std::vector<std::size_t> grid{20, 40, 80, 160, 320};

  // constants: the plain local limit residual, bounded after m^{3/2} scaling
  const Eigen::VectorXd one = Eigen::Vector3d::Ones();
  const auto flat = prop_error_exact(chain, one, one, 1, grid, {0, 0}, sigma);
  CHECK(flat.verdict == ScanVerdict::bounded);
  for (std::size_t i = 1; i < flat.rows.size(); ++i) CHECK(flat.rows[i].scaled < flat.rows[i - 1].scaled);

  // state-dependent locals with v composed with f^k for fixed k: the limit
  // carries E[u v o f^k] instead of int u int v, so the scaled residual grows
  const Eigen::VectorXd u = Eigen::Vector3d(1.0, 2.0, 0.5);
  const Eigen::VectorXd v = Eigen::Vector3d(0.5, 1.0, 1.5);
  const auto shifted = prop_error_exact(chain, u, v, 1, grid, {0, 0}, sigma);
  CHECK(shifted.verdict == ScanVerdict::unbounded);
  const auto& pi = chain.stationary();
  const double limit_ratio = pi.dot(u.cwiseProduct(chain.transition() * v)) / (pi.dot(u) * pi.dot(v));
  const auto& last = shifted.rows.back();
  CHECK(last.lhs.value / last.target == doctest::Approx(limit_ratio).epsilon(0.01));
  CHECK(std::string(to_string(ScanVerdict::bounded)) == "BOUNDED");
}

TEST_CASE("scan verdict rules") {
  std::vector<PropRow> rows(2);
  rows[0].scaled = 1.0;
  rows[0].scaled_stderr = 0.1;
  rows[0].residual = 1.0;
  rows[0].residual_stderr = 0.1;
  rows[1] = rows[0];
  CHECK(scan_verdict(rows) == ScanVerdict::bounded);
  rows[1].scaled = 10.0;
  CHECK(scan_verdict(rows) == ScanVerdict::unbounded);
  for (auto& r : rows) r.residual = 0.0;
  CHECK(scan_verdict(rows) == ScanVerdict::inconclusive);
}
