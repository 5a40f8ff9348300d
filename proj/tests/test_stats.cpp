#include "doctest.h"

#include <cmath>

#include "lorentz/markov.hpp"
#include "lorentz/stats.hpp"

using namespace lorentz;
using namespace lorentz::stats;

TEST_CASE("gaussian density uses the inverse covariance") {
  const CovarianceMatrix s{2.0, 0.5, 1.0, 2};
  const double det = 2.0 - 0.25;
  // inverse = [[1, -0.5], [-0.5, 2]] / det
  const double quad = (1.0 * 1.0 - 2 * 0.5 * 1.0 * -1.0 + 2.0 * 1.0) / det;
  CHECK(gaussian_density({1.0, -1.0}, s) ==
        doctest::Approx(std::exp(-0.5 * quad) / (2 * kPi * std::sqrt(det))).epsilon(1e-14));
  CHECK(gaussian_density_at_zero({1.0, 0.0, 1.0, 2}) == doctest::Approx(1.0 / (2 * kPi)).epsilon(1e-15));
  CHECK(gaussian_density({0.0, 0.0}, {4.0, 0.0, 0.0, 1}) == doctest::Approx(1.0 / std::sqrt(8 * kPi)).epsilon(1e-15));
}

TEST_CASE("singular covariance is refused") {
  CHECK_THROWS_AS((void)gaussian_density({0, 0}, {1.0, 1.0, 1.0, 2}), SingularSigma);
  CHECK_THROWS_AS((void)gaussian_density({0, 0}, {0.0, 0.0, 0.0, 1}), SingularSigma);
}

TEST_CASE("covariance eigenvalues") {
  const CovarianceMatrix s{2.0, 1.0, 2.0, 2};
  const auto ev = s.eigenvalues();
  CHECK(ev[0] == doctest::Approx(1.0));
  CHECK(ev[1] == doctest::Approx(3.0));
  CHECK(s.positive_definite());
  CHECK_FALSE(CovarianceMatrix{1.0, 2.0, 1.0, 2}.positive_definite());
}

TEST_CASE("kolmogorov survival function") {
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-12));
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-12));
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.049485876755377876).epsilon(1e-12));
  CHECK(kolmogorov_survival(2.0) == doctest::Approx(0.0006709252557796953).epsilon(1e-10));
  CHECK(kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("ks test accepts the right law and rejects a shifted one") {
  RngStream rng(RngSpec{5, 0});
  std::vector<double> xs(20'000);
  for (auto& x : xs) x = rng.uniform();
  const auto uniform_cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_test(xs, uniform_cdf).p_value > 0.01);
  for (auto& x : xs) x = x * x;
  CHECK(ks_test(xs, uniform_cdf).p_value < 1e-6);
  CHECK_THROWS_AS((void)ks_test(std::vector<double>(50, 0.5), uniform_cdf), std::invalid_argument);
}

TEST_CASE("binomial and mean estimates") {
  const auto b = binomial_estimate(25, 100);
  CHECK(b.value == 0.25);
  CHECK(b.std_err == doctest::Approx(std::sqrt(0.25 * 0.75 / 100)));
  std::vector<double> ones(100, 0.0);
  for (int i = 0; i < 25; ++i) ones[static_cast<std::size_t>(i)] = 1.0;
  const auto m = mean_estimate(ones);
  CHECK(m.value == doctest::Approx(b.value).epsilon(1e-15));
  CHECK(m.std_err == doctest::Approx(b.std_err).epsilon(1e-14));
  CHECK(consistent({1.0, 0.1}, {1.5, 0.1}, 4.0));
  CHECK_FALSE(consistent({1.0, 0.1}, {1.5, 0.1}, 3.0));
}

TEST_CASE("sigma estimate on the simple random walk") {
  const auto srw = markov::simple_random_walk();
  const auto est = estimate_sigma(srw, 50, 40'000, 21, ExecPolicy::threads(2));
  CHECK(est.sigma.xx == doctest::Approx(0.5).epsilon(0.03));
  CHECK(est.sigma.yy == doctest::Approx(0.5).epsilon(0.03));
  CHECK(std::abs(est.sigma.xy) < 0.02);
  CHECK(std::abs(est.sigma.xx - 0.5) < 5 * est.std_err.xx);
  CHECK(est.phi0 == doctest::Approx(1.0 / kPi).epsilon(0.05));
  const auto serial = estimate_sigma(srw, 50, 40'000, 21, ExecPolicy::serial());
  CHECK(serial.sigma.xx == est.sigma.xx);
  CHECK(serial.phi0_stderr == est.phi0_stderr);
}

TEST_CASE("drift is detected") {
  std::vector<Cell> sums;
  RngStream rng(RngSpec{6, 0});
  for (int i = 0; i < 2000; ++i)
    sums.push_back({static_cast<std::int64_t>(rng.below(21)) - 10 + 3, static_cast<std::int64_t>(rng.below(21)) - 10});
  CHECK_THROWS_AS((void)sigma_from_sums(sums, 100, 2), DriftDetected);
  std::vector<Cell> flat(2000, Cell{0, 0});
  CHECK_THROWS_AS((void)sigma_from_sums(flat, 100, 2), NotPositiveDefinite);
}

TEST_CASE("llt rows from exact probabilities") {
  const CovarianceMatrix sigma{0.5, 0.0, 0.5, 2};
  const auto row = make_llt_row(100, {0, 0}, EstimateWithCI::exact_value(0.006), sigma);
  CHECK(row.n_phat == doctest::Approx(0.6));
  CHECK(row.phi_b == doctest::Approx(1.0 / kPi));
  CHECK(row.ratio == doctest::Approx(0.6 * kPi));
  CHECK(lattice_scale(100, 2) == 100.0);
  CHECK(lattice_scale(100, 1) == 10.0);
}

TEST_CASE("empirical cell probability on the walk") {
  const auto srw = markov::simple_random_walk();
  const auto p = empirical_cell_prob(srw, 2, {0, 0}, 100'000, 8);
  CHECK(std::abs(p.value - 0.25) < 4 * p.std_err);
  const auto dist = empirical_distribution(srw, 2, 10'000, 8);
  double total = 0.0;
  for (const auto& [c, e] : dist) total += e.value;
  CHECK(total == doctest::Approx(1.0));
  CHECK(dist.size() == 9);
}
