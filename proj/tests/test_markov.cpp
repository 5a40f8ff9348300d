#include "doctest.h"

#include <cmath>

#include "lorentz/markov.hpp"
#include "lorentz/stats.hpp"

using namespace lorentz;
using namespace lorentz::markov;

TEST_CASE("srw basics") {
  const auto srw = simple_random_walk();
  CHECK(srw.n_states() == 1);
  CHECK(srw.return_period() == 2);
  const auto d2 = exact_distribution(srw, 2);
  CHECK(d2.q({0, 0}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(d2.q({1, 1}) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(d2.q({2, 0}) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(d2.q({1, 0}) == 0.0);
  double total = 0.0;
  d2.marginal.for_each([&](Cell, const double* p) { total += p[0]; });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("srw renewal operators at n = 2") {
  const auto srw = simple_random_walk();
  const auto tr = operator_TR(srw, 4);
  CHECK(tr.R[1](0, 0) == 0.0);
  CHECK(tr.R[2](0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(tr.T[2](0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(tr.T[4](0, 0) == doctest::Approx(9.0 / 64.0).epsilon(1e-15));
  const auto uc = operator_U_check(srw, 4);
  CHECK(uc.U[2](0, 0) == doctest::Approx(0.75).epsilon(1e-15));
  const auto tail = exact_return_tail(srw, 4);
  CHECK(tail.first_return[2] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(tail.tail[1] == 1.0);
  CHECK(tail.tail[2] == doctest::Approx(0.75).epsilon(1e-15));
  // f_4 = q_4 - f_2 q_2 = 9/64 - 1/16
  CHECK(tail.first_return[4] == doctest::Approx(5.0 / 64.0).epsilon(1e-14));
}

TEST_CASE("closed-form srw returns agree with the propagator and with SrwExact") {
  const auto srw = simple_random_walk();
  const auto q = srw_zero_returns(60);
  const auto d = exact_distribution(srw, 60, {.with_kernel = false});
  CHECK(q[60] == doctest::Approx(d.q({0, 0})).epsilon(1e-13));
  const SrwExact fast(60);
  double worst = 0.0;
  d.marginal.for_each([&](Cell c, const double* p) { worst = std::max(worst, std::abs(p[0] - fast.q(c))); });
  for (const Cell c : {Cell{61, 0}, Cell{1, 0}, Cell{30, 30}, Cell{-31, 29}})
    worst = std::max(worst, std::abs(d.q(c) - fast.q(c)));
  CHECK(worst < 1e-15);
  CHECK(fast.q({60, 0}) == doctest::Approx(std::pow(0.25, 60)).epsilon(1e-12));
}

TEST_CASE("scalar renewal from returns matches the matrix tail") {
  const auto srw = simple_random_walk();
  const auto q = srw_zero_returns(80);
  const auto scalar = return_tail_from_returns(q);
  const auto matrix = exact_return_tail(srw, 80);
  for (std::size_t n = 0; n <= 80; ++n) CHECK(scalar.tail[n] == doctest::Approx(matrix.tail[n]).epsilon(1e-12));
  CHECK(scalar.max_residual < 1e-12);
}

TEST_CASE("srw return tail decays like pi / log n") {
  // P(phi > n) ~ pi / log n for the planar walk; at moderate n the ratio is
  // still far from 1, so the frozen value is the exact one at n = 1000.
  const auto q = srw_zero_returns(1000);
  const auto tail = return_tail_from_returns(q, 1e-10);
  const double scaled = tail.tail[1000] * std::log(1000.0);
  CHECK(scaled == doctest::Approx(2.222756).epsilon(1e-5));
  CHECK(tail.tail[1000] < tail.tail[500]);
}

TEST_CASE("operator renewal identities on the random chain") {
  const auto chain = random_symmetric_extension(3, 0x3A7E5EEDULL);
  CHECK(chain.n_states() == 3);
  const auto& pi = chain.stationary();
  CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((pi.transpose() * chain.transition() - pi.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  const auto tr = operator_TR(chain, 25);
  CHECK(tr.max_residual < 1e-12);
  const auto uc = operator_U_check(chain, 25);
  CHECK(uc.max_residual < 1e-12);
  CHECK(uc.max_operator_residual < 1e-12);
  // pi . Q_{n,l} 1 = P_pi(S_n = l)
  const auto d = exact_distribution(chain, 6);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  for (const Cell l : {Cell{0, 0}, Cell{1, -1}, Cell{2, 3}})
    CHECK(pi.dot(operator_Q(chain, 6, l) * ones) == doctest::Approx(d.q(l)).epsilon(1e-12));
}

TEST_CASE("propagator runs identically serial and threaded") {
  const auto chain = random_symmetric_extension(3, 5);
  const auto a = exact_distribution(chain, 40, {.with_kernel = true, .policy = ExecPolicy::serial()});
  const auto b = exact_distribution(chain, 40, {.with_kernel = true, .policy = ExecPolicy::threads(4)});
  bool same = true;
  a.kernel.for_each([&](Cell c, const double* p) {
    const auto blk = b.kernel.block(c);
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t k = 0; k < 3; ++k) same = same && blk(r, k) == p[r * 3 + k];
  });
  CHECK(same);
}

TEST_CASE("memory bound is enforced") {
  const auto srw = simple_random_walk();
  CHECK_THROWS_AS((void)exact_distribution(srw, 200, {.with_kernel = true, .budget = 1000}), MemoryBound);
}

TEST_CASE("invalid chains are rejected") {
  std::vector<Edge> leaky{{0, 0, 0.5, {1, 0}}};
  CHECK_THROWS_AS(MarkovExtension(1, leaky, 1), OracleError);
  std::vector<Edge> even{{0, 0, 0.5, {2, 0}}, {0, 0, 0.5, {-2, 0}}};
  CHECK_THROWS_AS(MarkovExtension(1, even, 1), OracleError);
  std::vector<Edge> flat{{0, 0, 0.5, {1, 0}}, {0, 0, 0.5, {-1, 0}}};
  CHECK_THROWS_AS(MarkovExtension(1, flat, 2), OracleError);
}

TEST_CASE("period-corrected local limit on the srw") {
  // Sigma = I/2, Phi(0) = 1/pi; with period 2 n q_n(0) -> 2/pi
  const stats::CovarianceMatrix sigma{0.5, 0.0, 0.5, 2};
  const double phi0 = stats::gaussian_density_at_zero(sigma);
  CHECK(phi0 == doctest::Approx(1.0 / stats::kPi).epsilon(1e-15));
  const SrwExact d(1000);
  const double ratio = 1000.0 * d.q({0, 0}) / phi0;
  CHECK(ratio == doctest::Approx(2.0).epsilon(1e-3));
  const double off = 1000.0 * d.q({10, 20}) / stats::gaussian_density({10 / std::sqrt(1000.0), 20 / std::sqrt(1000.0)}, sigma);
  CHECK(off == doctest::Approx(2.0).epsilon(5e-3));
  CHECK(d.q({10, 21}) == 0.0);
}

TEST_CASE("one-dimensional two-state walk") {
  const auto w = two_state_walk_1d();
  CHECK(w.dimension() == 1);
  CHECK(w.return_period() == 1);
  const auto tr = operator_TR(w, 30);
  CHECK(tr.max_residual < 1e-12);
}
