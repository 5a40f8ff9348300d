#include "doctest.h"

#include <set>

#include "lorentz/rng.hpp"

using namespace lorentz;

TEST_CASE("philox4x32-10 known answers") {
  // Random123 kat_vectors
  const auto zero = philox4x32_10({0, 0, 0, 0}, {0, 0});
  CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  const auto ones = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(ones == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  const auto pi = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(pi == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("block function is usable at compile time") {
  static_assert(philox4x32_10({0, 0, 0, 0}, {0, 0})[0] == 0x6627e8d5u);
}

TEST_CASE("streams replay and differ") {
  RngStream a(RngSpec{7, 3});
  RngStream b(RngSpec{7, 3});
  RngStream c(RngSpec{7, 4});
  RngStream d(RngSpec{8, 3});
  bool all_equal = true;
  int same_c = 0;
  int same_d = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    all_equal = all_equal && x == b();
    same_c += x == c() ? 1 : 0;
    same_d += x == d() ? 1 : 0;
  }
  CHECK(all_equal);
  CHECK(same_c == 0);
  CHECK(same_d == 0);
  CHECK(a.draws() == 1000);
}

TEST_CASE("uniform stays in the open unit interval with the right mean") {
  RngStream r(RngSpec{1, 0});
  double sum = 0.0;
  double lo = 1.0;
  double hi = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    sum += u;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
}

TEST_CASE("below covers its range") {
  RngStream r(RngSpec{2, 0});
  std::array<int, 5> counts{};
  for (int i = 0; i < 50000; ++i) ++counts[r.below(5)];
  for (const auto c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("derived seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t salt = 0; salt < 1000; ++salt) seen.insert(derive_seed(42, salt));
  CHECK(seen.size() == 1000);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
