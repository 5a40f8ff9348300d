#pragma once

// Observables of the Z^2-extension of the form u(x, l) = w(l) g_l(x): a cell
// weight profile times a cylinder function of the collision itinerary. For
// this class the summability and continuity hypotheses of the mixing theorem
// become finite computations.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lorentz/billiard.hpp"
#include "lorentz/lattice.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/stats.hpp"
#include "lorentz/system.hpp"

namespace lorentz::obs {

struct HypothesisFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProfileKind { finite, geometric, power };

/// Sum over all cells of |w(l)|, with how it was obtained.
struct ProfileSum {
  double value = 0.0;     // +inf when divergent
  bool finite = false;
  double closed_form = 0.0;  // NaN when no closed form exists
  double partial = 0.0;      // direct shell summation (up to `shells`)
  std::int64_t shells = 0;
  std::string method;
};

struct Truncation {
  std::vector<std::pair<Cell, double>> cells;
  double tail = 0.0;  // sum of |w| outside the kept cells (bound)
  std::int64_t radius = 0;
};

class CellWeightProfile {
 public:
  /// w(l) = amplitude * rho^{|l|_1}, rho in (0,1).
  static CellWeightProfile geometric(double amplitude, double rho, int dim = 2);
  /// w(l) = amplitude * (1 + |l|_1)^{-exponent}.
  static CellWeightProfile power_law(double amplitude, double exponent, int dim = 2);
  static CellWeightProfile finite(std::vector<std::pair<Cell, double>> weights, int dim = 2);
  static CellWeightProfile indicator(Cell l = {}, int dim = 2) { return finite({{l, 1.0}}, dim); }
  static CellWeightProfile zero(int dim = 2) { return finite({}, dim); }

  [[nodiscard]] ProfileKind kind() const noexcept { return kind_; }
  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] double amplitude() const noexcept { return amplitude_; }
  [[nodiscard]] double rate() const noexcept { return rate_; }
  [[nodiscard]] const std::map<Cell, double>& finite_weights() const noexcept { return weights_; }

  [[nodiscard]] double weight(Cell l) const;
  /// Number of cells with |l|_1 = r.
  [[nodiscard]] std::int64_t shell_count(std::int64_t r) const noexcept;
  /// Sum of |w| over shells 0..radius.
  [[nodiscard]] double partial_abs_sum(std::int64_t radius) const;
  [[nodiscard]] ProfileSum abs_sum() const;
  /// Signed sum of w over all cells (all weights share the amplitude's sign
  /// for the closed-form kinds).
  [[nodiscard]] double total() const;
  /// Sum of |w| over shells > radius (exact or bound).
  [[nodiscard]] double tail_abs_sum(std::int64_t radius) const;
  /// Smallest L1 ball whose complement carries at most `relative` of the total |w|.
  [[nodiscard]] Truncation truncate(double relative) const;

 private:
  ProfileKind kind_ = ProfileKind::finite;
  int dim_ = 2;
  double amplitude_ = 0.0;
  double rate_ = 0.0;  // rho or exponent
  std::map<Cell, double> weights_;
};

enum class SymbolKey { scatterer, full };

using Window = std::vector<std::uint64_t>;

/// A function of the symbols at times -depth..depth, given by an explicit
/// table of key windows plus a fallback value for windows not listed. If
/// alphabet_size is known and the table lists every key window, the fallback
/// is unreachable.
class CylinderFunction {
 public:
  CylinderFunction(int depth, SymbolKey key, std::map<Window, double> table, double fallback,
                   std::optional<std::size_t> alphabet_size = std::nullopt);
  static CylinderFunction constant(double value);

  [[nodiscard]] int depth() const noexcept { return depth_; }
  [[nodiscard]] SymbolKey key() const noexcept { return key_; }
  [[nodiscard]] const std::map<Window, double>& table() const noexcept { return table_; }
  [[nodiscard]] double fallback() const noexcept { return fallback_; }
  [[nodiscard]] std::optional<std::size_t> alphabet_size() const noexcept { return alphabet_; }
  [[nodiscard]] double sup_norm() const noexcept { return sup_; }
  [[nodiscard]] bool is_constant() const noexcept { return depth_ == 0 && table_.empty(); }

  /// Key projection of a raw symbol code.
  [[nodiscard]] std::uint64_t key_of(std::uint64_t code) const noexcept;
  /// Value on a raw symbol window of length 2*depth + 1.
  [[nodiscard]] double operator()(std::span<const std::uint64_t> codes) const;
  /// Value on a longer raw window centered at `center`.
  [[nodiscard]] double at(std::span<const std::uint64_t> codes, std::size_t center) const;

  /// [inf, sup] of the function over all windows agreeing with `codes` on
  /// times -k_back..k_fwd.
  [[nodiscard]] std::pair<double, double> range_on_atom(std::span<const std::uint64_t> codes, int k_back,
                                                        int k_fwd) const;
  /// Inf (sign < 0) or sup (sign > 0) coarsening onto windows -k..k.
  [[nodiscard]] CylinderFunction envelope(int k, int sign) const;

 private:
  int depth_;
  SymbolKey key_;
  std::map<Window, double> table_;
  double fallback_;
  std::optional<std::size_t> alphabet_;
  double sup_ = 0.0;
};

struct SeparationParams {
  double theta = 0.5;
  int cap = 32;
};

/// u(x, l) = w(l) g_l(x) with g_l the shared local unless overridden.
class Observable {
 public:
  Observable(CellWeightProfile profile, CylinderFunction local, std::map<Cell, CylinderFunction> overrides = {},
             double p = 2.0);

  [[nodiscard]] const CellWeightProfile& profile() const noexcept { return profile_; }
  [[nodiscard]] const CylinderFunction& local() const noexcept { return local_; }
  [[nodiscard]] const std::map<Cell, CylinderFunction>& overrides() const noexcept { return overrides_; }
  [[nodiscard]] const CylinderFunction& local_at(Cell l) const;
  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] int depth() const noexcept;
  [[nodiscard]] bool is_zero() const;

  /// sum_l |w(l)| sup|g_l|  (certified sup-norm sum)
  [[nodiscard]] double sup_norm_sum() const;
  /// sum_l |w(l)| ||g_l||_p  estimated from the cached p-norms (<= sup_norm_sum).
  [[nodiscard]] double p_norm_sum() const;
  /// sum_l |w(l)| * 2 sup|g_l| / theta^depth
  [[nodiscard]] double lipschitz_bound(const SeparationParams& params) const;

  /// integral of u against mu = counting x invariant measure.
  [[nodiscard]] const std::optional<stats::EstimateWithCI>& integral() const noexcept { return integral_; }
  [[nodiscard]] const std::optional<stats::EstimateWithCI>& local_integral() const noexcept { return local_integral_; }
  [[nodiscard]] const std::optional<double>& local_p_norm() const noexcept { return local_p_norm_; }

  void set_local_moments(std::map<Cell, stats::EstimateWithCI> integrals, std::map<Cell, double> p_norms,
                         stats::EstimateWithCI shared_integral, double shared_p_norm);

 private:
  CellWeightProfile profile_;
  CylinderFunction local_;
  std::map<Cell, CylinderFunction> overrides_;
  double p_;
  std::optional<stats::EstimateWithCI> integral_;
  std::optional<stats::EstimateWithCI> local_integral_;
  std::optional<double> local_p_norm_;
  std::map<Cell, stats::EstimateWithCI> override_integrals_;
  std::map<Cell, double> override_p_norms_;
};

/// Raw symbol codes of x at times -k_back..k_fwd (k_back = 0 for systems
/// without an inverse).
template <BaseSystem S>
Window symbol_window(const S& sys, typename S::State x, int k_back, int k_fwd, bool* grazing = nullptr) {
  Window out(static_cast<std::size_t>(k_back + k_fwd + 1));
  bool graze = false;
  auto y = x;
  for (int j = 0; j <= k_fwd; ++j) {
    const auto st = sys.step(y);
    out[static_cast<std::size_t>(j + k_back)] = st.symbol;
    graze = graze || st.grazing;
  }
  if (k_back > 0) {
    if constexpr (ReversibleSystem<S>) {
      y = x;
      for (int j = -1; j >= -k_back; --j) {
        const auto st = sys.step_back(y);
        out[static_cast<std::size_t>(j + k_back)] = st.symbol;
        graze = graze || st.grazing;
      }
    } else {
      throw std::invalid_argument("backward itinerary requested for a non-invertible system");
    }
  }
  if (grazing) *grazing = graze;
  return out;
}

struct LocalMoments {
  stats::EstimateWithCI integral;
  double p_norm = 0.0;
};

/// Monte Carlo integral and p-norm of a cylinder function under the
/// invariant measure (exact for constants).
template <BaseSystem S>
LocalMoments local_moments(const S& sys, const CylinderFunction& g, double p, std::size_t n_samples,
                           std::uint64_t seed, ExecPolicy policy = {}) {
  if (g.is_constant()) {
    return {stats::EstimateWithCI::exact_value(g.fallback()), std::abs(g.fallback())};
  }
  struct Sample {
    double value;
    double abs_p;
  };
  const auto samples = ensemble_map<Sample>(
      n_samples,
      [&](std::size_t i) {
        const auto x = sys.sample(RngSpec{seed, i});
        const double v = g(symbol_window(sys, x, g.depth(), g.depth()));
        return Sample{v, std::pow(std::abs(v), p)};
      },
      policy);
  std::vector<double> values(samples.size()), powers(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    values[i] = samples[i].value;
    powers[i] = samples[i].abs_p;
  }
  const double mean_p = pairwise_sum(std::span<const double>(powers)) / static_cast<double>(powers.size());
  return {stats::mean_estimate(values), std::pow(mean_p, 1.0 / p)};
}

/// Assemble an observable and cache its integral and norms.
template <BaseSystem S>
Observable make_observable(const S& sys, CellWeightProfile profile, CylinderFunction local,
                           std::map<Cell, CylinderFunction> overrides, double p, std::size_t n_samples,
                           std::uint64_t seed, ExecPolicy policy = {}) {
  Observable u(std::move(profile), std::move(local), std::move(overrides), p);
  const auto sum = u.profile().abs_sum();
  if (!sum.finite) throw HypothesisFailed("cell weight profile is not summable: " + sum.method);
  const auto shared = local_moments(sys, u.local(), p, n_samples, seed, policy);
  std::map<Cell, stats::EstimateWithCI> integrals;
  std::map<Cell, double> norms;
  std::uint64_t salt = 1;
  for (const auto& [cell, g] : u.overrides()) {
    const auto m = local_moments(sys, g, p, n_samples, derive_seed(seed, salt++), policy);
    integrals.emplace(cell, m.integral);
    norms.emplace(cell, m.p_norm);
  }
  u.set_local_moments(std::move(integrals), std::move(norms), shared.integral, shared.p_norm);
  return u;
}

/// Indicator of the zero cell: w = delta_0, g = 1. Its integral is 1.
Observable indicator_zero_cell(int dim = 2);

struct HypothesisReport {
  bool summable = false;         // sum (||u_l||_inf + ||v_l||_p) < inf
  bool modulus_summable = false; // sum ||omega_{-k}^inf(v_l)||_p < inf for all k
  bool modulus_vanishes = false; // sum (||omega(u_l)||_1 + ||omega(v_l)||_1) -> 0
  double u_sup_sum = 0.0;
  double v_p_sum = 0.0;  // certified upper bound via ||g||_p <= ||g||_inf
  double modulus_bound = 0.0;
  int vanishing_depth = 0;  // moduli are exactly 0 for k >= this
  ProfileSum u_profile;
  ProfileSum v_profile;
  std::string detail;

  [[nodiscard]] bool passed() const noexcept { return summable && modulus_summable && modulus_vanishes; }
};

[[nodiscard]] HypothesisReport hypothesis_check(const Observable& u, const Observable& v);
/// hypothesis_check, throwing HypothesisFailed on any failure.
HypothesisReport certify(const Observable& u, const Observable& v);

/// Observable with every local replaced by its depth-k inf (sign < 0) or
/// sup (sign > 0) envelope. Cached integrals are dropped unless unchanged.
[[nodiscard]] Observable envelope(const Observable& u, int k, int sign);

// --- billiard-specific metric structure ---------------------------------

struct Separation {
  int s = 0;
  bool reached_cap = false;
  bool grazing = false;
};

/// Largest k <= cap with itineraries of x and y agreeing on times -k..k
/// (0 when there is none).
[[nodiscard]] Separation separation_time(const billiard::BilliardTable& table, const billiard::PhasePoint& x,
                                         const billiard::PhasePoint& y, int cap);

/// theta^s, with 0 for identical points.
[[nodiscard]] double d_theta(const billiard::BilliardTable& table, const billiard::PhasePoint& x,
                             const billiard::PhasePoint& y, const SeparationParams& params);

using PointFunction = std::function<double(const billiard::PhasePoint&)>;

/// Evaluate a cylinder function at a phase point.
[[nodiscard]] double evaluate(const billiard::BilliardTable& table, const CylinderFunction& g,
                              const billiard::PhasePoint& x);

struct LipschitzEstimate {
  double lower_bound = 0.0;
  std::optional<double> upper_bound;  // 2 sup / theta^depth for cylinder functions
  std::size_t pairs_used = 0;
  std::size_t grazing_skipped = 0;
};

/// Sampled lower bound on sup |g(x) - g(y)| / d_theta(x, y) over near and far pairs.
[[nodiscard]] LipschitzEstimate lipschitz_estimate(const billiard::BilliardTable& table, const PointFunction& g,
                                                   const SeparationParams& params, std::size_t n_pairs,
                                                   std::uint64_t seed);
[[nodiscard]] LipschitzEstimate lipschitz_estimate(const billiard::BilliardTable& table, const CylinderFunction& g,
                                                   const SeparationParams& params, std::size_t n_pairs,
                                                   std::uint64_t seed);

struct ModulusEstimate {
  double value = 0.0;
  bool exact = false;  // false: sampled lower bound
  std::size_t probes_matched = 0;
};

/// Local continuity modulus over the itinerary atom of x on times
/// -k_back..k_fwd: exact for cylinder functions.
[[nodiscard]] ModulusEstimate continuity_modulus(const billiard::BilliardTable& table, const CylinderFunction& g,
                                                 const billiard::PhasePoint& x, int k_back, int k_fwd);
/// Sampled version for arbitrary functions, probing n_probe nearby points.
[[nodiscard]] ModulusEstimate continuity_modulus(const billiard::BilliardTable& table, const PointFunction& g,
                                                 const billiard::PhasePoint& x, int k_back, int k_fwd,
                                                 std::size_t n_probe, std::uint64_t seed);

}  // namespace lorentz::obs
