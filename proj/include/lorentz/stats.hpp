#pragma once

// Statistical engine: Gaussian limit density, covariance estimation,
// empirical local limit tables, binomial/mean estimates and the
// Kolmogorov-Smirnov test. Monte Carlo estimators draw sample i from the
// stream (seed, i), so changing n within one report reuses the same orbits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorentz/lattice.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/system.hpp"

namespace lorentz::stats {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kFlagSigmas = 3.0;
inline constexpr double kFailSigmas = 4.0;
inline constexpr std::size_t kBatches = 20;

struct StatsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SingularSigma : StatsError {
  using StatsError::StatsError;
};
struct NotPositiveDefinite : StatsError {
  NotPositiveDefinite(double lambda_min, double lambda_max);
  double lambda_min;
  double lambda_max;
};
struct DriftDetected : StatsError {
  using StatsError::StatsError;
};

/// Symmetric covariance of the limit law (lattice^2 per step). For one
/// dimensional systems only xx is used.
struct CovarianceMatrix {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
  int dim = 2;

  [[nodiscard]] double det() const noexcept { return dim == 1 ? xx : xx * yy - xy * xy; }
  [[nodiscard]] std::array<double, 2> eigenvalues() const noexcept;
  [[nodiscard]] bool positive_definite() const noexcept;
};

struct EstimateWithCI {
  double value = 0.0;
  double std_err = 0.0;
  std::size_t n_samples = 0;
  std::size_t censored = 0;
  bool exact = false;

  static EstimateWithCI exact_value(double v) { return {v, 0.0, 0, 0, true}; }
};

/// |a - b| <= sigmas * sqrt(se_a^2 + se_b^2)
[[nodiscard]] bool consistent(const EstimateWithCI& a, const EstimateWithCI& b, double sigmas);

/// Density of the centered Gaussian with covariance sigma:
/// exp(-<sigma^{-1} x, x>/2) / (2 pi sqrt(det sigma)) in dimension 2.
[[nodiscard]] double gaussian_density(std::array<double, 2> x, const CovarianceMatrix& sigma);
[[nodiscard]] inline double gaussian_density_at_zero(const CovarianceMatrix& sigma) {
  return gaussian_density({0.0, 0.0}, sigma);
}
/// n^{d/2}: the local limit normalization with a_n = sqrt(n).
[[nodiscard]] inline double lattice_scale(double n, int dim) { return dim == 1 ? std::sqrt(n) : n; }

[[nodiscard]] EstimateWithCI binomial_estimate(std::size_t hits, std::size_t n);
/// Sample mean with standard error sqrt(mean((x - mean)^2) / N); for 0/1 data this is the binomial standard error.
[[nodiscard]] EstimateWithCI mean_estimate(std::span<const double> values);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Kolmogorov survival function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
[[nodiscard]] double kolmogorov_survival(double lambda);
/// Two-sided one-sample KS test with Stephens' small-sample correction of
/// the asymptotic p-value. Requires at least 100 values.
[[nodiscard]] KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Cocycle sums of one orbit at the given sorted times.
template <BaseSystem S>
std::vector<Cell> sums_at(const S& sys, typename S::State x, std::span<const std::size_t> times) {
  std::vector<Cell> out;
  out.reserve(times.size());
  Cell sum;
  std::size_t t = 0;
  for (const auto target : times) {
    for (; t < target; ++t) sum += sys.step(x).jump;
    out.push_back(sum);
  }
  return out;
}

struct SigmaEstimate {
  CovarianceMatrix sigma;
  CovarianceMatrix std_err;  // per entry, batch means
  std::array<double, 2> drift{};         // mean(S_n)/n
  std::array<double, 2> drift_stderr{};
  double phi0 = 0.0;  // Gaussian density at 0 for sigma
  double phi0_stderr = 0.0;
  std::size_t n_sigma = 0;
  std::size_t n_samples = 0;
};

[[nodiscard]] SigmaEstimate sigma_from_sums(std::span<const Cell> sums, std::size_t n_sigma, int dim);

/// Covariance of S_n / sqrt(n) over N samples from the invariant measure.
/// Throws NotPositiveDefinite, or DriftDetected when |mean S_n / n| exceeds
/// 4 standard errors in some coordinate.
template <BaseSystem S>
SigmaEstimate estimate_sigma(const S& sys, std::size_t n_sigma, std::size_t n_samples, std::uint64_t seed,
                             ExecPolicy policy = {}) {
  if (n_sigma < 1) throw std::invalid_argument("estimate_sigma: n_sigma must be >= 1");
  if (n_samples < 100) throw std::invalid_argument("estimate_sigma: need at least 100 samples");
  const std::array<std::size_t, 1> times{n_sigma};
  const auto sums = ensemble_map<Cell>(
      n_samples, [&](std::size_t i) { return sums_at(sys, sys.sample(RngSpec{seed, i}), times)[0]; }, policy);
  return sigma_from_sums(sums, n_sigma, sys.dimension());
}

/// Fraction of samples with S_n = l.
template <BaseSystem S>
EstimateWithCI empirical_cell_prob(const S& sys, std::size_t n, Cell l, std::size_t n_samples, std::uint64_t seed,
                                   ExecPolicy policy = {}) {
  if (n_samples < 1000) throw std::invalid_argument("empirical_cell_prob: need at least 1000 samples");
  const std::array<std::size_t, 1> times{n};
  const auto hits = ensemble_map<double>(
      n_samples,
      [&](std::size_t i) { return sums_at(sys, sys.sample(RngSpec{seed, i}), times)[0] == l ? 1.0 : 0.0; },
      policy);
  return mean_estimate(hits);
}

/// Empirical distribution of S_n over the observed support (one run).
template <BaseSystem S>
std::vector<std::pair<Cell, EstimateWithCI>> empirical_distribution(const S& sys, std::size_t n, std::size_t n_samples,
                                                                    std::uint64_t seed, ExecPolicy policy = {}) {
  const std::array<std::size_t, 1> times{n};
  auto sums = ensemble_map<Cell>(
      n_samples, [&](std::size_t i) { return sums_at(sys, sys.sample(RngSpec{seed, i}), times)[0]; }, policy);
  std::sort(sums.begin(), sums.end());
  std::vector<std::pair<Cell, EstimateWithCI>> out;
  for (std::size_t i = 0; i < sums.size();) {
    std::size_t j = i;
    while (j < sums.size() && sums[j] == sums[i]) ++j;
    out.emplace_back(sums[i], binomial_estimate(j - i, n_samples));
    i = j;
  }
  return out;
}

struct LltRow {
  std::size_t n = 0;
  Cell l;
  double n_phat = 0.0;  // n^{d/2} * p_hat
  double phi_b = 0.0;   // Phi_B(l / sqrt n)
  double ratio = 0.0;
  double std_err = 0.0;  // of n_phat; 0 for exact rows
  bool flag = false;
  bool exact = false;
};

/// Row from an estimate of P(S_n = l). Flags Monte Carlo rows with
/// |n p - Phi| > 3 n stderr.
[[nodiscard]] LltRow make_llt_row(std::size_t n, Cell l, const EstimateWithCI& p, const CovarianceMatrix& sigma);

/// Monte Carlo local limit table; all n share the same N orbits.
template <BaseSystem S>
std::vector<LltRow> llt_report(const S& sys, std::vector<std::size_t> n_list, std::span<const Cell> cells,
                               std::size_t n_samples, const CovarianceMatrix& sigma, std::uint64_t seed,
                               ExecPolicy policy = {}) {
  std::sort(n_list.begin(), n_list.end());
  const auto sums = ensemble_map<std::vector<Cell>>(
      n_samples, [&](std::size_t i) { return sums_at(sys, sys.sample(RngSpec{seed, i}), n_list); }, policy);
  std::vector<LltRow> rows;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    for (const auto& l : cells) {
      std::size_t hits = 0;
      for (const auto& s : sums) hits += s[k] == l ? 1 : 0;
      rows.push_back(make_llt_row(n_list[k], l, binomial_estimate(hits, n_samples), sigma));
    }
  }
  return rows;
}

}  // namespace lorentz::stats
