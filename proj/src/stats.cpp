#include "lorentz/stats.hpp"

#include <numeric>
#include <sstream>

namespace lorentz::stats {

NotPositiveDefinite::NotPositiveDefinite(double lo, double hi)
    : StatsError([&] {
        std::ostringstream os;
        os << "covariance estimate is not positive definite: eigenvalues " << lo << ", " << hi;
        return os.str();
      }()),
      lambda_min(lo),
      lambda_max(hi) {}

std::array<double, 2> CovarianceMatrix::eigenvalues() const noexcept {
  if (dim == 1) return {xx, xx};
  const double mean = 0.5 * (xx + yy);
  const double radius = std::hypot(0.5 * (xx - yy), xy);
  return {mean - radius, mean + radius};
}

bool CovarianceMatrix::positive_definite() const noexcept { return eigenvalues()[0] > 0.0; }

bool consistent(const EstimateWithCI& a, const EstimateWithCI& b, double sigmas) {
  return std::abs(a.value - b.value) <= sigmas * std::hypot(a.std_err, b.std_err);
}

double gaussian_density(std::array<double, 2> x, const CovarianceMatrix& sigma) {
  const double det = sigma.det();
  if (det <= 1e-14) throw SingularSigma("covariance determinant " + std::to_string(det) + " <= 1e-14");
  if (sigma.dim == 1) return std::exp(-0.5 * x[0] * x[0] / sigma.xx) / std::sqrt(2.0 * kPi * sigma.xx);
  const double quad = (sigma.yy * x[0] * x[0] - 2.0 * sigma.xy * x[0] * x[1] + sigma.xx * x[1] * x[1]) / det;
  return std::exp(-0.5 * quad) / (2.0 * kPi * std::sqrt(det));
}

EstimateWithCI binomial_estimate(std::size_t hits, std::size_t n) {
  if (n == 0) throw std::invalid_argument("binomial_estimate: no samples");
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, 0, false};
}

EstimateWithCI mean_estimate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_estimate: no samples");
  const auto n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  std::vector<double> sq(values.size());
  std::transform(values.begin(), values.end(), sq.begin(), [mean](double v) { return (v - mean) * (v - mean); });
  const double var = pairwise_sum(sq) / n;
  return {mean, std::sqrt(var / n), values.size(), 0, false};
}

double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.size() < 100) throw std::invalid_argument("ks_test: need at least 100 values");
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double root = std::sqrt(n);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

namespace {

struct Moments {
  double mx = 0.0, my = 0.0, cxx = 0.0, cxy = 0.0, cyy = 0.0;
};

Moments moments(std::span<const Cell> sums) {
  const auto n = static_cast<double>(sums.size());
  std::vector<double> xs(sums.size()), ys(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    xs[i] = static_cast<double>(sums[i].x);
    ys[i] = static_cast<double>(sums[i].y);
  }
  Moments m;
  m.mx = pairwise_sum(xs) / n;
  m.my = pairwise_sum(ys) / n;
  std::vector<double> a(sums.size()), b(sums.size()), c(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) {
    const double dx = xs[i] - m.mx;
    const double dy = ys[i] - m.my;
    a[i] = dx * dx;
    b[i] = dx * dy;
    c[i] = dy * dy;
  }
  m.cxx = pairwise_sum(a) / n;
  m.cxy = pairwise_sum(b) / n;
  m.cyy = pairwise_sum(c) / n;
  return m;
}

double sample_sd(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

SigmaEstimate sigma_from_sums(std::span<const Cell> sums, std::size_t n_sigma, int dim) {
  const auto n = static_cast<double>(n_sigma);
  SigmaEstimate out;
  out.n_sigma = n_sigma;
  out.n_samples = sums.size();

  const Moments all = moments(sums);
  out.sigma = {all.cxx / n, dim == 1 ? 0.0 : all.cxy / n, dim == 1 ? 0.0 : all.cyy / n, dim};

  const std::size_t per_batch = sums.size() / kBatches;
  std::vector<double> bxx, bxy, byy, bphi;
  for (std::size_t b = 0; b < kBatches; ++b) {
    const Moments m = moments(sums.subspan(b * per_batch, per_batch));
    const CovarianceMatrix cb{m.cxx / n, dim == 1 ? 0.0 : m.cxy / n, dim == 1 ? 0.0 : m.cyy / n, dim};
    bxx.push_back(cb.xx);
    bxy.push_back(cb.xy);
    byy.push_back(cb.yy);
    bphi.push_back(cb.positive_definite() ? gaussian_density_at_zero(cb) : 0.0);
  }
  const double root_b = std::sqrt(static_cast<double>(kBatches));
  out.std_err = {sample_sd(bxx) / root_b, sample_sd(bxy) / root_b, sample_sd(byy) / root_b, dim};

  const auto [lo, hi] = out.sigma.eigenvalues();
  if (!(lo > 0.0)) throw NotPositiveDefinite(lo, hi);
  out.phi0 = gaussian_density_at_zero(out.sigma);
  out.phi0_stderr = sample_sd(bphi) / root_b;

  const double root_n = std::sqrt(static_cast<double>(sums.size()));
  out.drift = {all.mx / n, all.my / n};
  out.drift_stderr = {std::sqrt(all.cxx) / root_n / n, std::sqrt(all.cyy) / root_n / n};
  for (int c = 0; c < dim; ++c) {
    if (std::abs(out.drift[c]) > kFailSigmas * out.drift_stderr[c]) {
      std::ostringstream os;
      os << "cocycle is not centered: mean S_n/n = " << out.drift[c] << " in coordinate " << c << " (std_err "
         << out.drift_stderr[c] << ")";
      throw DriftDetected(os.str());
    }
  }
  return out;
}

LltRow make_llt_row(std::size_t n, Cell l, const EstimateWithCI& p, const CovarianceMatrix& sigma) {
  LltRow row;
  row.n = n;
  row.l = l;
  const double nd = static_cast<double>(n);
  const double scale = lattice_scale(nd, sigma.dim);
  const double root = std::sqrt(nd);
  row.n_phat = scale * p.value;
  row.phi_b = gaussian_density({static_cast<double>(l.x) / root, static_cast<double>(l.y) / root}, sigma);
  row.ratio = row.n_phat / row.phi_b;
  row.std_err = scale * p.std_err;
  row.exact = p.exact;
  row.flag = !p.exact && std::abs(row.n_phat - row.phi_b) > kFlagSigmas * row.std_err;
  return row;
}

}  // namespace lorentz::stats
