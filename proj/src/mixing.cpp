#include "lorentz/mixing.hpp"

#include <cmath>
#include <stdexcept>

namespace lorentz::mixing {

namespace {

double local_at(const obs::CylinderFunction& g, std::span<const std::uint64_t> codes, std::size_t center) {
  return g.is_constant() ? g.fallback() : g.at(codes, center);
}

double max_local_sup(const obs::Observable& u) {
  double s = u.local().sup_norm();
  for (const auto& [cell, g] : u.overrides()) s = std::max(s, g.sup_norm());
  return s;
}

double max_abs_weight(const obs::CellWeightProfile& p) {
  if (p.kind() != obs::ProfileKind::finite) return std::abs(p.amplitude());
  double m = 0.0;
  for (const auto& [cell, w] : p.finite_weights()) m = std::max(m, std::abs(w));
  return m;
}

// Local as a function of the oracle state.
Eigen::VectorXd state_vector(const markov::MarkovExtension& sys, const obs::CylinderFunction& g) {
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  if (g.is_constant()) return Eigen::VectorXd::Constant(s, g.fallback());
  if (g.depth() != 0 || g.key() != obs::SymbolKey::scatterer)
    throw std::invalid_argument("oracle observables must have depth-0 locals keyed by state");
  Eigen::VectorXd out(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    const std::uint64_t code = encode_symbol(static_cast<std::uint32_t>(i), Cell{});
    out(i) = g(std::span<const std::uint64_t>(&code, 1));
  }
  return out;
}

// P_j(S_n = c) for every start state j, as a vector over j.
Eigen::VectorXd row_sums(const markov::LatticeField& field, Cell c) {
  const auto rows = static_cast<Eigen::Index>(field.block_rows());
  if (!field.contains(c)) return Eigen::VectorXd::Zero(rows);
  return field.block(c).rowwise().sum();
}

}  // namespace

double truncation_bound(const obs::Observable& u, const obs::Observable& v, const obs::Truncation& cut) {
  if (cut.tail == 0.0) return 0.0;
  return cut.tail * max_local_sup(u) * max_abs_weight(v.profile()) * max_local_sup(v);
}

namespace detail {

double pair_value(const PairPlan& plan, std::span<const std::uint64_t> codes, std::size_t center_u,
                  std::size_t center_v, Cell s_n) {
  const auto& u = *plan.u;
  const auto& v = *plan.v;
  const bool shared_v = v.overrides().empty();
  double gv_shared = 0.0;
  bool have_gv = false;
  auto gv_at = [&](Cell m) {
    if (!shared_v) return local_at(v.local_at(m), codes, center_v);
    if (!have_gv) {
      gv_shared = local_at(v.local(), codes, center_v);
      have_gv = true;
    }
    return gv_shared;
  };

  if (plan.shared_u) {
    const double gu = local_at(u.local(), codes, center_u);
    if (gu == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& [l, w] : plan.cut.cells) {
      const Cell m = l + s_n;
      const double wv = v.profile().weight(m);
      if (wv != 0.0) acc += w * wv * gv_at(m);
    }
    return gu * acc;
  }
  double acc = 0.0;
  for (const auto& [l, w] : plan.cut.cells) {
    const Cell m = l + s_n;
    const double wv = v.profile().weight(m);
    if (wv != 0.0) acc += w * local_at(u.local_at(l), codes, center_u) * wv * gv_at(m);
  }
  return acc;
}

}  // namespace detail

LimitDensity LimitDensity::from(const stats::SigmaEstimate& est, int dim) {
  return {est.phi0, est.phi0_stderr, dim};
}

LimitDensity LimitDensity::exact(const stats::CovarianceMatrix& sigma) {
  return {stats::gaussian_density_at_zero(sigma), 0.0, sigma.dim};
}

MixingReport mixing_rows(std::span<const std::size_t> n_grid, const std::vector<std::vector<double>>& values,
                         double truncation, const obs::Observable& u, const obs::Observable& v,
                         const LimitDensity& phi0, double period) {
  if (!u.integral() || !v.integral()) throw std::invalid_argument("mixing_rows: observables lack integrals");
  const auto& iu = *u.integral();
  const auto& iv = *v.integral();
  MixingReport report;
  report.verdict = true;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    MixingRow row;
    row.n = n_grid[k];
    row.I_hat = stats::mean_estimate(values[k]);
    row.truncation = truncation;
    const double scale = stats::lattice_scale(static_cast<double>(row.n), phi0.dim);
    row.target = period * phi0.value * iu.value * iv.value;
    const double a = phi0.std_err * iu.value * iv.value;
    const double b = phi0.value * iu.std_err * iv.value;
    const double c = phi0.value * iu.value * iv.std_err;
    row.target_stderr = period * std::sqrt(a * a + b * b + c * c);
    row.n_I_hat = scale * row.I_hat.value;
    row.n_I_stderr = scale * row.I_hat.std_err;
    row.combined_stderr = std::hypot(row.n_I_stderr, row.target_stderr);
    row.allowed = kVerdictSigmas * row.combined_stderr + scale * truncation + kModelMargin * std::abs(row.target);
    row.verdict = std::abs(row.n_I_hat - row.target) <= row.allowed;
    report.verdict = report.verdict && row.verdict;
    report.rows.push_back(row);
  }
  report.plateau = true;
  for (std::size_t a = 0; a < report.rows.size(); ++a) {
    for (std::size_t b = a + 1; b < report.rows.size(); ++b) {
      const auto& ra = report.rows[a];
      const auto& rb = report.rows[b];
      const double se = std::hypot(ra.n_I_stderr, rb.n_I_stderr);
      const double gap = std::abs(ra.n_I_hat - rb.n_I_hat);
      const double z = se > 0.0 ? gap / se : (gap > 0.0 ? INFINITY : 0.0);
      report.worst_plateau_z = std::max(report.worst_plateau_z, z);
    }
  }
  report.plateau = report.worst_plateau_z <= kVerdictSigmas;
  return report;
}

stats::EstimateWithCI TailCurve::first_return(std::size_t j) const {
  return stats::binomial_estimate(return_counts.at(j), n_samples);
}

TailCurve tail_from_returns(std::span<const ReturnTime> returns, std::size_t cap) {
  TailCurve out;
  out.cap = cap;
  out.n_samples = returns.size();
  out.return_counts.assign(cap + 1, 0);
  for (const auto& r : returns) {
    if (r.time) {
      ++out.return_counts.at(*r.time);
    } else {
      ++out.censored;
    }
  }
  out.survivor_counts.assign(cap + 1, 0);
  std::size_t alive = returns.size();
  for (std::size_t n = 0; n <= cap; ++n) {
    alive -= out.return_counts[n];
    out.survivor_counts[n] = alive;
    out.survival.push_back(stats::binomial_estimate(alive, returns.size()));
  }
  return out;
}

const char* to_string(ScanVerdict v) noexcept {
  switch (v) {
    case ScanVerdict::bounded:
      return "BOUNDED";
    case ScanVerdict::unbounded:
      return "UNBOUNDED";
    case ScanVerdict::inconclusive:
      return "INCONCLUSIVE";
  }
  return "?";
}

ScanVerdict scan_verdict(std::span<const PropRow> rows) {
  const PropRow* first = nullptr;
  for (const auto& r : rows) {
    if (r.residual > kVerdictSigmas * r.residual_stderr) {
      first = &r;
      break;
    }
  }
  if (!first) return ScanVerdict::inconclusive;
  const auto& last = rows.back();
  const double low = last.scaled - kVerdictSigmas * last.scaled_stderr;
  const double high = first->scaled + kVerdictSigmas * first->scaled_stderr;
  return low > 2.0 * high ? ScanVerdict::unbounded : ScanVerdict::bounded;
}

// --- oracle side ---------------------------------------------------------

std::vector<OracleSystem> oracle_suite(std::uint64_t seed) {
  std::vector<OracleSystem> out;
  out.push_back({"srw", markov::simple_random_walk()});
  out.push_back({"random3", markov::random_symmetric_extension(3, seed)});
  out.push_back({"two_state_1d", markov::two_state_walk_1d()});
  return out;
}

obs::Observable oracle_observable(const markov::MarkovExtension& sys, obs::CellWeightProfile profile,
                                  const Eigen::VectorXd& state_values) {
  if (static_cast<std::size_t>(state_values.size()) != sys.n_states())
    throw std::invalid_argument("oracle_observable: one value per state required");
  std::map<obs::Window, double> table;
  for (Eigen::Index i = 0; i < state_values.size(); ++i) table[{static_cast<std::uint64_t>(i)}] = state_values(i);
  obs::CylinderFunction g(0, obs::SymbolKey::scatterer, std::move(table), 0.0, sys.n_states());
  const auto& pi = sys.stationary();
  const double integral = pi.dot(state_values);
  const double p_norm = std::sqrt(pi.dot(state_values.cwiseAbs2()));
  obs::Observable u(std::move(profile), std::move(g));
  u.set_local_moments({}, {}, stats::EstimateWithCI::exact_value(integral), p_norm);
  return u;
}

std::vector<std::pair<std::string, obs::Observable>> oracle_observables(const markov::MarkovExtension& sys) {
  const int dim = sys.dimension();
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  std::vector<std::pair<std::string, obs::Observable>> out;
  out.emplace_back("indicator_cell", oracle_observable(sys, obs::CellWeightProfile::indicator(Cell{}, dim),
                                                       Eigen::VectorXd::Ones(s)));
  Eigen::VectorXd ramp(s);
  for (Eigen::Index i = 0; i < s; ++i) ramp(i) = 1.0 + 0.5 * static_cast<double>(i);
  out.emplace_back("finite_state_weighted",
                   oracle_observable(sys,
                                     obs::CellWeightProfile::finite(
                                         {{Cell{0, 0}, 1.0}, {Cell{1, 0}, 0.5}, {Cell{-1, 0}, 0.5}}, dim),
                                     ramp));
  out.emplace_back("geometric",
                   oracle_observable(sys, obs::CellWeightProfile::geometric(1.0, 0.3, dim), Eigen::VectorXd::Ones(s)));
  return out;
}

double exact_correlation(const markov::MarkovExtension& sys, const obs::Observable& u, const obs::Observable& v,
                         std::size_t n, ExecPolicy policy) {
  const auto dist = markov::exact_distribution(sys, n, {true, policy, markov::kDefaultCellBudget});
  const auto cut = u.profile().truncate(1e-15);
  const auto& pi = sys.stationary();
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  const bool shared = u.overrides().empty() && v.overrides().empty();
  const Eigen::VectorXd gu_shared = state_vector(sys, u.local());
  const Eigen::VectorXd gv_shared = state_vector(sys, v.local());
  const Eigen::VectorXd pi_gu = pi.cwiseProduct(gu_shared);

  std::vector<double> terms;
  dist.kernel.for_each([&](Cell m, const double* block) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> K(block, s, s);
    if (shared) {
      double weight = 0.0;
      for (const auto& [l, w] : cut.cells) weight += w * v.profile().weight(l + m);
      if (weight != 0.0) terms.push_back(weight * pi_gu.dot(K * gv_shared));
      return;
    }
    for (const auto& [l, w] : cut.cells) {
      const double wv = v.profile().weight(l + m);
      if (wv == 0.0) continue;
      const Eigen::VectorXd gu = state_vector(sys, u.local_at(l));
      const Eigen::VectorXd gv = state_vector(sys, v.local_at(l + m));
      terms.push_back(w * wv * pi.cwiseProduct(gu).dot(K * gv));
    }
  });
  return pairwise_sum(std::span<const double>(terms));
}

PropScan prop_error_exact(const markov::MarkovExtension& sys, const Eigen::VectorXd& u_state,
                          const Eigen::VectorXd& v_state, int k, std::vector<std::size_t> n_grid, Cell l,
                          const stats::CovarianceMatrix& sigma, ExecPolicy policy) {
  if (k < 0) throw std::invalid_argument("prop_error_exact: k must be >= 0");
  std::sort(n_grid.begin(), n_grid.end());
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  const auto& pi = sys.stationary();
  const auto kk = static_cast<std::size_t>(k);
  for (const auto n : n_grid)
    if (n <= 2 * kk) throw std::invalid_argument("prop_error_exact: n must exceed 2k");

  // w[m] = row vector over end states j of sum_i pi_i u_i K_{k,m}[i][j] v_j
  markov::LatticePropagator head(sys, (pi.cwiseProduct(u_state)).transpose(), kk, policy);
  for (std::size_t t = 0; t < kk; ++t) head.step();
  std::vector<std::pair<Cell, Eigen::VectorXd>> start;
  head.field().for_each([&](Cell m, const double* block) {
    Eigen::VectorXd w(s);
    for (Eigen::Index j = 0; j < s; ++j) w(j) = block[j] * v_state(j);
    start.emplace_back(m, std::move(w));
  });

  const double mu = pi.dot(u_state);
  const double mv = pi.dot(v_state);
  PropScan scan;
  scan.k = k;
  scan.l = l;
  markov::LatticePropagator tail(sys, Eigen::MatrixXd::Identity(s, s), n_grid.back() - kk, policy);
  std::size_t done = 0;
  for (const auto n : n_grid) {
    for (; done < n - kk; ++done) tail.step();
    double lhs = 0.0;
    for (const auto& [m, w] : start) lhs += w.dot(row_sums(tail.field(), l - m));
    PropRow row;
    row.n = n;
    row.m = n - 2 * kk;
    row.lhs = stats::EstimateWithCI::exact_value(lhs);
    const auto mm = static_cast<double>(row.m);
    row.target = stats::gaussian_density({static_cast<double>(l.x) / std::sqrt(mm),
                                          static_cast<double>(l.y) / std::sqrt(mm)},
                                         sigma) /
                 stats::lattice_scale(mm, sys.dimension()) * mu * mv;
    row.residual = std::abs(lhs - row.target);
    row.scaled = row.residual * std::pow(mm, 1.5);
    scan.rows.push_back(row);
  }
  scan.verdict = scan_verdict(scan.rows);
  return scan;
}

stats::CovarianceMatrix oracle_sigma(const markov::MarkovExtension& sys) {
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  const auto& pi = sys.stationary();
  const Eigen::MatrixXd& P = sys.transition();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(s, 2);  // E[psi | X_0 = i]
  for (const auto& e : sys.edges()) {
    mean(e.from, 0) += e.prob * static_cast<double>(e.jump.x);
    mean(e.from, 1) += e.prob * static_cast<double>(e.jump.y);
  }
  // h = sum_k P^k mean solves (I - P + 1 pi^T) h = mean when pi^T mean = 0.
  const Eigen::MatrixXd fundamental =
      Eigen::MatrixXd::Identity(s, s) - P + Eigen::VectorXd::Ones(s) * pi.transpose();
  const Eigen::MatrixXd h = fundamental.fullPivLu().solve(mean);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& e : sys.edges()) {
    const Eigen::Vector2d psi(static_cast<double>(e.jump.x), static_cast<double>(e.jump.y));
    const Eigen::Vector2d ht = h.row(e.to).transpose();
    const double mass = pi(e.from) * e.prob;
    cov += mass * (psi * psi.transpose() + psi * ht.transpose() + ht * psi.transpose());
  }
  stats::CovarianceMatrix out;
  out.dim = sys.dimension();
  out.xx = cov(0, 0);
  out.xy = out.dim == 1 ? 0.0 : 0.5 * (cov(0, 1) + cov(1, 0));
  out.yy = out.dim == 1 ? 0.0 : cov(1, 1);
  return out;
}

}  // namespace lorentz::mixing
