#include "lorentz/cli/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <variant>

#include "lorentz/billiard.hpp"
#include "lorentz/cli/svg.hpp"
#include "lorentz/extension.hpp"
#include "lorentz/markov.hpp"
#include "lorentz/mixing.hpp"
#include "lorentz/observables.hpp"
#include "lorentz/stats.hpp"

#ifndef LORENTZ_GIT_DESCRIBE
#define LORENTZ_GIT_DESCRIBE "unknown"
#endif

namespace lorentz::cli {

namespace {

namespace fs = std::filesystem;

// Salts separating the random streams of one run.
enum Salt : std::uint64_t { kSigma = 1, kEnsemble = 2, kIntegralU = 3, kIntegralV = 4, kTail = 5, kScan = 6 };

json exact(double v) { return {{"value", v}, {"exact", true}}; }
json with_err(double v, double se) { return {{"value", v}, {"stderr", se}}; }
json num(const stats::EstimateWithCI& e) { return e.exact ? exact(e.value) : with_err(e.value, e.std_err); }

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct Outcome {
  json results = json::object();
  json verdicts = json::array();
  json files = json::array();
  bool pass = true;

  void verdict(const std::string& name, bool ok, const std::string& detail) {
    verdicts.push_back({{"name", name}, {"pass", ok}, {"detail", detail}});
    pass = pass && ok;
  }
};

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& opt;
  Outcome& out;

  [[nodiscard]] fs::path file(const std::string& name) const {
    out.files.push_back(name);
    return opt.out_dir / name;
  }
  void log(const std::string& msg) const {
    if (!opt.quiet) std::cerr << "[" << cfg.experiment << "] " << msg << '\n';
  }
};

// --- observables from config ----------------------------------------------

obs::CellWeightProfile parse_profile(const json& p, int dim) {
  const auto kind = p.at("kind").get<std::string>();
  const double amp = p.value("amplitude", 1.0);
  if (kind == "geometric") return obs::CellWeightProfile::geometric(amp, p.at("rho").get<double>(), dim);
  if (kind == "power") return obs::CellWeightProfile::power_law(amp, p.at("exponent").get<double>(), dim);
  std::vector<std::pair<Cell, double>> weights;
  for (const auto& e : p.at("weights"))
    weights.emplace_back(Cell{e.at("cell")[0].get<std::int64_t>(), e.at("cell")[1].get<std::int64_t>()},
                         e.at("w").get<double>());
  return obs::CellWeightProfile::finite(std::move(weights), dim);
}

obs::CylinderFunction parse_local(const json& l) {
  if (l.contains("preset")) return obs::CylinderFunction::constant(l.value("value", 1.0));
  const int depth = l.at("depth").get<int>();
  const bool full = l.value("key", std::string("scatterer")) == "full";
  std::map<obs::Window, double> table;
  if (l.contains("table")) {
    for (const auto& e : l.at("table")) {
      obs::Window w;
      for (const auto& s : e.at("window")) {
        if (full) {
          w.push_back(encode_symbol(s[0].get<std::uint32_t>(), Cell{s[1].get<std::int64_t>(), s[2].get<std::int64_t>()}));
        } else {
          w.push_back(s.get<std::uint64_t>());
        }
      }
      table[w] = e.at("value").get<double>();
    }
  }
  std::optional<std::size_t> alphabet;
  if (l.contains("alphabet")) alphabet = l.at("alphabet").get<std::size_t>();
  return obs::CylinderFunction(depth, full ? obs::SymbolKey::full : obs::SymbolKey::scatterer, std::move(table),
                               l.value("fallback", 0.0), alphabet);
}

obs::CylinderFunction local_of(const json& spec) {
  if (spec.contains("preset")) return obs::CylinderFunction::constant(1.0);
  return spec.contains("local") ? parse_local(spec.at("local")) : obs::CylinderFunction::constant(1.0);
}

obs::Observable build(const billiard::BilliardSystem& sys, const json& spec, std::size_t n, std::uint64_t seed,
                      ExecPolicy policy) {
  if (spec.contains("preset")) return obs::indicator_zero_cell(2);
  return obs::make_observable(sys, parse_profile(spec.at("profile"), 2), local_of(spec), {}, spec.value("p", 2.0), n,
                              seed, policy);
}

obs::Observable build(const markov::MarkovExtension& sys, const json& spec, std::size_t n, std::uint64_t seed,
                      ExecPolicy policy) {
  const int dim = sys.dimension();
  if (spec.contains("preset")) return obs::indicator_zero_cell(dim);
  auto g = local_of(spec);
  auto profile = parse_profile(spec.at("profile"), dim);
  if (g.is_constant() || (g.depth() == 0 && g.key() == obs::SymbolKey::scatterer)) {
    Eigen::VectorXd values(static_cast<Eigen::Index>(sys.n_states()));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const std::uint64_t code = encode_symbol(static_cast<std::uint32_t>(i), Cell{});
      values(i) = g.is_constant() ? g.fallback() : g(std::span<const std::uint64_t>(&code, 1));
    }
    return mixing::oracle_observable(sys, std::move(profile), values);
  }
  return obs::make_observable(sys, std::move(profile), std::move(g), {}, spec.value("p", 2.0), n, seed, policy);
}

json observable_json(const obs::Observable& u) {
  const auto sum = u.profile().abs_sum();
  json j;
  j["profile_abs_sum"] = exact(sum.value);
  j["sup_norm_sum"] = exact(u.sup_norm_sum());
  j["depth"] = u.depth();
  if (u.integral()) j["integral"] = num(*u.integral());
  return j;
}

// --- sigma ------------------------------------------------------------------

struct SigmaInfo {
  stats::CovarianceMatrix sigma;
  mixing::LimitDensity phi0;
  json echo;
};

SigmaInfo sigma_for(const Context& ctx, const markov::MarkovExtension& sys) {
  SigmaInfo s;
  s.sigma = mixing::oracle_sigma(sys);
  s.phi0 = mixing::LimitDensity::exact(s.sigma);
  s.echo = {{"xx", exact(s.sigma.xx)}, {"xy", exact(s.sigma.xy)}, {"yy", exact(s.sigma.yy)},
            {"phi0", exact(s.phi0.value)}, {"source", "exact oracle"}};
  (void)ctx;
  return s;
}

template <class S>
SigmaInfo sigma_estimated(const Context& ctx, const S& sys, stats::SigmaEstimate* keep = nullptr) {
  const auto& p = ctx.cfg.params;
  ctx.log("estimating sigma: n=" + std::to_string(p.n_sigma) + " N=" + std::to_string(p.sigma_samples));
  const auto est = stats::estimate_sigma(sys, p.n_sigma, p.sigma_samples, derive_seed(ctx.cfg.seed, kSigma),
                                         ctx.opt.policy);
  if (keep) *keep = est;
  SigmaInfo s;
  s.sigma = est.sigma;
  s.phi0 = mixing::LimitDensity::from(est, sys.dimension());
  s.echo = {{"xx", with_err(est.sigma.xx, est.std_err.xx)},
            {"xy", with_err(est.sigma.xy, est.std_err.xy)},
            {"yy", with_err(est.sigma.yy, est.std_err.yy)},
            {"phi0", with_err(est.phi0, est.phi0_stderr)},
            {"drift_x", with_err(est.drift[0], est.drift_stderr[0])},
            {"drift_y", with_err(est.drift[1], est.drift_stderr[1])},
            {"n_sigma", est.n_sigma},
            {"source", "batch means"}};
  return s;
}

SigmaInfo sigma_for(const Context& ctx, const billiard::BilliardSystem& sys) { return sigma_estimated(ctx, sys); }

// --- experiments ------------------------------------------------------------

void run_validate(const Context& ctx, const billiard::BilliardSystem& sys) {
  const auto& t = sys.table();
  ctx.out.results["horizon_bound"] = exact(t.horizon_bound());
  ctx.out.results["mean_free_path"] = exact(t.mean_free_path());
  ctx.out.results["free_area"] = exact(t.free_area());
  ctx.out.results["total_perimeter"] = exact(t.total_perimeter());
  ctx.out.verdict("table_valid", t.validated(), "disjoint scatterers, no corridor up to |p|,|q| <= " +
                                                    std::to_string(ctx.cfg.system.n_dirs));
}

void run_validate(const Context& ctx, const markov::MarkovExtension& sys) {
  json pi = json::array();
  for (Eigen::Index i = 0; i < sys.stationary().size(); ++i) pi.push_back(exact(sys.stationary()(i)));
  ctx.out.results["stationary"] = pi;
  ctx.out.results["return_period"] = sys.return_period();
  ctx.out.verdict("chain_valid", true, "row-stochastic, stationary vector positive, cycles generate the lattice");
}

void run_sigma(const Context& ctx, const billiard::BilliardSystem& sys) {
  try {
    const auto s = sigma_estimated(ctx, sys);
    ctx.out.results["sigma"] = s.echo;
    ctx.out.verdict("sigma_positive_definite", s.sigma.positive_definite(), "no drift beyond 4 stderr");
  } catch (const stats::StatsError& e) {
    ctx.out.verdict("sigma_positive_definite", false, e.what());
  }
}

void run_sigma(const Context& ctx, const markov::MarkovExtension& sys) {
  const auto ex = sigma_for(ctx, sys);
  ctx.out.results["sigma_exact"] = ex.echo;
  stats::SigmaEstimate est;
  try {
    const auto mc = sigma_estimated(ctx, sys, &est);
    ctx.out.results["sigma"] = mc.echo;
  } catch (const stats::StatsError& e) {
    ctx.out.verdict("sigma_matches_exact", false, e.what());
    return;
  }
  const bool ok = std::abs(est.sigma.xx - ex.sigma.xx) <= 4.0 * est.std_err.xx &&
                  std::abs(est.sigma.xy - ex.sigma.xy) <= 4.0 * est.std_err.xy + 1e-15 &&
                  std::abs(est.sigma.yy - ex.sigma.yy) <= 4.0 * est.std_err.yy + 1e-15;
  ctx.out.verdict("sigma_matches_exact", ok, "batch-means estimate within 4 stderr of the exact covariance");
}

void llt_outputs(const Context& ctx, const std::vector<stats::LltRow>& rows) {
  Csv csv(ctx.file("llt.csv"), {"n", "lx", "ly", "n_phat", "phi_b", "ratio", "stderr", "flag"});
  json jr = json::array();
  std::map<Cell, svg::Series> curves;
  for (const auto& r : rows) {
    csv.row({std::to_string(r.n), std::to_string(r.l.x), std::to_string(r.l.y), g17(r.n_phat), g17(r.phi_b),
             g17(r.ratio), g17(r.std_err), r.flag ? "1" : "0"});
    jr.push_back({{"n", r.n},
                  {"l", {r.l.x, r.l.y}},
                  {"n_phat", r.exact ? exact(r.n_phat) : with_err(r.n_phat, r.std_err)},
                  {"phi_b", exact(r.phi_b)},
                  {"ratio", r.exact ? exact(r.ratio) : with_err(r.ratio, r.phi_b > 0 ? r.std_err / r.phi_b : 0.0)},
                  {"flag", r.flag}});
    auto& s = curves[r.l];
    s.name = "l = (" + std::to_string(r.l.x) + "," + std::to_string(r.l.y) + ")";
    s.points.emplace_back(static_cast<double>(r.n), r.ratio);
  }
  ctx.out.results["llt"] = jr;
  svg::Plot plot{"LLT ratio n p(S_n = l) / Phi_B(l / sqrt n)", "n", "ratio", true, {}};
  for (auto& [cell, s] : curves) plot.series.push_back(std::move(s));
  svg::write(plot, ctx.file("llt_ratio.svg"));
}

void run_llt(const Context& ctx, const markov::MarkovExtension& sys) {
  const auto& p = ctx.cfg.params;
  const auto s = sigma_for(ctx, sys);
  ctx.out.results["sigma"] = s.echo;
  const double period = static_cast<double>(sys.return_period());
  ctx.out.results["return_period"] = sys.return_period();
  std::vector<stats::LltRow> rows;
  bool ok = true;
  std::string worst;
  for (const auto n : p.n_grid) {
    ctx.log("exact distribution at n=" + std::to_string(n));
    const auto dist = markov::exact_distribution(sys, n, {false, ctx.opt.policy, markov::kDefaultCellBudget});
    for (const auto& l : p.cells) {
      auto row = stats::make_llt_row(n, l, stats::EstimateWithCI::exact_value(dist.q(l)), s.sigma);
      const bool row_ok = std::abs(row.ratio / period - 1.0) <= p.tolerance;
      if (!row_ok) {
        ok = false;
        worst = "n=" + std::to_string(n) + " l=(" + std::to_string(l.x) + "," + std::to_string(l.y) +
                ") ratio=" + g17(row.ratio);
      }
      rows.push_back(row);
    }
  }
  llt_outputs(ctx, rows);
  ctx.out.verdict("llt_ratio", ok,
                  ok ? "ratio / return period within tolerance on every row" : "outside tolerance: " + worst);
}

void run_llt(const Context& ctx, const billiard::BilliardSystem& sys) {
  const auto& p = ctx.cfg.params;
  SigmaInfo s;
  try {
    s = sigma_for(ctx, sys);
  } catch (const stats::StatsError& e) {
    ctx.out.verdict("sigma_positive_definite", false, e.what());
    return;
  }
  ctx.out.results["sigma"] = s.echo;
  ctx.log("LLT ensemble N=" + std::to_string(p.N));
  const auto rows = stats::llt_report(sys, p.n_grid, p.cells, p.N, s.sigma, derive_seed(ctx.cfg.seed, kEnsemble),
                                      ctx.opt.policy);
  llt_outputs(ctx, rows);
  bool ok = true;
  std::string bad;
  for (const auto& r : rows) {
    const bool row_ok = std::abs(r.n_phat - r.phi_b) <= 3.0 * r.std_err + mixing::kModelMargin * r.phi_b;
    if (!row_ok) {
      ok = false;
      bad = "n=" + std::to_string(r.n) + " ratio=" + g17(r.ratio);
    }
  }
  ctx.out.verdict("llt_within_margin", ok, ok ? "|n p - Phi_B| <= 3 stderr + 10% on every row" : bad);
}

template <class S>
void run_mixing(const Context& ctx, const S& sys) {
  const auto& p = ctx.cfg.params;
  SigmaInfo s;
  try {
    s = sigma_for(ctx, sys);
  } catch (const stats::StatsError& e) {
    ctx.out.verdict("sigma_positive_definite", false, e.what());
    return;
  }
  ctx.out.results["sigma"] = s.echo;
  const auto u = build(sys, ctx.cfg.observables.at(p.u), p.integral_samples, derive_seed(ctx.cfg.seed, kIntegralU),
                       ctx.opt.policy);
  const auto v = build(sys, ctx.cfg.observables.at(p.v), p.integral_samples, derive_seed(ctx.cfg.seed, kIntegralV),
                       ctx.opt.policy);
  const auto hyp = obs::hypothesis_check(u, v);
  ctx.out.results["hypotheses"] = {{"summable", hyp.summable},
                                   {"modulus_summable", hyp.modulus_summable},
                                   {"modulus_vanishes", hyp.modulus_vanishes},
                                   {"u_sup_sum", exact(hyp.u_sup_sum)},
                                   {"v_p_sum_bound", exact(hyp.v_p_sum)},
                                   {"vanishing_depth", hyp.vanishing_depth},
                                   {"detail", hyp.detail}};
  ctx.out.verdict("hypotheses", hyp.passed(), hyp.detail);
  if (!hyp.passed()) return;
  ctx.out.results["u"] = observable_json(u);
  ctx.out.results["v"] = observable_json(v);

  double period = 1.0;
  if constexpr (std::is_same_v<S, markov::MarkovExtension>) period = static_cast<double>(sys.return_period());
  ctx.log("correlation ensemble N=" + std::to_string(p.N));
  const mixing::ObservablePair pair{&u, &v};
  const auto samples = mixing::correlation_samples(sys, std::span<const mixing::ObservablePair>(&pair, 1), p.n_grid,
                                                   p.N, derive_seed(ctx.cfg.seed, kEnsemble), ctx.opt.policy);
  const auto report = mixing::mixing_rows(samples.n_grid, samples.values[0], samples.truncation[0], u, v, s.phi0,
                                          period);

  std::vector<double> exact_values;
  if constexpr (std::is_same_v<S, markov::MarkovExtension>) {
    if (u.depth() == 0 && v.depth() == 0)
      for (const auto n : samples.n_grid) exact_values.push_back(mixing::exact_correlation(sys, u, v, n, ctx.opt.policy));
  }

  Csv csv(ctx.file("mixing.csv"), {"n", "I_hat", "I_stderr", "n_I_hat", "n_I_stderr", "target", "target_stderr",
                                   "allowed", "verdict"});
  json rows = json::array();
  svg::Series est{"n^(d/2) I_n", {}}, tgt{"Phi_B(0) int u int v", {}};
  bool oracle_ok = true;
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const auto& r = report.rows[k];
    csv.row({std::to_string(r.n), g17(r.I_hat.value), g17(r.I_hat.std_err), g17(r.n_I_hat), g17(r.n_I_stderr),
             g17(r.target), g17(r.target_stderr), g17(r.allowed), r.verdict ? "PASS" : "FAIL"});
    json jr = {{"n", r.n},
               {"I_hat", num(r.I_hat)},
               {"n_I_hat", with_err(r.n_I_hat, r.n_I_stderr)},
               {"target", r.target_stderr > 0 ? with_err(r.target, r.target_stderr) : exact(r.target)},
               {"truncation_bound", exact(r.truncation)},
               {"allowed", exact(r.allowed)},
               {"verdict", r.verdict}};
    if (!exact_values.empty()) {
      jr["I_exact"] = exact(exact_values[k]);
      oracle_ok = oracle_ok && std::abs(r.I_hat.value - exact_values[k]) <= 4.0 * r.I_hat.std_err + r.truncation;
    }
    rows.push_back(jr);
    est.points.emplace_back(static_cast<double>(r.n), r.n_I_hat);
    tgt.points.emplace_back(static_cast<double>(r.n), r.target);
  }
  ctx.out.results["mixing"] = rows;
  ctx.out.results["plateau"] = {{"consistent", report.plateau}, {"worst_z", exact(report.worst_plateau_z)}};
  ctx.out.results["return_period"] = period;
  svg::write({"Mixing rate n^(d/2) int u.v o f^n", "n", "scaled correlation", true, {est, tgt}},
             ctx.file("mixing.svg"));
  std::string bad;
  for (const auto& r : report.rows)
    if (!r.verdict) bad += " n=" + std::to_string(r.n) + ":" + g17(r.n_I_hat) + " vs " + g17(r.target);
  ctx.out.verdict("mixing_rate", report.verdict,
                  report.verdict ? "every row within 3 combined stderr + 10% of Phi_B(0) int u int v" : bad);
  if (!exact_values.empty())
    ctx.out.verdict("oracle_agreement", oracle_ok, "Monte Carlo within 4 stderr of the exact matrix value");
}

template <class S>
void run_tail(const Context& ctx, const S& sys) {
  const auto& p = ctx.cfg.params;
  ctx.log("return tail N=" + std::to_string(p.N) + " cap=" + std::to_string(p.cap));
  const auto curve = mixing::return_tail_empirical(sys, p.cap, p.N, derive_seed(ctx.cfg.seed, kTail), ctx.opt.policy);
  Csv csv(ctx.file("tail.csv"), {"n", "survival", "stderr", "survival_times_log_n"});
  svg::Series surv{"P(phi > n)", {}}, scaled{"P(phi > n) log n", {}};
  bool monotone = true;
  bool identity = true;
  std::size_t returned = 0;
  for (std::size_t n = 0; n <= p.cap; ++n) {
    const auto& e = curve.survival[n];
    const double ln = n > 1 ? std::log(static_cast<double>(n)) : 0.0;
    csv.row({std::to_string(n), g17(e.value), g17(e.std_err), g17(e.value * ln)});
    if (n > 0) {
      surv.points.emplace_back(static_cast<double>(n), e.value);
      if (n > 1) scaled.points.emplace_back(static_cast<double>(n), e.value * ln);
      monotone = monotone && curve.survivor_counts[n] <= curve.survivor_counts[n - 1];
    }
    returned += curve.return_counts[n];
    identity = identity && curve.survivor_counts[n] + returned == curve.n_samples;
  }
  json pts = json::object();
  for (const auto n : p.n_grid)
    if (n <= p.cap) pts[std::to_string(n)] = num(curve.survival[n]);
  ctx.out.results["survival"] = pts;
  ctx.out.results["censored"] = curve.censored;
  svg::write({"Return-time survival", "n", "P(phi > n)", true, {surv}}, ctx.file("tail.svg"));
  svg::write({"Return-time survival times log n", "n", "P(phi > n) log n", true, {scaled}},
             ctx.file("tail_log.svg"));
  ctx.out.verdict("tail_consistent", monotone && identity, "nonincreasing; survivors + returns = N at every n");

  if constexpr (std::is_same_v<S, markov::MarkovExtension>) {
    const std::size_t n_exact = std::min<std::size_t>(p.cap, 100);
    const auto ex = markov::exact_return_tail(sys, n_exact);
    bool ok = true;
    json cmp = json::object();
    for (std::size_t n = 1; n <= n_exact; ++n) {
      const auto& e = curve.survival[n];
      ok = ok && std::abs(e.value - ex.tail[n]) <= 4.0 * e.std_err + 1e-12;
    }
    for (const auto n : p.n_grid)
      if (n <= n_exact) cmp[std::to_string(n)] = exact(ex.tail[n]);
    ctx.out.results["survival_exact"] = cmp;
    ctx.out.verdict("oracle_agreement", ok,
                    "empirical survival within 4 stderr of the exact tail for n <= " + std::to_string(n_exact));
  }
}

void run_identities(const Context& ctx, const markov::MarkovExtension& sys) {
  const auto n_max = ctx.cfg.params.n_max;
  try {
    const auto tr = markov::operator_TR(sys, n_max);
    ctx.out.results["T_renewal_residual"] = exact(tr.max_residual);
    ctx.out.verdict("T_renewal", tr.max_residual <= markov::kIdentityTolerance,
                    "max |T_n - sum T_{n-j} R_j| = " + g17(tr.max_residual));
  } catch (const markov::IdentityViolation& e) {
    ctx.out.verdict("T_renewal", false, e.what());
  }
  try {
    const auto u = markov::operator_U_check(sys, n_max);
    ctx.out.results["U_renewal_residual"] = exact(u.max_residual);
    ctx.out.results["U_operator_residual"] = exact(u.max_operator_residual);
    ctx.out.verdict("U_renewal", u.max_residual <= markov::kIdentityTolerance,
                    "max |1 - sum U_{n-j} Q_{j,0} 1| = " + g17(u.max_residual));
  } catch (const markov::IdentityViolation& e) {
    ctx.out.verdict("U_renewal", false, e.what());
  }
}

template <class S>
void run_prop_scan(const Context& ctx, const S& sys) {
  const auto& p = ctx.cfg.params;
  SigmaInfo s;
  try {
    s = sigma_for(ctx, sys);
  } catch (const stats::StatsError& e) {
    ctx.out.verdict("sigma_positive_definite", false, e.what());
    return;
  }
  ctx.out.results["sigma"] = s.echo;
  const auto gu = local_of(ctx.cfg.observables.at(p.u));
  const auto gv = local_of(ctx.cfg.observables.at(p.v));
  ctx.log("prop scan N=" + std::to_string(p.N));
  const auto scan = mixing::prop_error_scan(sys, gu, gv, p.k, p.n_grid, p.l, p.N, s.sigma,
                                            derive_seed(ctx.cfg.seed, kScan), ctx.opt.policy);
  auto emit = [&](const mixing::PropScan& sc, const std::string& tag) {
    Csv csv(ctx.file("prop_scan" + tag + ".csv"), {"n", "m", "lhs", "lhs_stderr", "target", "residual",
                                                   "residual_stderr", "scaled", "scaled_stderr"});
    json rows = json::array();
    svg::Series ser{"residual (n-2k)^(3/2)", {}};
    for (const auto& r : sc.rows) {
      csv.row({std::to_string(r.n), std::to_string(r.m), g17(r.lhs.value), g17(r.lhs.std_err), g17(r.target),
               g17(r.residual), g17(r.residual_stderr), g17(r.scaled), g17(r.scaled_stderr)});
      rows.push_back({{"n", r.n},
                      {"lhs", num(r.lhs)},
                      {"target", r.target_stderr > 0 ? with_err(r.target, r.target_stderr) : exact(r.target)},
                      {"scaled_residual", r.lhs.exact ? exact(r.scaled) : with_err(r.scaled, r.scaled_stderr)}});
      ser.points.emplace_back(static_cast<double>(r.n), r.scaled);
    }
    ctx.out.results["prop_scan" + tag] = {{"k", sc.k}, {"verdict", mixing::to_string(sc.verdict)}, {"rows", rows}};
    svg::write({"Scaled LLT residual", "n", "residual (n-2k)^(3/2)", true, {ser}}, ctx.file("prop_scan" + tag + ".svg"));
  };
  emit(scan, "");
  if constexpr (std::is_same_v<S, markov::MarkovExtension>) {
    if (gu.depth() == 0 && gv.depth() == 0) {
      Eigen::VectorXd uu(static_cast<Eigen::Index>(sys.n_states())), vv(uu.size());
      for (Eigen::Index i = 0; i < uu.size(); ++i) {
        const std::uint64_t code = encode_symbol(static_cast<std::uint32_t>(i), Cell{});
        const std::span<const std::uint64_t> w(&code, 1);
        uu(i) = gu.is_constant() ? gu.fallback() : gu(w);
        vv(i) = gv.is_constant() ? gv.fallback() : gv(w);
      }
      emit(mixing::prop_error_exact(sys, uu, vv, p.k, p.n_grid, p.l, s.sigma, ctx.opt.policy), "_exact");
    }
  }
  // A consistency scan, not a hard verdict.
  ctx.out.verdict("prop_scan_completed", true, std::string("scan verdict ") + mixing::to_string(scan.verdict));
}

template <class S>
void dispatch(const Context& ctx, const S& sys) {
  const auto& e = ctx.cfg.experiment;
  if (e == "validate") return run_validate(ctx, sys);
  if (e == "sigma") return run_sigma(ctx, sys);
  if (e == "llt") return run_llt(ctx, sys);
  if (e == "mixing") return run_mixing(ctx, sys);
  if (e == "tail") return run_tail(ctx, sys);
  if (e == "prop-scan") return run_prop_scan(ctx, sys);
  if (e == "oracle-identities") {
    if constexpr (std::is_same_v<S, markov::MarkovExtension>) return run_identities(ctx, sys);
    throw SchemaError({"/system/kind: oracle-identities needs a markov system"});
  }
  throw SchemaError({"/experiment: unknown experiment '" + e + "'"});
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(options.out_dir);
  RunOptions opt = options;
  if (opt.policy.mode == Exec::parallel && opt.policy.workers == 0 && config.params.workers > 0)
    opt.policy.workers = config.params.workers;

  Outcome outcome;
  json error;
  int code = kPass;
  try {
    const Context ctx{config, opt, outcome};
    if (config.system.kind == "billiard") {
      if (!config.table) throw SchemaError({"/system: billiard table was not validated"});
      const billiard::BilliardSystem sys(*config.table);
      dispatch(ctx, sys);
    } else {
      const auto chain = make_chain(config.system);
      dispatch(ctx, chain);
    }
    code = outcome.pass ? kPass : kVerdictFailure;
  } catch (const SchemaError& e) {
    error = {{"type", "SchemaError"}, {"message", e.what()}, {"violations", e.violations}};
    code = kConfigError;
  } catch (const billiard::TableError& e) {
    error = {{"type", "TableError"}, {"message", e.what()}};
    code = kConfigError;
  } catch (const obs::HypothesisFailed& e) {
    error = {{"type", "HypothesisFailed"}, {"message", e.what()}};
    code = kVerdictFailure;
  } catch (const std::exception& e) {
    error = {{"type", "RuntimeError"}, {"message", e.what()}};
    code = kRuntimeError;
  }

  json bundle;
  bundle["build"] = {{"git_describe", LORENTZ_GIT_DESCRIBE}};
  bundle["experiment"] = config.experiment;
  bundle["config"] = config.normalized;
  bundle["verdict"] = error.is_null() ? (outcome.pass ? "PASS" : "FAIL") : "ERROR";
  bundle["exit_code"] = code;
  bundle["verdicts"] = outcome.verdicts;
  bundle["results"] = outcome.results;
  bundle["files"] = outcome.files;
  if (!error.is_null()) bundle["error"] = error;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bundle["timing"] = {{"seconds", seconds},
                      {"workers", opt.policy.mode == Exec::serial ? 1 : (opt.policy.workers > 0 ? opt.policy.workers
                                                                                                 : available_workers())}};
  write_json(opt.out_dir / "results.json", bundle);
  return code;
}

}  // namespace lorentz::cli
