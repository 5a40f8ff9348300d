#include "lorentz/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lorentz::obs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kShellTolerance = 1e-13;
constexpr std::int64_t kMaxShells = 10'000'000;

std::int64_t l1(Cell l) { return std::abs(l.x) + std::abs(l.y); }

double radial_weight(ProfileKind kind, double amplitude, double rate, std::int64_t r) {
  switch (kind) {
    case ProfileKind::geometric:
      return amplitude * std::pow(rate, static_cast<double>(r));
    case ProfileKind::power:
      return amplitude * std::pow(1.0 + static_cast<double>(r), -rate);
    case ProfileKind::finite:
      break;
  }
  return 0.0;
}

// alphabet^free, saturating at a large value.
double atom_count(std::size_t alphabet, std::size_t free_positions) {
  return std::pow(static_cast<double>(alphabet), static_cast<double>(free_positions));
}

bool same_point(const billiard::PhasePoint& a, const billiard::PhasePoint& b) {
  return a.scatterer == b.scatterer && a.theta == b.theta && a.phi == b.phi;
}

Window codes_of(const billiard::Itinerary& it) {
  Window w(it.symbols.size());
  std::transform(it.symbols.begin(), it.symbols.end(), w.begin(), [](const billiard::Symbol& s) { return s.code(); });
  return w;
}

// A nearby point on the same scatterer: both coordinates moved by at most
// `scale` of their range.
billiard::PhasePoint perturb(const billiard::PhasePoint& x, double scale, RngStream& rng) {
  using billiard::kPi;
  using billiard::kTwoPi;
  billiard::PhasePoint y = x;
  y.theta = std::fmod(x.theta + scale * kTwoPi * (rng.uniform() - 0.5) + kTwoPi, kTwoPi);
  const double lim = 0.5 * kPi - 1e-9;
  y.phi = std::clamp(x.phi + scale * kPi * (rng.uniform() - 0.5), -lim, lim);
  return y;
}

}  // namespace

// --- CellWeightProfile ---------------------------------------------------

CellWeightProfile CellWeightProfile::geometric(double amplitude, double rho, int dim) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("geometric profile: rho must lie in (0,1)");
  if (dim != 1 && dim != 2) throw std::invalid_argument("profile dimension must be 1 or 2");
  CellWeightProfile p;
  p.kind_ = ProfileKind::geometric;
  p.dim_ = dim;
  p.amplitude_ = amplitude;
  p.rate_ = rho;
  return p;
}

CellWeightProfile CellWeightProfile::power_law(double amplitude, double exponent, int dim) {
  if (!(exponent > 0.0)) throw std::invalid_argument("power profile: exponent must be positive");
  if (dim != 1 && dim != 2) throw std::invalid_argument("profile dimension must be 1 or 2");
  CellWeightProfile p;
  p.kind_ = ProfileKind::power;
  p.dim_ = dim;
  p.amplitude_ = amplitude;
  p.rate_ = exponent;
  return p;
}

CellWeightProfile CellWeightProfile::finite(std::vector<std::pair<Cell, double>> weights, int dim) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("profile dimension must be 1 or 2");
  CellWeightProfile p;
  p.kind_ = ProfileKind::finite;
  p.dim_ = dim;
  for (const auto& [cell, w] : weights) {
    if (dim == 1 && cell.y != 0) throw std::invalid_argument("one-dimensional profile with nonzero y");
    if (!std::isfinite(w)) throw std::invalid_argument("profile weight is not finite");
    if (w != 0.0) p.weights_[cell] += w;
  }
  return p;
}

double CellWeightProfile::weight(Cell l) const {
  if (kind_ == ProfileKind::finite) {
    const auto it = weights_.find(l);
    return it == weights_.end() ? 0.0 : it->second;
  }
  if (dim_ == 1 && l.y != 0) return 0.0;
  return radial_weight(kind_, amplitude_, rate_, l1(l));
}

std::int64_t CellWeightProfile::shell_count(std::int64_t r) const noexcept {
  if (r == 0) return 1;
  return dim_ == 1 ? 2 : 4 * r;
}

double CellWeightProfile::partial_abs_sum(std::int64_t radius) const {
  if (kind_ == ProfileKind::finite) {
    double s = 0.0;
    for (const auto& [cell, w] : weights_)
      if (l1(cell) <= radius) s += std::abs(w);
    return s;
  }
  double s = 0.0;
  for (std::int64_t r = 0; r <= radius; ++r)
    s += static_cast<double>(shell_count(r)) * std::abs(radial_weight(kind_, amplitude_, rate_, r));
  return s;
}

double CellWeightProfile::tail_abs_sum(std::int64_t radius) const {
  const double a = std::abs(amplitude_);
  const auto R = static_cast<double>(radius);
  switch (kind_) {
    case ProfileKind::finite: {
      double s = 0.0;
      for (const auto& [cell, w] : weights_)
        if (l1(cell) > radius) s += std::abs(w);
      return s;
    }
    case ProfileKind::geometric: {
      const double rho = rate_;
      const double head = std::pow(rho, R + 1.0);
      if (dim_ == 1) return a * 2.0 * head / (1.0 - rho);
      // sum_{r > R} 4 r rho^r
      return a * 4.0 * head * ((R + 1.0) - R * rho) / ((1.0 - rho) * (1.0 - rho));
    }
    case ProfileKind::power: {
      const double alpha = rate_;
      // shell terms are bounded by (1+r)^{d-1-alpha} (times 2 or 4); compare with an integral.
      if (alpha <= dim_) return kInf;
      const double excess = alpha - dim_;
      return a * (dim_ == 1 ? 2.0 : 4.0) * std::pow(R + 1.0, -excess) / excess;
    }
  }
  return kInf;
}

ProfileSum CellWeightProfile::abs_sum() const {
  ProfileSum out;
  const double a = std::abs(amplitude_);
  const auto d = static_cast<double>(dim_);
  switch (kind_) {
    case ProfileKind::finite: {
      std::int64_t radius = 0;
      for (const auto& [cell, w] : weights_) radius = std::max(radius, l1(cell));
      out.value = out.closed_form = out.partial = partial_abs_sum(radius);
      out.shells = radius;
      out.finite = true;
      out.method = "enumerated finite support";
      return out;
    }
    case ProfileKind::geometric: {
      out.closed_form = a * std::pow((1.0 + rate_) / (1.0 - rate_), d);
      out.value = out.closed_form;
      out.finite = true;
      std::int64_t r = 0;
      while (tail_abs_sum(r) > kShellTolerance * out.closed_form && r < kMaxShells) ++r;
      out.shells = r;
      out.partial = partial_abs_sum(r);
      out.method = "closed form ((1+rho)/(1-rho))^d, checked by shell summation";
      return out;
    }
    case ProfileKind::power: {
      const double alpha = rate_;
      if (alpha <= d) {
        out.value = kInf;
        out.closed_form = std::numeric_limits<double>::quiet_NaN();
        out.finite = false;
        out.shells = 100'000;
        out.partial = partial_abs_sum(out.shells);
        std::ostringstream msg;
        msg << "(1+|l|_1)^-" << alpha << " weights: shell " << (dim_ == 1 ? "count 2" : "count 4r")
            << " makes sum_l |w(l)| diverge (partial sum " << out.partial << " at radius " << out.shells << ")";
        out.method = msg.str();
        return out;
      }
      // sum_{r>=1} r (1+r)^-a = zeta(a-1) - zeta(a); sum_{r>=1} (1+r)^-a = zeta(a) - 1
      out.closed_form = dim_ == 1 ? a * (1.0 + 2.0 * (std::riemann_zeta(alpha) - 1.0))
                                  : a * (1.0 + 4.0 * (std::riemann_zeta(alpha - 1.0) - std::riemann_zeta(alpha)));
      out.value = out.closed_form;
      out.finite = true;
      out.shells = 10'000;
      out.partial = partial_abs_sum(out.shells);
      out.method = "closed form via zeta values";
      return out;
    }
  }
  return out;
}

double CellWeightProfile::total() const {
  if (kind_ == ProfileKind::finite) {
    double s = 0.0;
    for (const auto& [cell, w] : weights_) s += w;
    return s;
  }
  const auto sum = abs_sum();
  return amplitude_ < 0.0 ? -sum.value : sum.value;
}

Truncation CellWeightProfile::truncate(double relative) const {
  Truncation out;
  if (kind_ == ProfileKind::finite) {
    for (const auto& [cell, w] : weights_) {
      out.cells.emplace_back(cell, w);
      out.radius = std::max(out.radius, l1(cell));
    }
    return out;
  }
  const auto sum = abs_sum();
  if (!sum.finite) throw HypothesisFailed("cannot truncate a non-summable profile: " + sum.method);
  std::int64_t R = 0;
  while (tail_abs_sum(R) > relative * sum.value && R < kMaxShells) ++R;
  out.radius = R;
  out.tail = tail_abs_sum(R);
  for (std::int64_t x = -R; x <= R; ++x) {
    const std::int64_t span = dim_ == 1 ? 0 : R - std::abs(x);
    for (std::int64_t y = -span; y <= span; ++y) {
      const Cell c{x, y};
      const double w = weight(c);
      if (w != 0.0) out.cells.emplace_back(c, w);
    }
  }
  return out;
}

// --- CylinderFunction ----------------------------------------------------

CylinderFunction::CylinderFunction(int depth, SymbolKey key, std::map<Window, double> table, double fallback,
                                   std::optional<std::size_t> alphabet_size)
    : depth_(depth), key_(key), table_(std::move(table)), fallback_(fallback), alphabet_(alphabet_size) {
  if (depth_ < 0) throw std::invalid_argument("cylinder depth must be >= 0");
  const auto width = static_cast<std::size_t>(2 * depth_ + 1);
  bool complete = false;
  if (alphabet_) complete = static_cast<double>(table_.size()) >= atom_count(*alphabet_, width);
  sup_ = complete ? 0.0 : std::abs(fallback_);
  for (const auto& [w, v] : table_) {
    if (w.size() != width) throw std::invalid_argument("cylinder table window has the wrong length");
    if (!std::isfinite(v)) throw std::invalid_argument("cylinder table value is not finite");
    sup_ = std::max(sup_, std::abs(v));
  }
}

CylinderFunction CylinderFunction::constant(double value) {
  return CylinderFunction(0, SymbolKey::scatterer, {}, value);
}

std::uint64_t CylinderFunction::key_of(std::uint64_t code) const noexcept {
  return key_ == SymbolKey::scatterer ? symbol_index(code) : code;
}

double CylinderFunction::operator()(std::span<const std::uint64_t> codes) const {
  if (table_.empty()) return fallback_;
  if (codes.size() != static_cast<std::size_t>(2 * depth_ + 1))
    throw std::invalid_argument("cylinder function evaluated on a window of the wrong length");
  Window keys(codes.size());
  std::transform(codes.begin(), codes.end(), keys.begin(), [this](std::uint64_t c) { return key_of(c); });
  const auto it = table_.find(keys);
  return it == table_.end() ? fallback_ : it->second;
}

double CylinderFunction::at(std::span<const std::uint64_t> codes, std::size_t center) const {
  const auto d = static_cast<std::size_t>(depth_);
  if (center < d || center + d >= codes.size()) throw std::out_of_range("cylinder window exceeds the recorded orbit");
  return (*this)(codes.subspan(center - d, 2 * d + 1));
}

std::pair<double, double> CylinderFunction::range_on_atom(std::span<const std::uint64_t> codes, int k_back,
                                                          int k_fwd) const {
  const double here = (*this)(codes);
  if (table_.empty() || (k_back >= depth_ && k_fwd >= depth_)) return {here, here};
  const auto width = static_cast<std::size_t>(2 * depth_ + 1);
  std::vector<bool> fixed(width);
  std::size_t free_positions = 0;
  for (int j = -depth_; j <= depth_; ++j) {
    const bool f = j >= -k_back && j <= k_fwd;
    fixed[static_cast<std::size_t>(j + depth_)] = f;
    free_positions += f ? 0 : 1;
  }
  double lo = here;
  double hi = here;
  std::size_t matches = 0;
  for (const auto& [w, v] : table_) {
    bool ok = true;
    for (std::size_t i = 0; i < width && ok; ++i) ok = !fixed[i] || w[i] == key_of(codes[i]);
    if (!ok) continue;
    ++matches;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!alphabet_ || static_cast<double>(matches) < atom_count(*alphabet_, free_positions)) {
    lo = std::min(lo, fallback_);
    hi = std::max(hi, fallback_);
  }
  return {lo, hi};
}

CylinderFunction CylinderFunction::envelope(int k, int sign) const {
  if (k < 0) throw std::invalid_argument("envelope depth must be >= 0");
  if (k >= depth_ || table_.empty()) return *this;
  struct Range {
    double lo;
    double hi;
    std::size_t count;
  };
  std::map<Window, Range> atoms;
  const auto cut = static_cast<std::size_t>(depth_ - k);
  const auto inner = static_cast<std::size_t>(2 * k + 1);
  for (const auto& [w, v] : table_) {
    Window key(w.begin() + static_cast<std::ptrdiff_t>(cut), w.begin() + static_cast<std::ptrdiff_t>(cut + inner));
    auto [it, fresh] = atoms.try_emplace(std::move(key), Range{v, v, 0});
    it->second.lo = std::min(it->second.lo, v);
    it->second.hi = std::max(it->second.hi, v);
    ++it->second.count;
  }
  std::map<Window, double> coarse;
  for (auto& [key, r] : atoms) {
    if (!alphabet_ || static_cast<double>(r.count) < atom_count(*alphabet_, 2 * cut)) {
      r.lo = std::min(r.lo, fallback_);
      r.hi = std::max(r.hi, fallback_);
    }
    coarse.emplace(key, sign < 0 ? r.lo : r.hi);
  }
  return CylinderFunction(k, key_, std::move(coarse), fallback_, alphabet_);
}

// --- Observable ----------------------------------------------------------

Observable::Observable(CellWeightProfile profile, CylinderFunction local, std::map<Cell, CylinderFunction> overrides,
                       double p)
    : profile_(std::move(profile)), local_(std::move(local)), overrides_(std::move(overrides)), p_(p) {
  if (!(p_ >= 1.0)) throw std::invalid_argument("observable norm exponent p must be >= 1");
}

const CylinderFunction& Observable::local_at(Cell l) const {
  const auto it = overrides_.find(l);
  return it == overrides_.end() ? local_ : it->second;
}

int Observable::depth() const noexcept {
  int d = local_.depth();
  for (const auto& [cell, g] : overrides_) d = std::max(d, g.depth());
  return d;
}

bool Observable::is_zero() const {
  if (profile_.kind() == ProfileKind::finite && profile_.finite_weights().empty()) return true;
  if (profile_.amplitude() == 0.0 && profile_.kind() != ProfileKind::finite) return true;
  return local_.sup_norm() == 0.0 && overrides_.empty();
}

double Observable::sup_norm_sum() const {
  const auto sum = profile_.abs_sum();
  if (!sum.finite) return kInf;
  double s = sum.value * local_.sup_norm();
  for (const auto& [cell, g] : overrides_) s += std::abs(profile_.weight(cell)) * (g.sup_norm() - local_.sup_norm());
  return s;
}

double Observable::p_norm_sum() const {
  if (!local_p_norm_) return sup_norm_sum();
  const auto sum = profile_.abs_sum();
  if (!sum.finite) return kInf;
  double s = sum.value * *local_p_norm_;
  for (const auto& [cell, norm] : override_p_norms_) s += std::abs(profile_.weight(cell)) * (norm - *local_p_norm_);
  return s;
}

double Observable::lipschitz_bound(const SeparationParams& params) const {
  const auto sum = profile_.abs_sum();
  if (!sum.finite) return kInf;
  auto bound = [&](const CylinderFunction& g) { return 2.0 * g.sup_norm() / std::pow(params.theta, g.depth()); };
  double s = sum.value * bound(local_);
  for (const auto& [cell, g] : overrides_) s += std::abs(profile_.weight(cell)) * (bound(g) - bound(local_));
  return s;
}

void Observable::set_local_moments(std::map<Cell, stats::EstimateWithCI> integrals, std::map<Cell, double> p_norms,
                                   stats::EstimateWithCI shared_integral, double shared_p_norm) {
  override_integrals_ = std::move(integrals);
  override_p_norms_ = std::move(p_norms);
  local_integral_ = shared_integral;
  local_p_norm_ = shared_p_norm;

  const double total = profile_.total();
  double shared_weight = total;
  double value = total * shared_integral.value;
  double var = 0.0;
  bool exact = shared_integral.exact;
  for (const auto& [cell, est] : override_integrals_) {
    const double w = profile_.weight(cell);
    value += w * (est.value - shared_integral.value);
    shared_weight -= w;
    var += w * w * est.std_err * est.std_err;
    exact = exact && est.exact;
  }
  var += shared_weight * shared_weight * shared_integral.std_err * shared_integral.std_err;
  stats::EstimateWithCI out;
  out.value = value;
  out.std_err = std::sqrt(var);
  out.n_samples = shared_integral.n_samples;
  out.exact = exact;
  integral_ = out;
}

Observable indicator_zero_cell(int dim) {
  Observable u(CellWeightProfile::indicator(Cell{}, dim), CylinderFunction::constant(1.0));
  u.set_local_moments({}, {}, stats::EstimateWithCI::exact_value(1.0), 1.0);
  return u;
}

// --- hypotheses ----------------------------------------------------------

HypothesisReport hypothesis_check(const Observable& u, const Observable& v) {
  HypothesisReport r;
  r.u_profile = u.profile().abs_sum();
  r.v_profile = v.profile().abs_sum();
  r.u_sup_sum = u.sup_norm_sum();
  // ||g||_p <= ||g||_inf under a probability measure.
  r.v_p_sum = v.sup_norm_sum();
  r.summable = std::isfinite(r.u_sup_sum) && std::isfinite(r.v_p_sum);
  // omega_{-k}^inf(v_l) <= 2 sup |v_l|, and vanishes once k >= depth.
  r.modulus_bound = 2.0 * r.v_p_sum;
  r.modulus_summable = std::isfinite(r.modulus_bound);
  r.vanishing_depth = std::max(u.depth(), v.depth());
  r.modulus_vanishes = true;

  std::ostringstream msg;
  if (!std::isfinite(r.u_sup_sum)) msg << "sum_l ||u_l||_inf diverges: " << r.u_profile.method << ". ";
  if (!std::isfinite(r.v_p_sum)) msg << "sum_l ||v_l||_p diverges: " << r.v_profile.method << ". ";
  if (r.passed()) {
    msg << "sum ||u_l||_inf = " << r.u_sup_sum << ", sum ||v_l||_p <= " << r.v_p_sum
        << "; continuity moduli vanish for k >= " << r.vanishing_depth;
  }
  r.detail = msg.str();
  return r;
}

HypothesisReport certify(const Observable& u, const Observable& v) {
  auto r = hypothesis_check(u, v);
  if (!r.passed()) throw HypothesisFailed(r.detail);
  return r;
}

Observable envelope(const Observable& u, int k, int sign) {
  if (u.depth() <= k) return u;
  std::map<Cell, CylinderFunction> overrides;
  for (const auto& [cell, g] : u.overrides()) overrides.emplace(cell, g.envelope(k, sign));
  return Observable(u.profile(), u.local().envelope(k, sign), std::move(overrides), u.p());
}

// --- separation structure ------------------------------------------------

Separation separation_time(const billiard::BilliardTable& table, const billiard::PhasePoint& x,
                           const billiard::PhasePoint& y, int cap) {
  if (cap < 0) throw std::invalid_argument("separation cap must be >= 0");
  Separation out;
  if (same_point(x, y)) {
    out.s = cap;
    out.reached_cap = true;
    return out;
  }
  auto fx = billiard::billiard_map(table, x);
  auto fy = billiard::billiard_map(table, y);
  out.grazing = fx.grazing || fy.grazing;
  if (x.scatterer != y.scatterer || fx.psi != fy.psi) return out;
  billiard::PhasePoint bx = x;
  billiard::PhasePoint by = y;
  for (int k = 1; k <= cap; ++k) {
    const auto nx = billiard::billiard_map(table, fx.next);
    const auto ny = billiard::billiard_map(table, fy.next);
    const auto px = billiard::inverse_billiard_map(table, bx);
    const auto py = billiard::inverse_billiard_map(table, by);
    out.grazing = out.grazing || nx.grazing || ny.grazing || px.grazing || py.grazing;
    const bool fwd = fx.next.scatterer == fy.next.scatterer && nx.psi == ny.psi;
    const bool bwd = px.next.scatterer == py.next.scatterer && px.psi == py.psi;
    if (!fwd || !bwd) return out;
    out.s = k;
    fx = nx;
    fy = ny;
    bx = px.next;
    by = py.next;
  }
  out.reached_cap = true;
  return out;
}

double d_theta(const billiard::BilliardTable& table, const billiard::PhasePoint& x, const billiard::PhasePoint& y,
               const SeparationParams& params) {
  if (!(params.theta > 0.0 && params.theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
  if (same_point(x, y)) return 0.0;
  return std::pow(params.theta, separation_time(table, x, y, params.cap).s);
}

double evaluate(const billiard::BilliardTable& table, const CylinderFunction& g, const billiard::PhasePoint& x) {
  if (g.is_constant()) return g.fallback();
  return g(codes_of(billiard::itinerary(table, x, g.depth(), g.depth())));
}

LipschitzEstimate lipschitz_estimate(const billiard::BilliardTable& table, const PointFunction& g,
                                     const SeparationParams& params, std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw std::invalid_argument("lipschitz_estimate: n_pairs must be >= 1");
  LipschitzEstimate out;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    RngStream rng(RngSpec{seed, i});
    const auto x = billiard::sample_mu_bar(table, rng);
    billiard::PhasePoint y;
    if (rng.uniform() < 0.25) {
      y = billiard::sample_mu_bar(table, rng);
    } else {
      y = perturb(x, std::pow(10.0, -8.0 * rng.uniform()), rng);
    }
    if (same_point(x, y)) continue;
    const auto sep = separation_time(table, x, y, params.cap);
    if (sep.grazing) {
      ++out.grazing_skipped;
      continue;
    }
    const double d = std::pow(params.theta, sep.s);
    out.lower_bound = std::max(out.lower_bound, std::abs(g(x) - g(y)) / d);
    ++out.pairs_used;
  }
  return out;
}

LipschitzEstimate lipschitz_estimate(const billiard::BilliardTable& table, const CylinderFunction& g,
                                     const SeparationParams& params, std::size_t n_pairs, std::uint64_t seed) {
  auto out = lipschitz_estimate(
      table, [&](const billiard::PhasePoint& x) { return evaluate(table, g, x); }, params, n_pairs, seed);
  out.upper_bound = 2.0 * g.sup_norm() / std::pow(params.theta, g.depth());
  return out;
}

ModulusEstimate continuity_modulus(const billiard::BilliardTable& table, const CylinderFunction& g,
                                   const billiard::PhasePoint& x, int k_back, int k_fwd) {
  ModulusEstimate out;
  out.exact = true;
  if (g.is_constant() || (k_back >= g.depth() && k_fwd >= g.depth())) return out;
  const auto codes = codes_of(billiard::itinerary(table, x, g.depth(), g.depth()));
  const double gx = g(codes);
  const auto [lo, hi] = g.range_on_atom(codes, k_back, k_fwd);
  out.value = std::max(gx - lo, hi - gx);
  return out;
}

ModulusEstimate continuity_modulus(const billiard::BilliardTable& table, const PointFunction& g,
                                   const billiard::PhasePoint& x, int k_back, int k_fwd, std::size_t n_probe,
                                   std::uint64_t seed) {
  if (n_probe < 1) throw std::invalid_argument("continuity_modulus: n_probe must be >= 1");
  ModulusEstimate out;
  const auto ref = billiard::itinerary(table, x, k_back, k_fwd);
  const double gx = g(x);
  for (std::size_t i = 0; i < n_probe; ++i) {
    RngStream rng(RngSpec{seed, i});
    const auto y = perturb(x, std::pow(10.0, -8.0 * rng.uniform()), rng);
    const auto it = billiard::itinerary(table, y, k_back, k_fwd);
    if (it.grazing || it.symbols != ref.symbols) continue;
    ++out.probes_matched;
    out.value = std::max(out.value, std::abs(gx - g(y)));
  }
  return out;
}

}  // namespace lorentz::obs
