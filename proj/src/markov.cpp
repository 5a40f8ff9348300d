#include "lorentz/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace lorentz::markov {
namespace {

std::string memory_message(std::size_t needed, std::size_t budget) {
  std::ostringstream os;
  os << "lattice support needs " << needed << " entries, budget is " << budget;
  return os.str();
}

std::string identity_message(const std::string& identity, std::size_t n, double residual) {
  std::ostringstream os;
  os << identity << " violated at n=" << n << ": residual " << residual;
  return os.str();
}

double inf_norm(const Eigen::MatrixXd& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

std::int64_t iabs(std::int64_t v) { return v < 0 ? -v : v; }

}  // namespace

MemoryBound::MemoryBound(std::size_t need, std::size_t bud)
    : OracleError(memory_message(need, bud)), needed(need), budget(bud) {}

IdentityViolation::IdentityViolation(const std::string& identity, std::size_t at, double res)
    : OracleError(identity_message(identity, at, res)), n(at), residual(res) {}

// ---------------------------------------------------------------------------
// MarkovExtension

MarkovExtension::MarkovExtension(std::size_t n_states, std::vector<Edge> edges, int dimension)
    : n_states_(n_states), edges_(std::move(edges)), dimension_(dimension) {
  if (n_states_ == 0) throw OracleError("Markov extension needs at least one state");
  if (dimension_ != 1 && dimension_ != 2) throw OracleError("dimension must be 1 or 2");
  if (edges_.empty()) throw OracleError("Markov extension needs at least one edge");

  transition_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_states_), static_cast<Eigen::Index>(n_states_));
  out_edges_.assign(n_states_, {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& edge = edges_[e];
    if (edge.from >= n_states_ || edge.to >= n_states_) throw OracleError("edge references an unknown state");
    if (!(edge.prob > 0.0)) throw OracleError("edge probabilities must be positive");
    if (dimension_ == 1 && edge.jump.y != 0) throw OracleError("one-dimensional extension with a y jump");
    if (edge.jump.norm_inf() > 1000) throw OracleError("jump labels must satisfy |jump| <= 1000");
    transition_(edge.from, edge.to) += edge.prob;
    out_edges_[edge.from].push_back(e);
    min_jump_ = {std::min(min_jump_.x, edge.jump.x), std::min(min_jump_.y, edge.jump.y)};
    max_jump_ = {std::max(max_jump_.x, edge.jump.x), std::max(max_jump_.y, edge.jump.y)};
  }
  for (std::size_t i = 0; i < n_states_; ++i) {
    const double row = transition_.row(static_cast<Eigen::Index>(i)).sum();
    if (std::abs(row - 1.0) > kIdentityTolerance)
      throw OracleError("row " + std::to_string(i) + " of the transition matrix sums to " + std::to_string(row));
  }

  // pi (P - I) = 0 with sum(pi) = 1.
  const auto s = static_cast<Eigen::Index>(n_states_);
  Eigen::MatrixXd a = transition_.transpose() - Eigen::MatrixXd::Identity(s, s);
  a.row(s - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s);
  b(s - 1) = 1.0;
  stationary_ = a.fullPivLu().solve(b);
  if (stationary_.minCoeff() <= 0.0) throw OracleError("base chain is not irreducible (stationary mass vanishes)");
  const double drift = (stationary_.transpose() * transition_ - stationary_.transpose()).cwiseAbs().maxCoeff();
  if (drift > kIdentityTolerance) throw OracleError("stationary vector solve is inaccurate");

  out_cdf_.assign(n_states_, {});
  for (std::size_t i = 0; i < n_states_; ++i) {
    double acc = 0.0;
    for (auto e : out_edges_[i]) {
      acc += edges_[e].prob;
      out_cdf_[i].push_back(acc);
    }
  }

  // Cycle displacements through state 0 and zero-return times up to a small
  // horizon: the former must generate Z^d, the latter give the period.
  const std::size_t horizon = 4 * n_states_ + 8;
  LatticePropagator kernel(*this, Eigen::MatrixXd::Identity(s, s), horizon, ExecPolicy::serial());
  std::set<Cell> cycles;
  std::size_t period = 0;
  for (std::size_t n = 1; n <= horizon; ++n) {
    kernel.step();
    kernel.field().for_each([&](Cell c, const double* block) {
      if (block[0] > 0.0) cycles.insert(c);
      if (c.is_zero()) {
        double mass = 0.0;
        for (std::size_t i = 0; i < n_states_; ++i)
          for (std::size_t k = 0; k < n_states_; ++k) mass += stationary_(static_cast<Eigen::Index>(i)) * block[i * n_states_ + k];
        if (mass > 0.0) period = std::gcd(period, n);
      }
    });
  }
  period_ = period;

  std::int64_t index = 0;
  if (dimension_ == 1) {
    for (const auto& c : cycles) index = std::gcd(index, iabs(c.x));
  } else {
    const std::vector<Cell> v(cycles.begin(), cycles.end());
    for (std::size_t i = 0; i < v.size() && index != 1; ++i)
      for (std::size_t j = i + 1; j < v.size() && index != 1; ++j)
        index = std::gcd(index, iabs(v[i].x * v[j].y - v[i].y * v[j].x));
  }
  if (index != 1)
    throw OracleError("cycle displacements generate a subgroup of index " + std::to_string(index) + " in Z^d");
}

MarkovExtension::State MarkovExtension::sample(const RngSpec& spec) const {
  State x{0, RngStream(spec)};
  double u = x.rng.uniform();
  for (; x.state + 1 < n_states_; ++x.state) {
    u -= stationary_(static_cast<Eigen::Index>(x.state));
    if (u < 0.0) break;
  }
  return x;
}

StepResult MarkovExtension::step(State& x) const {
  const auto& cdf = out_cdf_[x.state];
  const double u = x.rng.uniform() * cdf.back();
  std::size_t k = 0;
  while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
  const Edge& e = edges_[out_edges_[x.state][k]];
  StepResult out{e.jump, encode_symbol(x.state, e.jump), false};
  x.state = e.to;
  return out;
}

MarkovExtension simple_random_walk() {
  return MarkovExtension(1,
                         {{0, 0, 0.25, {1, 0}}, {0, 0, 0.25, {-1, 0}}, {0, 0, 0.25, {0, 1}}, {0, 0, 0.25, {0, -1}}},
                         2);
}

MarkovExtension two_state_walk_1d() {
  return MarkovExtension(2,
                         {{0, 0, 0.25, {1, 0}},
                          {0, 0, 0.25, {-1, 0}},
                          {0, 1, 0.5, {0, 0}},
                          {1, 1, 0.4, {0, 0}},
                          {1, 0, 0.3, {1, 0}},
                          {1, 0, 0.3, {-1, 0}}},
                         1);
}

MarkovExtension random_symmetric_extension(std::size_t n_states, std::uint64_t seed) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    RngStream rng(RngSpec{seed, attempt});
    std::vector<Edge> edges;
    for (std::uint32_t i = 0; i < n_states; ++i) {
      std::vector<double> w(n_states);
      for (auto& x : w) x = 0.1 + rng.uniform();
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      for (std::uint32_t j = 0; j < n_states; ++j) {
        const Cell jump{static_cast<std::int64_t>(rng.below(3)) - 1, static_cast<std::int64_t>(rng.below(3)) - 1};
        const double p = w[j] / total;
        if (jump.is_zero()) {
          edges.push_back({i, j, p, jump});
        } else {
          edges.push_back({i, j, 0.5 * p, jump});
          edges.push_back({i, j, 0.5 * p, -jump});
        }
      }
    }
    // Row sums are exact up to rounding of w/total; renormalize the last edge.
    for (std::uint32_t i = 0; i < n_states; ++i) {
      double row = 0.0;
      Edge* last = nullptr;
      for (auto& e : edges)
        if (e.from == i) {
          row += e.prob;
          last = &e;
        }
      last->prob += 1.0 - row;
    }
    try {
      return MarkovExtension(n_states, std::move(edges), 2);
    } catch (const OracleError&) {
      if (attempt > 64) throw;
    }
  }
}

// ---------------------------------------------------------------------------
// LatticeField

LatticeField::LatticeField(std::size_t rows, std::size_t cols, Cell lo, Cell hi)
    : rows_(rows), cols_(cols), lo_(lo), hi_(hi) {
  const auto width = static_cast<std::size_t>(hi.x - lo.x + 1);
  const auto height = static_cast<std::size_t>(hi.y - lo.y + 1);
  data_.assign(width * height * rows * cols, 0.0);
  row_lo_.assign(height, std::numeric_limits<std::int64_t>::max());
  row_hi_.assign(height, std::numeric_limits<std::int64_t>::min());
}

Eigen::MatrixXd LatticeField::block(Cell c) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  if (!in_row_range(c)) return out;
  const double* p = ptr(c);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = 0; k < cols_; ++k)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = p[r * cols_ + k];
  return out;
}

double LatticeField::mass(Cell c) const {
  if (!in_row_range(c)) return 0.0;
  const double* p = ptr(c);
  double total = 0.0;
  for (std::size_t i = 0; i < rows_ * cols_; ++i) total += p[i];
  return total;
}

Eigen::MatrixXd LatticeField::total() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for_each([&](Cell, const double* p) {
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t k = 0; k < cols_; ++k)
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) += p[r * cols_ + k];
  });
  return out;
}

std::size_t LatticeField::support_size() const {
  std::size_t count = 0;
  for_each([&](Cell, const double* p) {
    for (std::size_t i = 0; i < rows_ * cols_; ++i)
      if (p[i] != 0.0) {
        ++count;
        break;
      }
  });
  return count;
}

// ---------------------------------------------------------------------------
// LatticePropagator

LatticePropagator::LatticePropagator(const MarkovExtension& sys, const Eigen::MatrixXd& initial,
                                     std::size_t max_steps, ExecPolicy policy, std::size_t budget)
    : sys_(&sys), policy_(policy), max_steps_(max_steps) {
  if (static_cast<std::size_t>(initial.cols()) != sys.n_states())
    throw OracleError("initial block must have one column per state");
  const auto n = static_cast<std::int64_t>(max_steps);
  const Cell lo{std::min<std::int64_t>(0, n * sys.min_jump().x), std::min<std::int64_t>(0, n * sys.min_jump().y)};
  const Cell hi{std::max<std::int64_t>(0, n * sys.max_jump().x), std::max<std::int64_t>(0, n * sys.max_jump().y)};
  const auto rows = static_cast<std::size_t>(initial.rows());
  const auto cells = static_cast<std::size_t>(hi.x - lo.x + 1) * static_cast<std::size_t>(hi.y - lo.y + 1);
  const std::size_t needed = cells * rows * sys.n_states();
  if (needed > budget) throw MemoryBound(needed, budget);

  current_ = LatticeField(rows, sys.n_states(), lo, hi);
  next_ = LatticeField(rows, sys.n_states(), lo, hi);
  const auto r0 = current_.row_index(0);
  current_.row_lo_[r0] = 0;
  current_.row_hi_[r0] = 0;
  double* origin = current_.ptr(Cell{});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < sys.n_states(); ++k)
      origin[r * sys.n_states() + k] = initial(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
}

void LatticePropagator::step() {
  if (steps_ >= max_steps_) throw OracleError("propagator stepped beyond its sized box");
  const auto& edges = sys_->edges();
  const std::size_t rows = current_.rows_;
  const std::size_t cols = current_.cols_;
  const std::size_t stride = rows * cols;
  const Cell lo = current_.lo_;
  const Cell hi = current_.hi_;
  const auto height = static_cast<std::int64_t>(hi.y - lo.y + 1);

  // Row ranges of the next field: hull of the shifted source ranges.
  for (std::int64_t ry = 0; ry < height; ++ry) {
    const std::int64_t y = lo.y + ry;
    std::int64_t a = std::numeric_limits<std::int64_t>::max();
    std::int64_t b = std::numeric_limits<std::int64_t>::min();
    for (const auto& e : edges) {
      const std::int64_t ys = y - e.jump.y;
      if (ys < lo.y || ys > hi.y) continue;
      const auto rs = current_.row_index(ys);
      if (current_.row_lo_[rs] > current_.row_hi_[rs]) continue;
      a = std::min(a, current_.row_lo_[rs] + e.jump.x);
      b = std::max(b, current_.row_hi_[rs] + e.jump.x);
    }
    next_.row_lo_[static_cast<std::size_t>(ry)] = std::max(a, lo.x);
    next_.row_hi_[static_cast<std::size_t>(ry)] = std::min(b, hi.x);
  }

  auto sweep_row = [&](std::int64_t ry) {
    const std::int64_t y = lo.y + ry;
    const std::int64_t a = next_.row_lo_[static_cast<std::size_t>(ry)];
    const std::int64_t b = next_.row_hi_[static_cast<std::size_t>(ry)];
    if (a > b) return;
    double* dst = next_.ptr(Cell{a, y});
    std::fill(dst, dst + static_cast<std::size_t>(b - a + 1) * stride, 0.0);
    for (const auto& e : edges) {
      const std::int64_t ys = y - e.jump.y;
      if (ys < lo.y || ys > hi.y) continue;
      const auto rs = current_.row_index(ys);
      const std::int64_t xa = std::max(a, current_.row_lo_[rs] + e.jump.x);
      const std::int64_t xb = std::min(b, current_.row_hi_[rs] + e.jump.x);
      if (xa > xb) continue;
      double* out = next_.ptr(Cell{xa, y});
      const double* in = current_.ptr(Cell{xa - e.jump.x, ys});
      const auto count = static_cast<std::size_t>(xb - xa + 1);
      const double p = e.prob;
      if (stride == 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] += p * in[i];
      } else {
        for (std::size_t i = 0; i < count; ++i)
          for (std::size_t r = 0; r < rows; ++r)
            out[i * stride + r * cols + e.to] += p * in[i * stride + r * cols + e.from];
      }
    }
  };

  if (policy_.mode == Exec::serial) {
    for (std::int64_t ry = 0; ry < height; ++ry) sweep_row(ry);
  } else {
#ifdef _OPENMP
    const int threads = policy_.workers > 0 ? policy_.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
#endif
    for (std::int64_t ry = 0; ry < height; ++ry) sweep_row(ry);
  }
  std::swap(current_, next_);
  ++steps_;
}

void LatticePropagator::clear(Cell c) {
  if (!current_.in_row_range(c)) return;
  double* p = current_.ptr(c);
  std::fill(p, p + current_.rows_ * current_.cols_, 0.0);
}

// ---------------------------------------------------------------------------
// Exact distributions and operator identities

ExactDistribution exact_distribution(const MarkovExtension& sys, std::size_t n, DistributionOptions options) {
  ExactDistribution out;
  out.n = n;
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  LatticePropagator marginal(sys, sys.stationary().transpose(), n, options.policy, options.budget);
  for (std::size_t k = 0; k < n; ++k) marginal.step();
  out.marginal = marginal.field();
  if (options.with_kernel) {
    LatticePropagator kernel(sys, Eigen::MatrixXd::Identity(s, s), n, options.policy, options.budget);
    for (std::size_t k = 0; k < n; ++k) kernel.step();
    out.kernel = kernel.field();
  }
  return out;
}

Eigen::MatrixXd to_operator(const MarkovExtension& sys, const Eigen::MatrixXd& kernel) {
  const auto& pi = sys.stationary();
  return pi.cwiseInverse().asDiagonal() * kernel.transpose() * pi.asDiagonal();
}

Eigen::MatrixXd operator_Q(const MarkovExtension& sys, std::size_t n, Cell l) {
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  LatticePropagator kernel(sys, Eigen::MatrixXd::Identity(s, s), n);
  for (std::size_t k = 0; k < n; ++k) kernel.step();
  return to_operator(sys, kernel.field().block(l));
}

RenewalSequences operator_TR(const MarkovExtension& sys, std::size_t n_max, double tolerance) {
  if (n_max < 1) throw std::invalid_argument("operator_TR: n_max must be >= 1");
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(s, s);
  RenewalSequences out;
  out.T.push_back(id);
  out.R.push_back(Eigen::MatrixXd::Zero(s, s));

  LatticePropagator all_paths(sys, id, n_max);
  LatticePropagator taboo(sys, id, n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    all_paths.step();
    taboo.step();
    out.T.push_back(to_operator(sys, all_paths.field().block(Cell{})));
    out.R.push_back(to_operator(sys, taboo.field().block(Cell{})));
    taboo.clear(Cell{});
  }
  for (std::size_t n = 1; n <= n_max; ++n) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(s, s);
    for (std::size_t j = 1; j <= n; ++j) acc += out.T[n - j] * out.R[j];
    const double residual = inf_norm(out.T[n] - acc);
    if (residual > out.max_residual) {
      out.max_residual = residual;
      out.worst_n = n;
    }
  }
  if (out.max_residual > tolerance) throw IdentityViolation("T_n = sum T_{n-j} R_j", out.worst_n, out.max_residual);
  return out;
}

UCheck operator_U_check(const MarkovExtension& sys, std::size_t n_max, double tolerance) {
  const auto s = static_cast<Eigen::Index>(sys.n_states());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(s, s);
  UCheck out;
  std::vector<Eigen::MatrixXd> q0{id};
  out.U.push_back(id);

  LatticePropagator all_paths(sys, id, std::max<std::size_t>(n_max, 1));
  LatticePropagator taboo(sys, id, std::max<std::size_t>(n_max, 1));
  for (std::size_t n = 1; n <= n_max; ++n) {
    all_paths.step();
    taboo.step();
    taboo.clear(Cell{});
    q0.push_back(to_operator(sys, all_paths.field().block(Cell{})));
    out.U.push_back(to_operator(sys, taboo.field().total()));
  }

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s);
  Eigen::MatrixXd p_power = id;
  const Eigen::MatrixXd p_op = to_operator(sys, sys.transition());
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (n > 0) p_power = p_power * p_op;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(s, s);
    for (std::size_t j = 0; j <= n; ++j) acc += out.U[n - j] * q0[j];
    const double residual = (acc * ones - ones).cwiseAbs().maxCoeff();
    out.max_operator_residual = std::max(out.max_operator_residual, inf_norm(acc - p_power));
    if (residual > out.max_residual) {
      out.max_residual = residual;
      out.worst_n = n;
    }
  }
  if (out.max_residual > tolerance)
    throw IdentityViolation("1 = sum U_{n-j} Q_{j,0} 1", out.worst_n, out.max_residual);
  return out;
}

ReturnTail exact_return_tail(const MarkovExtension& sys, std::size_t n_max, double tolerance) {
  const auto seqs = operator_TR(sys, std::max<std::size_t>(n_max, 1), tolerance);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sys.n_states()));
  ReturnTail out;
  out.max_residual = seqs.max_residual;
  out.first_return.assign(n_max + 1, 0.0);
  out.tail.assign(n_max + 1, 1.0);
  double cumulative = 0.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    out.first_return[n] = sys.stationary().dot(seqs.R[n] * ones);
    cumulative += out.first_return[n];
    out.tail[n] = 1.0 - cumulative;
  }
  return out;
}

ReturnTail return_tail_from_returns(std::span<const double> q, double tolerance) {
  if (q.empty() || q[0] != 1.0) throw std::invalid_argument("return sequence must start with q_0 = 1");
  const std::size_t n_max = q.size() - 1;
  std::vector<std::size_t> support;  // m >= 1 with q_m != 0
  for (std::size_t m = 1; m <= n_max; ++m)
    if (q[m] != 0.0) support.push_back(m);

  ReturnTail out;
  out.first_return.assign(n_max + 1, 0.0);
  out.tail.assign(n_max + 1, 1.0);
  double cumulative = 0.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    double acc = 0.0;
    for (auto m : support) {
      if (m >= n) break;
      acc += out.first_return[n - m] * q[m];
    }
    out.first_return[n] = q[n] - acc;
    cumulative += out.first_return[n];
    out.tail[n] = 1.0 - cumulative;
  }
  for (std::size_t n = 0; n <= n_max; ++n) {
    double acc = out.tail[n];
    for (auto m : support) {
      if (m > n) break;
      acc += out.tail[n - m] * q[m];
    }
    const double residual = std::abs(acc - 1.0);
    if (residual > out.max_residual) out.max_residual = residual;
    if (residual > tolerance) throw IdentityViolation("sum_j P(phi > n-j) q_j = 1", n, residual);
  }
  return out;
}

std::vector<double> srw_zero_returns(std::size_t n_max) {
  std::vector<double> q(n_max + 1, 0.0);
  double central = 1.0;  // binom(2m, m) / 4^m
  q[0] = 1.0;
  for (std::size_t m = 1; 2 * m <= n_max; ++m) {
    central *= static_cast<double>(2 * m - 1) / static_cast<double>(2 * m);
    q[2 * m] = central * central;
  }
  return q;
}

}  // namespace lorentz::markov

namespace lorentz::markov {

SrwExact::SrwExact(std::size_t n) : n_(n), walk_(n + 1, 0.0) {
  walk_[0] = 1.0;
  for (std::size_t step = 1; step <= n; ++step) {
    for (std::size_t j = step; j > 0; --j) walk_[j] = 0.5 * (walk_[j] + walk_[j - 1]);
    walk_[0] *= 0.5;
  }
}

double SrwExact::q(Cell l) const noexcept {
  const auto n = static_cast<std::int64_t>(n_);
  auto one = [&](std::int64_t k) {
    if (std::abs(k) > n || ((k + n) & 1) != 0) return 0.0;
    return walk_[static_cast<std::size_t>((k + n) / 2)];
  };
  return one(l.x + l.y) * one(l.x - l.y);
}

}  // namespace lorentz::markov
