#pragma once

// Exact finite world: a Markov chain on n states whose transitions carry Z^d
// labels. Every operator of the renewal theory is a finite matrix here:
//
//   kernel  K_{n,l}[i][j] = P(X_n = j, S_n = l | X_0 = i)   (mass flows forward)
//   operator Q_{n,l}      = D^{-1} K_{n,l}^T D,  D = diag(pi)
//
// so Q_{n,l} is the transfer operator P^n(1{S_n = l} .) acting on functions
// of the state, and pi . Q_{n,l} 1 = P_pi(S_n = l).

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorentz/lattice.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/system.hpp"

namespace lorentz::markov {

inline constexpr std::size_t kDefaultCellBudget = std::size_t{1} << 25;
inline constexpr double kIdentityTolerance = 1e-12;

struct Edge {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  double prob = 0.0;
  Cell jump;
};

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MemoryBound : OracleError {
  MemoryBound(std::size_t needed, std::size_t budget);
  std::size_t needed;
  std::size_t budget;
};

struct IdentityViolation : OracleError {
  IdentityViolation(const std::string& identity, std::size_t n, double residual);
  std::size_t n;
  double residual;
};

class MarkovExtension {
 public:
  struct State {
    std::uint32_t state = 0;
    RngStream rng;
  };

  /// Validates row-stochasticity, solves for the stationary vector and
  /// checks that cycle displacements generate Z^d. Throws OracleError.
  MarkovExtension(std::size_t n_states, std::vector<Edge> edges, int dimension);

  [[nodiscard]] std::size_t n_states() const noexcept { return n_states_; }
  [[nodiscard]] int dimension() const noexcept { return dimension_; }
  [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
  [[nodiscard]] const Eigen::MatrixXd& transition() const noexcept { return transition_; }
  [[nodiscard]] const Eigen::VectorXd& stationary() const noexcept { return stationary_; }
  /// gcd of the times n at which S_n = 0 has positive probability.
  [[nodiscard]] std::size_t return_period() const noexcept { return period_; }
  [[nodiscard]] Cell min_jump() const noexcept { return min_jump_; }
  [[nodiscard]] Cell max_jump() const noexcept { return max_jump_; }

  [[nodiscard]] State sample(const RngSpec& spec) const;
  StepResult step(State& x) const;

 private:
  std::size_t n_states_;
  std::vector<Edge> edges_;
  int dimension_;
  Eigen::MatrixXd transition_;
  Eigen::VectorXd stationary_;
  std::vector<std::vector<std::size_t>> out_edges_;  // edge indices per source state
  std::vector<std::vector<double>> out_cdf_;
  Cell min_jump_;
  Cell max_jump_;
  std::size_t period_ = 1;
};

static_assert(BaseSystem<MarkovExtension>);

/// One state, jumps +-e1, +-e2 with probability 1/4 each.
MarkovExtension simple_random_walk();
/// Aperiodic two-state walk on Z with centered jumps.
MarkovExtension two_state_walk_1d();
/// Random chain on n states with symmetric (hence centered) jumps in
/// {-1,0,1}^2, reproducible from seed.
MarkovExtension random_symmetric_extension(std::size_t n_states, std::uint64_t seed);

/// Dense storage of a lattice-indexed family of R x s blocks over a box.
/// Rows outside their recorded x-range are zero.
class LatticeField {
 public:
  LatticeField() = default;
  LatticeField(std::size_t rows, std::size_t cols, Cell lo, Cell hi);

  [[nodiscard]] std::size_t block_rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t block_cols() const noexcept { return cols_; }
  [[nodiscard]] Cell lo() const noexcept { return lo_; }
  [[nodiscard]] Cell hi() const noexcept { return hi_; }
  [[nodiscard]] bool contains(Cell c) const noexcept {
    return c.x >= lo_.x && c.x <= hi_.x && c.y >= lo_.y && c.y <= hi_.y;
  }
  /// Block at c (zero outside the box).
  [[nodiscard]] Eigen::MatrixXd block(Cell c) const;
  /// Sum of all entries of the block at c.
  [[nodiscard]] double mass(Cell c) const;
  /// Sum of all blocks.
  [[nodiscard]] Eigen::MatrixXd total() const;
  /// Number of cells holding a nonzero entry.
  [[nodiscard]] std::size_t support_size() const;

  /// Calls fn(cell, const double* block) for every cell in a nonzero row range.
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::int64_t y = lo_.y; y <= hi_.y; ++y) {
      const auto r = row_index(y);
      if (row_lo_[r] > row_hi_[r]) continue;
      for (std::int64_t x = row_lo_[r]; x <= row_hi_[r]; ++x) fn(Cell{x, y}, ptr(Cell{x, y}));
    }
  }

 private:
  friend class LatticePropagator;

  [[nodiscard]] std::size_t row_index(std::int64_t y) const noexcept { return static_cast<std::size_t>(y - lo_.y); }
  [[nodiscard]] std::size_t offset(Cell c) const noexcept {
    const auto width = static_cast<std::size_t>(hi_.x - lo_.x + 1);
    return (row_index(c.y) * width + static_cast<std::size_t>(c.x - lo_.x)) * rows_ * cols_;
  }
  [[nodiscard]] const double* ptr(Cell c) const noexcept { return data_.data() + offset(c); }
  [[nodiscard]] double* ptr(Cell c) noexcept { return data_.data() + offset(c); }
  [[nodiscard]] bool in_row_range(Cell c) const noexcept {
    if (!contains(c)) return false;
    const auto r = row_index(c.y);
    return c.x >= row_lo_[r] && c.x <= row_hi_[r];
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Cell lo_;
  Cell hi_{-1, -1};
  std::vector<double> data_;
  std::vector<std::int64_t> row_lo_;
  std::vector<std::int64_t> row_hi_;
};

/// Exact forward propagation of block-valued lattice masses:
/// new[c][r][to] = sum over edges e (in edge order) of p_e * old[c - jump_e][r][from_e].
/// Output rows are independent, so the parallel and serial sweeps agree bitwise.
class LatticePropagator {
 public:
  LatticePropagator(const MarkovExtension& sys, const Eigen::MatrixXd& initial, std::size_t max_steps,
                    ExecPolicy policy = {}, std::size_t budget = kDefaultCellBudget);

  void step();
  /// Zero the block at c (taboo restriction).
  void clear(Cell c);

  [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
  [[nodiscard]] const LatticeField& field() const noexcept { return current_; }

 private:
  const MarkovExtension* sys_;
  ExecPolicy policy_;
  std::size_t max_steps_;
  std::size_t steps_ = 0;
  LatticeField current_;
  LatticeField next_;
};

/// LatticeKernel: blocks are n_states x n_states kernels K_{n,l}.
using LatticeKernel = LatticeField;

struct ExactDistribution {
  std::size_t n = 0;
  LatticeKernel kernel;   // empty unless requested
  LatticeField marginal;  // 1 x n_states blocks: P_pi(S_n = l, X_n = k)

  /// q_n(l) = P_pi(S_n = l).
  [[nodiscard]] double q(Cell l) const { return marginal.mass(l); }
};

struct DistributionOptions {
  bool with_kernel = true;
  ExecPolicy policy{};
  std::size_t budget = kDefaultCellBudget;
};

[[nodiscard]] ExactDistribution exact_distribution(const MarkovExtension& sys, std::size_t n,
                                                   DistributionOptions options = {});

/// Transfer operator of a kernel block: D^{-1} K^T D.
[[nodiscard]] Eigen::MatrixXd to_operator(const MarkovExtension& sys, const Eigen::MatrixXd& kernel);

/// Q_{n,l} as an operator on functions of the state.
[[nodiscard]] Eigen::MatrixXd operator_Q(const MarkovExtension& sys, std::size_t n, Cell l);

struct RenewalSequences {
  std::vector<Eigen::MatrixXd> T;  // T_0..T_nmax (operators)
  std::vector<Eigen::MatrixXd> R;  // R_0 = 0, R_1..R_nmax
  double max_residual = 0.0;
  std::size_t worst_n = 0;
};

/// T_n = Q_{n,0}, R_n = first-return operators; checks
/// T_n = sum_{j=1}^n T_{n-j} R_j for 1 <= n <= n_max.
[[nodiscard]] RenewalSequences operator_TR(const MarkovExtension& sys, std::size_t n_max,
                                           double tolerance = kIdentityTolerance);

struct UCheck {
  std::vector<Eigen::MatrixXd> U;  // U_0..U_nmax (operators)
  double max_residual = 0.0;       // |sum_j U_{n-j} Q_{j,0} 1 - 1|_inf
  double max_operator_residual = 0.0;  // |sum_j U_{n-j} Q_{j,0} - P^n|_inf
  std::size_t worst_n = 0;
};

/// U_k = P^k(1{phi > k} .); checks 1 = sum_{j=0}^n U_{n-j} Q_{j,0} 1.
[[nodiscard]] UCheck operator_U_check(const MarkovExtension& sys, std::size_t n_max,
                                      double tolerance = kIdentityTolerance);

struct ReturnTail {
  std::vector<double> first_return;  // f_n = P(phi = n), f_0 = 0
  std::vector<double> tail;          // P(phi > n), tail[0] = 1
  double max_residual = 0.0;
};

/// Exact P_pi(phi > n) for n <= n_max from the first-return kernels; the
/// matrix renewal identity is asserted along the way.
[[nodiscard]] ReturnTail exact_return_tail(const MarkovExtension& sys, std::size_t n_max,
                                           double tolerance = kIdentityTolerance);

/// Scalar renewal for walks with i.i.d. increments: given q_n = P(S_n = 0)
/// (q_0 = 1) solve q_n = sum_{j=1}^n f_j q_{n-j} for f and assert
/// sum_{j=0}^n P(phi > n-j) q_j = 1 at the given tolerance.
[[nodiscard]] ReturnTail return_tail_from_returns(std::span<const double> q, double tolerance = kIdentityTolerance);

/// q_n(0) for the planar simple random walk in closed form:
/// q_{2m} = (binom(2m, m) / 4^m)^2, q_odd = 0.
[[nodiscard]] std::vector<double> srw_zero_returns(std::size_t n_max);

/// Exact law of S_n for the planar simple random walk via the rotation
/// (x, y) -> (x + y, x - y), which splits it into two independent +-1 walks;
/// each of those is propagated by repeated convolution with {1/2, 1/2}.
class SrwExact {
 public:
  explicit SrwExact(std::size_t n);
  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] double q(Cell l) const noexcept;

 private:
  std::size_t n_;
  std::vector<double> walk_;  // walk_[j] = P(sum of n +-1 steps = 2j - n)
};

}  // namespace lorentz::markov
