#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fbsg/grid.hpp"

namespace fbsg {

// Intensity matrix of a continuous-time Markov chain: nonnegative
// off-diagonal entries, zero row sums.
class RateMatrix {
 public:
  RateMatrix() : q_(Eigen::MatrixXd::Zero(1, 1)) {}
  explicit RateMatrix(Eigen::MatrixXd entries) : q_(std::move(entries)) {}

  int dim() const { return static_cast<int>(q_.rows()); }
  double operator()(int n, int j) const { return q_(n, j); }
  const Eigen::MatrixXd& matrix() const { return q_; }

  // Empty string when valid, otherwise a description naming the offending
  // entry or row.
  std::string validate(double tol = 1e-12) const;
  bool valid(double tol = 1e-12) const { return validate(tol).empty(); }

 private:
  Eigen::MatrixXd q_;
};

struct ChainJump {
  double time;
  int from;  // 0-based state index
  int to;
};

// One exact chain trajectory sampled onto a grid. Occupation times and jump
// counts are computed from the exact jump records, not from grid sums.
struct ChainPath {
  TimeGrid grid;
  std::vector<int> regime;        // per grid point, 0-based
  std::vector<ChainJump> jumps;   // ordered by time
  Eigen::MatrixXd occupation;     // D x points(), occupation time J_j(t_i)
  Eigen::MatrixXd compensator;    // D x points(), lambda_j(t_i) under the
                                  // simulating rate matrix

  int dim() const { return static_cast<int>(occupation.rows()); }
  int state_at_grid(int i) const { return regime[static_cast<std::size_t>(i)]; }

  // Occupation-time vector at an arbitrary t in [0,T], exact.
  Eigen::VectorXd occupation_at(double t) const;

  // Regime in force at time t (left limit at jump times is not used: the
  // destination applies from the jump time on).
  int state_at(double t) const;

  // Number of recorded n->j jumps up to and including grid point i.
  Eigen::MatrixXd jump_counts_at(int i) const;
};

std::string validate_rate_matrix(const RateMatrix& lambda);

// Exact event-driven simulation: exponential holding times, categorical jump
// destinations, then sampled onto the grid. Deterministic for a fixed seed.
ChainPath simulate_chain(const RateMatrix& lambda, int initial_state,
                         const TimeGrid& grid, std::uint64_t seed);

// Semimartingale martingale part M(t_i) = e_{a(t_i)} - e_{a(0)} - L^T J(t_i),
// one column per grid point.
Eigen::MatrixXd martingale_part(const ChainPath& path, const RateMatrix& lambda);

struct CompensatedCounting {
  Eigen::MatrixXd counts;       // Phi_j(t_i), D x points()
  Eigen::MatrixXd compensator;  // lambda_j(t_i)
  Eigen::MatrixXd compensated;  // Phi_j - lambda_j
};

CompensatedCounting compensated_counting(const ChainPath& path,
                                         const RateMatrix& lambda);

}  // namespace fbsg
