#include "fbsg/chain.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fbsg/rng.hpp"

namespace fbsg {

std::string RateMatrix::validate(double tol) const {
  if (q_.rows() != q_.cols()) return "rate matrix is not square";
  const int d = dim();
  for (int n = 0; n < d; ++n) {
    for (int j = 0; j < d; ++j) {
      if (!std::isfinite(q_(n, j))) {
        std::ostringstream os;
        os << "non-finite entry at (" << n + 1 << "," << j + 1 << ")";
        return os.str();
      }
      if (n != j && q_(n, j) < 0.0) {
        std::ostringstream os;
        os << "negative off-diagonal at (" << n + 1 << "," << j + 1 << ")";
        return os.str();
      }
    }
    const double row_sum = q_.row(n).sum();
    if (std::abs(row_sum) > tol) {
      std::ostringstream os;
      os << "row-sum violation at row " << n + 1 << " (sum = " << row_sum << ")";
      return os.str();
    }
  }
  return {};
}

std::string validate_rate_matrix(const RateMatrix& lambda) {
  return lambda.validate();
}

Eigen::VectorXd ChainPath::occupation_at(double t) const {
  const int d = dim();
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(d);
  double prev = 0.0;
  int state = regime[0];
  for (const auto& jump : jumps) {
    if (jump.time >= t) break;
    occ[state] += jump.time - prev;
    prev = jump.time;
    state = jump.to;
  }
  occ[state] += t - prev;
  return occ;
}

int ChainPath::state_at(double t) const {
  int state = regime[0];
  for (const auto& jump : jumps) {
    if (jump.time > t) break;
    state = jump.to;
  }
  return state;
}

Eigen::MatrixXd ChainPath::jump_counts_at(int i) const {
  const int d = dim();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(d, d);
  const double t = grid.time(i);
  for (const auto& jump : jumps) {
    if (jump.time > t) break;
    counts(jump.from, jump.to) += 1.0;
  }
  return counts;
}

ChainPath simulate_chain(const RateMatrix& lambda, int initial_state,
                         const TimeGrid& grid, std::uint64_t seed) {
  const std::string violation = lambda.validate();
  if (!violation.empty())
    throw std::invalid_argument("simulate_chain: " + violation);
  const int d = lambda.dim();
  if (initial_state < 0 || initial_state >= d)
    throw std::invalid_argument("simulate_chain: initial state out of range");

  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const double horizon = grid.horizon();
  std::vector<ChainJump> jumps;
  double t = 0.0;
  int state = initial_state;
  while (true) {
    const double rate = -lambda(state, state);
    if (rate <= 0.0) break;  // absorbing: chain stays
    std::exponential_distribution<double> hold(rate);
    t += hold(rng);
    if (t >= horizon) break;
    // destination with probability lambda_{nj} / rate
    double u = unif(rng) * rate;
    int dest = -1;
    for (int j = 0; j < d; ++j) {
      if (j == state) continue;
      u -= lambda(state, j);
      if (u <= 0.0) {
        dest = j;
        break;
      }
    }
    if (dest < 0) {  // round-off on the last positive rate
      for (int j = d - 1; j >= 0; --j)
        if (j != state && lambda(state, j) > 0.0) {
          dest = j;
          break;
        }
    }
    jumps.push_back({t, state, dest});
    state = dest;
  }

  ChainPath path{grid, {}, std::move(jumps), {}, {}};
  path.regime.resize(grid.points());
  path.occupation.resize(d, grid.points());
  path.compensator.resize(d, grid.points());
  std::size_t k = 0;
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(d);
  double prev = 0.0;
  int cur = initial_state;
  for (int i = 0; i < grid.points(); ++i) {
    const double ti = grid.time(i);
    while (k < path.jumps.size() && path.jumps[k].time <= ti) {
      occ[cur] += path.jumps[k].time - prev;
      prev = path.jumps[k].time;
      cur = path.jumps[k].to;
      ++k;
    }
    Eigen::VectorXd occ_i = occ;
    occ_i[cur] += ti - prev;
    path.occupation.col(i) = occ_i;
    path.regime[static_cast<std::size_t>(i)] = cur;
    for (int j = 0; j < d; ++j) {
      double c = 0.0;
      for (int n = 0; n < d; ++n)
        if (n != j) c += lambda(n, j) * occ_i[n];
      path.compensator(j, i) = c;
    }
  }
  return path;
}

Eigen::MatrixXd martingale_part(const ChainPath& path, const RateMatrix& lambda) {
  if (path.dim() != lambda.dim())
    throw std::invalid_argument("martingale_part: dimension mismatch");
  const int d = path.dim();
  const int pts = path.grid.points();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, pts);
  const int a0 = path.regime[0];
  for (int i = 0; i < pts; ++i) {
    Eigen::VectorXd v = -lambda.matrix().transpose() * path.occupation.col(i);
    v[path.state_at_grid(i)] += 1.0;
    v[a0] -= 1.0;
    m.col(i) = v;
  }
  return m;
}

CompensatedCounting compensated_counting(const ChainPath& path,
                                         const RateMatrix& lambda) {
  if (path.dim() != lambda.dim())
    throw std::invalid_argument("compensated_counting: dimension mismatch");
  const int d = path.dim();
  const int pts = path.grid.points();
  CompensatedCounting out;
  out.counts = Eigen::MatrixXd::Zero(d, pts);
  // lambda_j(t) = sum_{n != j} lambda_{nj} J_n(t)
  out.compensator = Eigen::MatrixXd::Zero(d, pts);
  for (int i = 0; i < pts; ++i) {
    for (int j = 0; j < d; ++j) {
      double c = 0.0;
      for (int n = 0; n < d; ++n)
        if (n != j) c += lambda(n, j) * path.occupation(n, i);
      out.compensator(j, i) = c;
    }
  }

  std::size_t k = 0;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < pts; ++i) {
    const double ti = path.grid.time(i);
    while (k < path.jumps.size() && path.jumps[k].time <= ti) {
      counts[path.jumps[k].to] += 1.0;
      ++k;
    }
    out.counts.col(i) = counts;
  }
  out.compensated = out.counts - out.compensator;
  return out;
}

}  // namespace fbsg
