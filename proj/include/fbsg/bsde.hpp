#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fbsg/chain.hpp"
#include "fbsg/drivers.hpp"
#include "fbsg/sde.hpp"

namespace fbsg {

// A batch of simulated forward paths sharing one grid, model and control.
struct PathBatch {
  TimeGrid grid;
  RateMatrix lambda;
  RegimeLevyMeasure levy;
  ControlProcess control;
  std::vector<ChainPath> chains;
  std::vector<NoiseBundle> noises;
  Eigen::MatrixXd x;  // paths x points
  std::uint64_t seed = 0;
  int initial_state = 0;

  int paths() const { return static_cast<int>(chains.size()); }
};

PathBatch make_batch(const TimeGrid& grid, const RateMatrix& lambda,
                     const RegimeLevyMeasure& levy,
                     const ForwardCoefficients& coeffs,
                     const ControlProcess& control, double x0, int paths,
                     std::uint64_t seed, int initial_state = 0, int workers = 0);

// Same noise on a grid coarsened by `factor`: the event-driven chain and
// claim draws depend only on the per-path seeds, so they coincide exactly;
// Brownian increments are aggregated from the fine batch (common random
// numbers across step sizes for convergence studies).
PathBatch coarsen_batch(const PathBatch& fine, int factor,
                        const ForwardCoefficients& coeffs, double x0,
                        int workers = 0);

// Driver g(t, x, e_n, y, z, k, v, u); the jump argument enters through the
// functional kfun = int K(z) rho(z) nu_n(dz).
struct BsdeSpec {
  std::function<double(double t, double x, int regime, double y, double z,
                       double kfun, const Eigen::VectorXd& v, double u1, double u2)>
      driver;
  std::function<double(double x, int regime)> terminal;
  std::function<double(double zeta)> rho;  // default: rho == 1
};

// Per-regime polynomial basis in x, or user-supplied basis functions.
struct RegressionBasis {
  int degree = 3;
  std::vector<std::function<double(double)>> funcs;  // overrides degree if set

  int size() const {
    return funcs.empty() ? degree + 1 : static_cast<int>(funcs.size());
  }
};

struct BsdeSolution {
  Eigen::MatrixXd y;     // paths x points
  Eigen::MatrixXd z;     // paths x points (last column zero)
  Eigen::MatrixXd kfun;  // jump functional int K rho nu
  std::vector<Eigen::MatrixXd> v;  // per regime j: paths x points
  std::vector<std::string> warnings;

  double y0_mean() const { return y.col(0).mean(); }
};

// Least-squares Monte Carlo backward solver: Z, K-functional and V from
// regressions of martingale increments, implicit Y via fixed-point iteration
// (tol 1e-10, max 50). Regressions are stratified per regime; strata with
// fewer than basis size + 1 paths fall back to the sample mean with a warning.
BsdeSolution solve_bsde_regression(const BsdeSpec& spec, const PathBatch& batch,
                                   const RegressionBasis& basis = {});

// Same machinery for the adjoint BSDE: driver -dH/dx with a per-path terminal
// p(T) = phi_x + A(T) h_x supplied directly.
BsdeSolution solve_adjoint_bsde(
    const std::function<double(double t, double x, int regime, double p, double q,
                               double rfun, const Eigen::VectorXd& w, double u1,
                               double u2)>& neg_dh_dx,
    const Eigen::VectorXd& terminal_per_path, const PathBatch& batch,
    const RegressionBasis& basis = {},
    const std::function<double(double zeta)>& rho = nullptr);

// Closed-form candidate solution with its analytic dt-generator along the
// state dynamics; the defect lgen + g vanishes iff the candidate solves the
// BSDE.
struct AnsatzCandidate {
  std::function<double(double t, double x, int regime)> y;
  std::function<double(double t, double x, int regime)> z;
  std::function<double(double t, double x, int regime)> kfun;
  std::function<double(double t, double x, int regime, int j)> v;
  std::function<double(double t, double x, int regime)> lgen;
};

struct ResidualStats {
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

ResidualStats residual_of_ansatz(const BsdeSpec& spec,
                                 const AnsatzCandidate& candidate,
                                 const PathBatch& batch);

}  // namespace fbsg
