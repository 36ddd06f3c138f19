#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "fbsg/bsde.hpp"
#include "fbsg/parallel.hpp"

namespace fbsg {

// One scenario-control point: Brownian drift distortion, per-regime chain
// intensity distortions, jump-size distortion.
struct ThetaPoint {
  double theta0 = 0.0;
  Eigen::VectorXd theta1;
  std::function<double(double zeta)> theta2;
};

// Entropic penalty rate
//   h1 = theta0^2 / 2 + sum_j [(1+theta1_j) ln(1+theta1_j) - theta1_j] l_j
//        + l0 E_F[(1+theta2) ln(1+theta2) - theta2].
// chain_rates holds l_j(t) (zero at the current state); throws
// std::domain_error outside the admissible region theta1, theta2 > -1.
double penalty_h1(const ThetaPoint& theta, const Eigen::VectorXd& chain_rates,
                  double jump_intensity, const JumpDist& dist);

// g = h1 + theta0 z + sum_j theta1_j l_j w_j + l0 E_F[theta2 K].
double g_functional(const ThetaPoint& theta, double z, const Eigen::VectorXd& w,
                    const std::function<double(double)>& kfn,
                    const Eigen::VectorXd& chain_rates, double jump_intensity,
                    const JumpDist& dist);

// Pointwise minimizer of g: theta0 = -z, theta1_j = e^{-w_j} - 1,
// theta2(zeta) = e^{-K(zeta)} - 1.
ThetaPoint optimal_theta(double z, const Eigen::VectorXd& w,
                         const std::function<double(double)>& kfn);

// min_theta g plus discount and running payoff:
//   -kappa y + a0 u1 - z^2/2 + sum_j l_j (1 - e^{-w_j} - w_j)
//   + l0 E_F[1 - e^{-K} - K].
double reduced_driver(double y, double z, const Eigen::VectorXd& w,
                      const std::function<double(double)>& kfn, double kappa,
                      double a0, double u1_value,
                      const Eigen::VectorXd& chain_rates, double jump_intensity,
                      const JumpDist& dist);

// Robust recursive-utility model: the value Y solves the reduced BSDE with
// terminal abar0 u2(X_T, a_T). X is an auxiliary observed state (the driver
// may depend on it through u1/u2 only).
struct EntropyModelConfig {
  TimeGrid grid;
  RateMatrix lambda{Eigen::MatrixXd::Zero(1, 1)};
  RegimeLevyMeasure levy;  // single-atom claim laws where intensity > 0
  std::function<double(double t)> kappa;
  double a0 = 1.0;
  double abar0 = 1.0;
  std::function<double(double t, double x, int regime)> u1;
  std::function<double(double x, int regime)> u2;
  ForwardCoefficients state;
  double x0 = 0.0;
  int initial_state = 0;
};

struct RobustSolution {
  PathBatch batch;
  BsdeSolution sol;
  double y0 = 0.0;
};

RobustSolution solve_robust_value(const EntropyModelConfig& config, int paths,
                                  std::uint64_t seed, int workers = 0,
                                  const RegressionBasis& basis = {});

// Worst-case scenario control along one solved path, read off the regression
// fields (theta0 = -Z, theta1_j = e^{-V_j} - 1, theta2 = e^{-K} - 1). The
// returned closures reference `solution`; keep it alive while using them.
ScenarioControl worst_case_theta(const EntropyModelConfig& config,
                                 const RobustSolution& solution, int path);

// E[ int e^{-int kappa} G (a0 u1 + h1(theta)) dt + abar0 e^{-int kappa} G_T u2 ],
// the value delivered by an arbitrary scenario control; theta may differ per
// path (worst-case controls are path-functionals).
MeanStderr value_under_theta(
    const EntropyModelConfig& config,
    const std::function<ScenarioControl(const PathBatch&, int path)>& theta_factory,
    const PathBatch& batch);

struct EntropyIdentity {
  double lhs = 0.0;  // E[int kappa e^{-int kappa} G ln G + e^{-int kappa} G_T ln G_T]
  double rhs = 0.0;  // E[int e^{-int kappa} G h1(theta) dt]
  double diff_stderr = 0.0;
};

EntropyIdentity entropy_identity_gap(
    const EntropyModelConfig& config,
    const std::function<ScenarioControl(const PathBatch&, int path)>& theta_factory,
    const PathBatch& batch);

}  // namespace fbsg
