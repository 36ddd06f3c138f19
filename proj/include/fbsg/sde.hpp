#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>

#include "fbsg/chain.hpp"
#include "fbsg/drivers.hpp"
#include "fbsg/grid.hpp"

namespace fbsg {

struct PathAborted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Coefficient functions of the controlled state SDE
//   dX = b dt + sigma dB + int gamma dN~_a + eta . dPhi~.
// Empty std::functions are treated as identically zero. jump_mean, when set,
// supplies int gamma(t,x,e_n,u,z) F_n(dz) analytically; otherwise quadrature
// against F_n is used for the compensator correction.
struct ForwardCoefficients {
  std::function<double(double t, double x, int regime, double u1, double u2)> drift;
  std::function<double(double t, double x, int regime, double u1, double u2)> diffusion;
  std::function<double(double t, double x, int regime, double u1, double u2, double zeta)> jump;
  std::function<double(double t, double x, int regime, double u1, double u2)> jump_mean;
  std::function<double(double t, double x, int regime, double u1, double u2, int j)> regime_shift;
};

// Feedback controls u_i(t, x, regime) for the two players.
struct ControlProcess {
  std::function<double(double t, double x, int regime)> u1;
  std::function<double(double t, double x, int regime)> u2;

  static ControlProcess constants(double c1, double c2) {
    return {[c1](double, double, int) { return c1; },
            [c2](double, double, int) { return c2; }};
  }
};

// Scenario control theta = (theta0, theta1 per regime, theta2 per jump size).
struct ScenarioControl {
  std::function<double(double t)> theta0;
  std::function<double(double t, int j)> theta1;
  std::function<double(double t, double zeta)> theta2;
  // Optional analytic E_{F_j}[theta2(t,.)]; quadrature fallback otherwise.
  std::function<double(double t, int j)> theta2_mean;
  double eps = 1e-6;  // admissibility: theta2 >= -1 + eps

  static ScenarioControl zero() {
    return {[](double) { return 0.0; }, [](double, int) { return 0.0; },
            [](double, double) { return 0.0; }, nullptr, 1e-6};
  }
};

enum class DensityScheme { Exact, Euler };

// Euler path of the controlled state on the noise grid. Jump and switch terms
// enter against compensated measures, so each step carries the explicit
// compensator drift corrections. Non-finite values abort the path.
Eigen::VectorXd simulate_state(const ForwardCoefficients& coeffs,
                               const ControlProcess& control,
                               const NoiseBundle& noise,
                               const RegimeLevyMeasure& levy, double x0);

// Scenario density G^theta. Exact means the Doleans-Dade exponential with
// step-frozen theta (an exact martingale); Euler is the cross-check scheme.
Eigen::VectorXd simulate_density_theta(const ScenarioControl& theta,
                                       const NoiseBundle& noise,
                                       const ChainPath& chain,
                                       const RegimeLevyMeasure& levy,
                                       DensityScheme scheme = DensityScheme::Exact);

// Insurance-style density G^{theta,C}: Brownian and claim distortion by a
// scalar theta(t, regime), chain-rate distortion by the rate-matrix family C.
// Requires lambda_{nj} > 0 off-diagonal so D^C = [C_nj / lambda_nj] exists.
Eigen::VectorXd simulate_density_theta_C(
    const std::function<double(double t, int regime)>& theta,
    const std::function<Eigen::MatrixXd(double t)>& rate_family,
    const NoiseBundle& noise, const ChainPath& chain,
    const RegimeLevyMeasure& levy, const RateMatrix& lambda,
    DensityScheme scheme = DensityScheme::Exact);

// Hamiltonian gradient processes along a solved path, each fed the running
// value of A; A(0) = psi'(Y(0)).
struct AdjointForwardSpec {
  std::function<double(int step, double a)> dh_dy;
  std::function<double(int step, double a)> dh_dz;
  // Radon-Nikodym density of nabla_k H w.r.t. nu at jump size zeta.
  std::function<double(int step, double zeta, double a)> k_density;
  // Optional analytic E_{F_j}[k_density(step, ., a)].
  std::function<double(int step, int j, double a)> k_density_mean;
  std::function<double(int step, int j, double a)> dh_dv;
  double a0 = 1.0;
};

Eigen::VectorXd simulate_adjoint_forward(const AdjointForwardSpec& spec,
                                         const NoiseBundle& noise,
                                         const ChainPath& chain,
                                         const RegimeLevyMeasure& levy);

}  // namespace fbsg
