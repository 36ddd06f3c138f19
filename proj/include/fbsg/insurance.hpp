#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fbsg/bsde.hpp"
#include "fbsg/maxprinciple.hpp"

namespace fbsg {

// Regime-switching market of an insurer investing its surplus: per-regime
// riskless rate, stock drift/volatility, premium rate and compound-Poisson
// claims, with exponential utility U(x) = -e^{-beta x}.
struct InsuranceMarket {
  double beta = 1.0;
  Eigen::VectorXd r, mu, sigma, premium;  // one entry per regime
  std::vector<double> claim_intensity;    // lambda0_n
  std::vector<JumpDist> claims;           // F_n
  RateMatrix lambda;
  double x0 = 0.0;
  int initial_state = 0;

  int dim() const { return static_cast<int>(r.size()); }
  RegimeLevyMeasure levy() const { return {claim_intensity, claims}; }

  // int (e^{beta z} - 1) lambda0_n F_n(dz); analytic for exponential claims.
  double exp_claim_moment(int n) const;

  // Empty when valid; names every violated requirement (sigma_n > 0,
  // beta > 0, exponential claim parameter > 2 beta, Lambda a rate matrix).
  std::string validate() const;
};

// Box bounds for the market's chain-rate distortion, one interval per
// off-diagonal entry.
struct CBounds {
  Eigen::MatrixXd lo, hi;

  std::string validate(int dim) const;
  Eigen::MatrixXd midpoint() const { return 0.5 * (lo + hi); }
};

// Surplus dynamics dX = [P0 + rX + pi (mu - r) - int z nu] dt + sigma pi dB
// - int z N~; the investment strategy rides in ControlProcess.u1.
ForwardCoefficients surplus_coefficients(const InsuranceMarket& market);

Eigen::VectorXd simulate_surplus(const InsuranceMarket& market,
                                 const ControlProcess& pi,
                                 const NoiseBundle& noise, double x0);

// pi*_n = int (e^{beta z} - 1) lambda0_n F_n(dz) / (beta sigma_n); equals
// lambda0_n / ((rate_n - beta) sigma_n) for exponential claims.
Eigen::VectorXd optimal_pi(const InsuranceMarket& market);

// theta*_n = -(mu_n - r_n - sigma_n^2 pi_n beta) / sigma_n.
Eigen::VectorXd optimal_theta_market(const InsuranceMarket& market,
                                     const Eigen::VectorXd& pi);

// Bang-bang distortion of the two-state chain:
// C*_21 = C^l(2,1) if V1 > V2, C^u(2,1) if V1 < V2 (ties take C^l),
// C*_11 = -C*_21; symmetric rule for C*_12 / C*_22 with V2 - V1.
Eigen::MatrixXd optimal_C_two_state(double v1, double v2, const CBounds& bounds);

struct CRowDecision {
  Eigen::VectorXd row;      // full row n of C*, diagonal = -sum of the rest
  double objective = 0.0;   // sum_j (C_nj - l_nj) V_j + (C_nn - l_nn) V_n
  std::string note;         // flat-objective / constraint-convention remarks
};

// Row n of the general-D linear program: minimize the C-dependent part of the
// Hamiltonian over the bounds box by corner enumeration (the objective is
// linear, so a corner is optimal); lexicographically smallest corner on ties.
CRowDecision optimal_C_lp(const Eigen::VectorXd& v, const CBounds& bounds,
                          const RateMatrix& lambda, int n);

// Deterministic function of (t, regime) stored on a grid, linear in between.
struct FCurve {
  TimeGrid grid;
  Eigen::MatrixXd values;  // D x points

  double at(double t, int n) const;
};

struct FOdeOptions {
  bool include_rx = false;  // keep the printed r_n X(t) term, frozen at x_fixed
  double x_fixed = 0.0;
  double terminal = -1.0;   // -1 for f1 (value), +1 for f (adjoint)
  int substeps = 4;         // RK4 sub-steps per grid step
};

// Coupled linear backward system across regimes,
//   f' + f R_n(t) + sum_{j != n} C_nj(t) (f_j - f_n) = 0,  f(T) = terminal,
// R_n = -beta {P0 + r x + pi (mu - r)} + r - beta theta sigma pi
//       + beta^2 sigma^2 pi^2 / 2 + (1 + theta) int (e^{beta z} - 1) nu_n.
FCurve solve_f_ode(const InsuranceMarket& market, const Eigen::VectorXd& pi,
                   const Eigen::VectorXd& theta,
                   const std::function<Eigen::MatrixXd(double)>& C,
                   const TimeGrid& grid, const FOdeOptions& opts = {});

// The per-regime rate R_n above; the closed-form pi* minimizes it at theta*.
double f_ode_rate(const InsuranceMarket& market, int n, double pi, double theta,
                  const FOdeOptions& opts = {});

// Y(0) = f1(0, initial regime) e^{-beta x0}: the exact value of the constant
// strategy profile (pi, theta, C) when r = 0 (or include_rx at frozen x).
double insurance_value_ode(const InsuranceMarket& market, const Eigen::VectorXd& pi,
                           const Eigen::VectorXd& theta,
                           const std::function<Eigen::MatrixXd(double)>& C,
                           const TimeGrid& grid, const FOdeOptions& opts = {});

// Driver of the value BSDE under the distorted measure:
//   g = theta z + theta kfun + sum_j (C_nj - l_nj) v_j,
// with theta = u2 and terminal -e^{-beta x}.
BsdeSpec value_bsde(const InsuranceMarket& market,
                    const std::function<Eigen::MatrixXd(double)>& C);

// Closed-form candidate (Y, Z, K, V) with its analytic generator, for
// residual_of_ansatz; pi/theta per regime, f1 from solve_f_ode on the same
// grid as the batch.
AnsatzCandidate value_ansatz_candidate(const InsuranceMarket& market,
                                       const FCurve& f1, const Eigen::VectorXd& pi,
                                       const Eigen::VectorXd& theta,
                                       const std::function<Eigen::MatrixXd(double)>& C);

struct AnsatzPaths {
  Eigen::VectorXd y, z, kfun, p, q, r0fun;  // per grid point
  Eigen::MatrixXd v, w;                     // D x points
};

// Candidate value and adjoint processes along one simulated path:
// Y = f1 e^{-beta X}, Z = -beta Y sigma pi, K-functional = Y int(e^{bz}-1)nu,
// V_j = (f1_j - f1_a) e^{-beta X}; p = beta f A e^{-beta X},
// q = (theta - beta sigma pi) p, r0-functional = int r0 gamma-free density nu,
// w_j = beta A e^{-beta X} (f_j C_aj / l_aj - f_a).
AnsatzPaths value_and_adjoint_ansatz(const InsuranceMarket& market,
                                     const FCurve& f1, const FCurve& f,
                                     const Eigen::VectorXd& a_path,
                                     const Eigen::VectorXd& x_path,
                                     const ChainPath& chain,
                                     const Eigen::VectorXd& pi,
                                     const Eigen::VectorXd& theta,
                                     const std::function<Eigen::MatrixXd(double)>& C);

// Zero-sum game E_Q[U(X(T))]: player 1 picks the investment (u1 = pi),
// player 2 the scenario drift distortion (u2 = theta); the chain distortion C
// is a fixed parameter of the spec. The per-path objective is evaluated
// directly as G^{theta,C}(T) U(X(T)).
GameSpec insurance_game(const InsuranceMarket& market, const TimeGrid& grid,
                        const std::function<Eigen::MatrixXd(double)>& C);

struct InsuranceEquilibrium {
  Eigen::VectorXd pi, theta;
  std::vector<Eigen::MatrixXd> c_steps;  // one C* matrix per grid step
  FCurve f1, f;
  bool converged = false;
  int iterations = 0;
  std::string note;

  Eigen::MatrixXd c_at(double t) const;
  std::function<Eigen::MatrixXd(double)> c_family() const;
};

// (pi*, theta*) from the closed forms; C* and f1 from the bang-bang rule and
// the f-ODE, iterated to a fixed point (sup-norm tolerance 1e-8, max 100
// rounds; non-convergence reported in `note` and `converged`).
InsuranceEquilibrium solve_equilibrium(const InsuranceMarket& market,
                                       const CBounds& bounds, const TimeGrid& grid);

// Saddle check of (pi*, theta*, C*): unilateral pi deviations must not raise,
// theta/C deviations must not lower, E_Q[U(X(T))]; Gateaux derivatives in pi
// and theta appended as entries (ok iff within 3 stderr of zero).
VerificationReport verify_insurance_equilibrium(const InsuranceMarket& market,
                                                const CBounds& bounds,
                                                const TimeGrid& grid, int paths,
                                                std::uint64_t seed, int workers = 0);

}  // namespace fbsg
