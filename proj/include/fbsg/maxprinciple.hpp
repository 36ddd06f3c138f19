#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fbsg/bsde.hpp"
#include "fbsg/parallel.hpp"

namespace fbsg {

// Everything the Hamiltonian of player i needs at one (t, omega):
//   H_i = f_i + a g_i + p b + q sigma + int r gamma nu + sum_j eta_j w_j l_nj.
// The jump integral is supplied as a functional of the controls because r and
// gamma live against the Levy measure, not on the path.
struct HamiltonianPoint {
  double t = 0.0;
  double x = 0.0;
  int regime = 0;
  double y = 0.0, z = 0.0, kfun = 0.0;
  Eigen::VectorXd v;  // one entry per regime
  double a = 1.0, p = 0.0, q = 0.0;
  Eigen::VectorXd w;  // one entry per regime
  std::function<double(double u1, double u2)> r_gamma;  // optional
};

// Two-player stochastic differential game with scalar feedback controls.
// J_i(u) = E[ int f_i dt + phi_i(X_T, a_T) + psi_i(Y_i(0)) ]; the Y_i part is
// produced by the regression BSDE solver unless a direct per-path objective
// is supplied.
struct GameSpec {
  TimeGrid grid;
  RateMatrix lambda{Eigen::MatrixXd::Zero(1, 1)};
  RegimeLevyMeasure levy;
  ForwardCoefficients coeffs;
  double x0 = 0.0;
  int initial_state = 0;

  std::function<double(double t, double x, int regime, double u1, double u2)> f1, f2;
  std::function<double(double x, int regime)> phi1, phi2;
  std::function<double(double y0)> psi1, psi2;
  BsdeSpec bsde1, bsde2;

  std::pair<double, double> box1{-1e18, 1e18};
  std::pair<double, double> box2{-1e18, 1e18};
  bool zero_sum = false;  // J2 = -J1, computed from player 1 exactly

  // Optional closed-form per-path objective (batch already carries controls).
  std::function<double(const PathBatch& batch, int path)> direct1, direct2;
};

struct PlayerValue {
  double mean = 0.0;
  double stderr_ = 0.0;
  double y0 = 0.0;  // BSDE initial value when used, else 0
};

struct PerformanceEstimate {
  PlayerValue j1, j2;
};

double evaluate_hamiltonian(const GameSpec& spec, int player,
                            const HamiltonianPoint& pt, double u1, double u2);

// Per-path objective samples for one player (psi term excluded: it is a
// deterministic function of Y(0), returned separately by estimate_performance).
Eigen::VectorXd performance_path_values(const GameSpec& spec, int player,
                                        const PathBatch& batch,
                                        const RegressionBasis& basis = {});

PerformanceEstimate estimate_performance(const GameSpec& spec,
                                         const ControlProcess& control,
                                         int paths, std::uint64_t seed,
                                         int workers = 0,
                                         const RegressionBasis& basis = {});

struct FocResult {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  bool at_boundary = false;
};

// Pathwise first-order condition dH_i/du_i at the supplied points, central
// differences with h = 1e-5 (1 + |u|); one-sided at the control box boundary.
FocResult foc_residual(const GameSpec& spec, int player,
                       const std::vector<HamiltonianPoint>& points,
                       const ControlProcess& control);

struct GateauxResult {
  double value = 0.0;      // Richardson extrapolation of the two quotients
  double d_ell = 0.0;      // quotient at ell
  double d_half = 0.0;     // quotient at ell / 2
  double stderr_ = 0.0;    // of the paired quotient at ell
  double ell = 0.0;        // step actually used after feasibility shrinking
};

// Two-sided Gateaux quotient (J(u + l b) - J(u - l b)) / (2 l) under common
// random numbers; l shrinks by halves until both perturbed controls stay in
// the admissible box along the sampled paths.
GateauxResult gateaux_derivative(const GameSpec& spec, int player,
                                 const ControlProcess& control,
                                 const std::function<double(double, double, int)>& direction,
                                 int paths, std::uint64_t seed, double ell = 1e-3,
                                 int workers = 0,
                                 const RegressionBasis& basis = {});

struct ReportEntry {
  std::string label;
  double delta = 0.0;   // deviator's gain, paired estimate
  double stderr_ = 0.0;
  std::string verdict;  // "ok", "ok (within noise)", "violation"
};

struct VerificationReport {
  std::vector<ReportEntry> entries;
  bool pass = true;
  double worst_gain = 0.0;  // most positive deviator gain in stderr units
  std::vector<std::string> notes;

  std::string to_text() const;
};

using DeviationList =
    std::vector<std::pair<std::string, std::function<double(double, double, int)>>>;

// No unilateral deviation may significantly improve the deviating player's
// objective: pass iff delta <= 3 stderr for every entry.
VerificationReport verify_nash(const GameSpec& spec, const ControlProcess& candidate,
                               const DeviationList& deviations1,
                               const DeviationList& deviations2, int paths,
                               std::uint64_t seed, int workers = 0,
                               const RegressionBasis& basis = {});

// Zero-sum wording of the same check: player 1 maximizes J, player 2
// minimizes it.
VerificationReport verify_saddle(const GameSpec& spec, const ControlProcess& candidate,
                                 const DeviationList& max_deviations,
                                 const DeviationList& min_deviations, int paths,
                                 std::uint64_t seed, int workers = 0,
                                 const RegressionBasis& basis = {});

struct ConcavityResult {
  int violations = 0;
  double worst_gap = 0.0;  // most negative H(mid) - (H(a) + H(b)) / 2
};

// Midpoint concavity of (x, y, z, k, v) -> H_i on random segments around a
// base point; controls held fixed.
ConcavityResult concavity_probe(const GameSpec& spec, int player,
                                const HamiltonianPoint& base, double u1, double u2,
                                double radius, int segments, std::uint64_t seed);

}  // namespace fbsg
