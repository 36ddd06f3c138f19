#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fbsg/chain.hpp"
#include "fbsg/grid.hpp"

namespace fbsg {

// Jump-size distribution F_j. Analytic moments are used where available
// (exponential claims need exact exp-moments for the insurance closed forms);
// everything else falls back to adaptive quadrature.
class JumpDist {
 public:
  static JumpDist exponential(double rate);
  static JumpDist atom(double size);                        // single point mass
  static JumpDist discrete(std::vector<std::pair<double, double>> size_weight);

  double sample(std::mt19937_64& rng) const;

  // E[phi(zeta)] under F.
  double integrate(const std::function<double(double)>& phi,
                   double rel_tol = 1e-10) const;

  double mean() const;
  // E[e^{b zeta} - 1]; throws std::domain_error for exponential when b >= rate.
  double exp_moment_minus_one(double b) const;

  enum class Kind { Exponential, Atom, Discrete };
  Kind kind() const { return kind_; }
  double rate() const { return rate_; }

 private:
  JumpDist() = default;
  Kind kind_ = Kind::Atom;
  double rate_ = 1.0;  // exponential
  std::vector<std::pair<double, double>> atoms_;  // atom / discrete
};

// Regime-modulated finite-activity Levy data: nu_j(dz) = intensity_j F_j(dz).
struct RegimeLevyMeasure {
  std::vector<double> intensity;  // lambda0_j >= 0, one per regime
  std::vector<JumpDist> dist;     // F_j, one per regime

  int dim() const { return static_cast<int>(intensity.size()); }
  std::string validate() const;
};

struct JumpEvent {
  double time;
  double size;
  int regime_before;  // chain state at t-
};

// Brownian increments on the grid plus regime-conditional jump events, tied
// to the chain path they were sampled against.
struct NoiseBundle {
  const ChainPath* chain = nullptr;
  Eigen::VectorXd brownian_increments;  // steps() entries, Var = dt
  std::vector<JumpEvent> jumps;         // ordered by time
};

NoiseBundle sample_noise(const TimeGrid& grid, const ChainPath& chain,
                         const RegimeLevyMeasure& levy, std::uint64_t seed);

// int_0^t int phi(z) nu_{a(s)}(dz) ds = sum_j intensity_j E_{F_j}[phi] J_j(t).
double compensator_integral(const RegimeLevyMeasure& levy, const ChainPath& chain,
                            const std::function<double(double)>& phi, double t);

}  // namespace fbsg
