#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fbsg/chain.hpp"
#include "fbsg/drivers.hpp"
#include "fbsg/grid.hpp"
#include "fbsg/parallel.hpp"
#include "fbsg/sde.hpp"

using namespace fbsg;

namespace {

RateMatrix two_state(double l12, double l21) {
  Eigen::MatrixXd q(2, 2);
  q << -l12, l12, l21, -l21;
  return RateMatrix(q);
}

RateMatrix one_state() { return RateMatrix(Eigen::MatrixXd::Zero(1, 1)); }

RegimeLevyMeasure no_jumps(int d) {
  RegimeLevyMeasure levy;
  levy.intensity.assign(static_cast<std::size_t>(d), 0.0);
  levy.dist.assign(static_cast<std::size_t>(d), JumpDist::atom(1.0));
  return levy;
}

}  // namespace

TEST_CASE("geometric Brownian motion mean") {
  double mu = 0.3, sigma = 0.4, x0 = 1.5;
  TimeGrid grid(1.0, 256);
  auto lambda = one_state();
  auto levy = no_jumps(1);
  ForwardCoefficients coeffs;
  coeffs.drift = [mu](double, double x, int, double, double) { return mu * x; };
  coeffs.diffusion = [sigma](double, double x, int, double, double) {
    return sigma * x;
  };
  int paths = 40000;
  std::vector<double> xt(paths);
  for (int p = 0; p < paths; ++p) {
    auto chain = simulate_chain(lambda, 0, grid, static_cast<std::uint64_t>(p));
    auto noise = sample_noise(grid, chain, levy, 170 + static_cast<std::uint64_t>(p));
    xt[static_cast<std::size_t>(p)] =
        simulate_state(coeffs, {}, noise, levy, x0)[grid.steps()];
  }
  auto ms = mean_stderr(xt);
  // exact Euler expectation, which itself is within O(dt) of x0 e^{mu T}
  double euler_mean = x0 * std::pow(1.0 + mu * grid.dt(), grid.steps());
  CHECK(std::abs(ms.mean - euler_mean) <= 3.0 * ms.stderr_);
  CHECK(euler_mean == doctest::Approx(x0 * std::exp(mu)).epsilon(2e-3));
}

TEST_CASE("compensated jump and switch terms keep a driftless state centred") {
  auto lambda = two_state(1.0, 2.0);
  RegimeLevyMeasure levy{{2.0, 1.0},
                         {JumpDist::exponential(3.0), JumpDist::exponential(3.0)}};
  TimeGrid grid(1.0, 64);
  ForwardCoefficients coeffs;
  coeffs.jump = [](double, double, int, double, double, double z) { return z; };
  coeffs.jump_mean = [&](double, double, int n, double, double) {
    return levy.dist[static_cast<std::size_t>(n)].mean();
  };
  coeffs.regime_shift = [](double, double, int, double, double, int j) {
    return 0.5 * (j + 1);
  };
  int paths = 40000;
  std::vector<double> xt(paths);
  for (int p = 0; p < paths; ++p) {
    auto chain = simulate_chain(lambda, 0, grid, 900 + static_cast<std::uint64_t>(p));
    auto noise = sample_noise(grid, chain, levy, 901 + static_cast<std::uint64_t>(p));
    xt[static_cast<std::size_t>(p)] =
        simulate_state(coeffs, {}, noise, levy, 0.0)[grid.steps()];
  }
  auto ms = mean_stderr(xt);
  CHECK(std::abs(ms.mean) <= 3.0 * ms.stderr_);
}

TEST_CASE("scenario density G^theta is a unit-mean martingale") {
  auto lambda = two_state(1.0, 2.0);
  RegimeLevyMeasure levy{{2.0, 0.5},
                         {JumpDist::exponential(4.0), JumpDist::exponential(4.0)}};
  TimeGrid grid(1.0, 64);
  ScenarioControl theta;
  theta.theta0 = [](double t) { return 0.4 * std::cos(t); };
  theta.theta1 = [](double t, int j) { return 0.3 * (j + 1) * (1.0 + 0.2 * t); };
  theta.theta2 = [](double, double z) { return 0.5 * std::exp(-z) - 0.2; };
  // E_F[theta2] under Exp(4): 0.5 * 4/5 - 0.2
  theta.theta2_mean = [](double, int) { return 0.2; };

  int paths = 20000;
  std::vector<double> gt(paths);
  for (int p = 0; p < paths; ++p) {
    auto chain = simulate_chain(lambda, 0, grid, 40 + static_cast<std::uint64_t>(p));
    auto noise = sample_noise(grid, chain, levy, 41 + static_cast<std::uint64_t>(p));
    gt[static_cast<std::size_t>(p)] =
        simulate_density_theta(theta, noise, chain, levy)[grid.steps()];
  }
  auto ms = mean_stderr(gt);
  CHECK(std::abs(ms.mean - 1.0) <= 3.0 * ms.stderr_);
  for (double g : gt) CHECK(g > 0.0);
}

TEST_CASE("theta = 0 gives the unit density exactly") {
  auto lambda = two_state(1.0, 2.0);
  RegimeLevyMeasure levy{{2.0, 1.0},
                         {JumpDist::exponential(3.0), JumpDist::exponential(3.0)}};
  TimeGrid grid(1.0, 32);
  auto chain = simulate_chain(lambda, 0, grid, 3);
  auto noise = sample_noise(grid, chain, levy, 4);
  auto g = simulate_density_theta(ScenarioControl::zero(), noise, chain, levy);
  CHECK((g.array() - 1.0).abs().maxCoeff() < 1e-13);
}

TEST_CASE("market density G^{theta,C} is a unit-mean martingale") {
  auto lambda = two_state(1.0, 2.0);
  RegimeLevyMeasure levy{{2.0, 0.5},
                         {JumpDist::exponential(4.0), JumpDist::exponential(4.0)}};
  TimeGrid grid(1.0, 64);
  Eigen::MatrixXd cm(2, 2);
  cm << -1.5, 1.5, 1.2, -1.2;
  auto C = [cm](double) { return cm; };
  auto theta = [](double t, int n) { return 0.2 + 0.1 * n - 0.05 * t; };

  int paths = 40000;
  std::vector<double> gt(paths);
  for (int p = 0; p < paths; ++p) {
    auto chain = simulate_chain(lambda, 0, grid, 70 + static_cast<std::uint64_t>(p));
    auto noise = sample_noise(grid, chain, levy, 71 + static_cast<std::uint64_t>(p));
    gt[static_cast<std::size_t>(p)] = simulate_density_theta_C(
        theta, C, noise, chain, levy, lambda)[grid.steps()];
  }
  auto ms = mean_stderr(gt);
  CHECK(std::abs(ms.mean - 1.0) <= 3.0 * ms.stderr_);
}

TEST_CASE("G^{theta,C} changes the chain rates to C") {
  // E[G(T) f(a_T)] under Lambda equals E[f(a_T)] under C
  auto lambda = two_state(1.0, 2.0);
  Eigen::MatrixXd cm(2, 2);
  cm << -2.0, 2.0, 0.8, -0.8;
  RateMatrix c_matrix(cm);
  auto C = [cm](double) { return cm; };
  RegimeLevyMeasure levy = no_jumps(2);
  TimeGrid grid(1.0, 64);
  auto theta = [](double, int) { return 0.0; };

  int paths = 30000;
  std::vector<double> weighted(paths), direct(paths);
  for (int p = 0; p < paths; ++p) {
    auto chain = simulate_chain(lambda, 0, grid, 500 + static_cast<std::uint64_t>(p));
    auto noise = sample_noise(grid, chain, levy, 501 + static_cast<std::uint64_t>(p));
    double g = simulate_density_theta_C(theta, C, noise, chain, levy,
                                        lambda)[grid.steps()];
    weighted[static_cast<std::size_t>(p)] =
        g * (chain.state_at_grid(grid.steps()) == 0 ? 1.0 : 0.0);
    auto chain_c =
        simulate_chain(c_matrix, 0, grid, 700000 + static_cast<std::uint64_t>(p));
    direct[static_cast<std::size_t>(p)] =
        chain_c.state_at_grid(grid.steps()) == 0 ? 1.0 : 0.0;
  }
  auto mw = mean_stderr(weighted);
  auto md = mean_stderr(direct);
  double se = std::sqrt(mw.stderr_ * mw.stderr_ + md.stderr_ * md.stderr_);
  CHECK(std::abs(mw.mean - md.mean) <= 3.0 * se);
}

TEST_CASE("exact and Euler density schemes converge at first order") {
  auto lambda = two_state(1.0, 2.0);
  RegimeLevyMeasure levy{{1.0, 2.0},
                         {JumpDist::exponential(4.0), JumpDist::exponential(4.0)}};
  ScenarioControl theta;
  theta.theta0 = [](double) { return 0.5; };
  theta.theta1 = [](double, int j) { return 0.2 * (j + 1); };
  theta.theta2 = [](double, double) { return 0.3; };
  theta.theta2_mean = [](double, int) { return 0.3; };

  std::vector<double> errs;
  for (int k = 6; k <= 10; ++k) {
    TimeGrid grid(1.0, 1 << k);
    int paths = 2000;
    double acc = 0.0;
    for (int p = 0; p < paths; ++p) {
      auto chain = simulate_chain(lambda, 0, grid, 60 + static_cast<std::uint64_t>(p));
      auto noise = sample_noise(grid, chain, levy, 61 + static_cast<std::uint64_t>(p));
      double ge = simulate_density_theta(theta, noise, chain, levy,
                                         DensityScheme::Exact)[grid.steps()];
      double gu = simulate_density_theta(theta, noise, chain, levy,
                                         DensityScheme::Euler)[grid.steps()];
      acc += (ge - gu) * (ge - gu);
    }
    errs.push_back(std::sqrt(acc / paths));
  }
  // chain/jump draws share seeds across grids, so the gaps are CRN-comparable.
  // The multiplicative-noise strong rate of the Euler cross-check is 1/2.
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(errs[i] < errs[i - 1]);
  double order = std::log2(errs.front() / errs.back()) / 4.0;
  CHECK(order >= 0.45);
  CHECK(errs.back() < errs.front() / 3.0);
}

TEST_CASE("adjoint forward process") {
  auto lambda = one_state();
  RegimeLevyMeasure levy = no_jumps(1);
  TimeGrid grid(1.0, 128);
  auto chain = simulate_chain(lambda, 0, grid, 9);
  auto noise = sample_noise(grid, chain, levy, 10);

  SUBCASE("zero gradients give A identically a0") {
    AdjointForwardSpec spec;
    spec.a0 = 2.5;
    auto a = simulate_adjoint_forward(spec, noise, chain, levy);
    CHECK((a.array() - 2.5).abs().maxCoeff() == doctest::Approx(0.0));
  }

  SUBCASE("constant dh_dy compounds towards psi' e^{ct}") {
    double c = 0.8;
    AdjointForwardSpec spec;
    spec.a0 = 1.7;  // psi'(Y(0))
    spec.dh_dy = [c](int, double a) { return c * a; };
    auto a = simulate_adjoint_forward(spec, noise, chain, levy);
    double exact_euler = spec.a0 * std::pow(1.0 + c * grid.dt(), grid.steps());
    CHECK(a[grid.steps()] == doctest::Approx(exact_euler).epsilon(1e-12));
    CHECK(a[grid.steps()] ==
          doctest::Approx(spec.a0 * std::exp(c)).epsilon(5e-3));
  }
}

TEST_CASE("adjoint forward reproduces the Euler market density on common noise") {
  auto lambda = one_state();
  double theta_c = 0.35, lam0 = 2.0;
  RegimeLevyMeasure levy{{lam0}, {JumpDist::exponential(3.0)}};
  TimeGrid grid(1.0, 64);
  auto chain = simulate_chain(lambda, 0, grid, 21);
  auto noise = sample_noise(grid, chain, levy, 22);

  auto theta = [theta_c](double, int) { return theta_c; };
  auto C = [](double) { return Eigen::MatrixXd::Zero(1, 1); };
  auto g = simulate_density_theta_C(theta, C, noise, chain, levy, lambda,
                                    DensityScheme::Euler);

  AdjointForwardSpec spec;
  spec.a0 = 1.0;
  spec.dh_dz = [theta_c](int, double a) { return theta_c * a; };
  spec.k_density = [theta_c](int, double, double a) { return theta_c * a; };
  spec.k_density_mean = [theta_c](int, int, double a) { return theta_c * a; };
  auto a = simulate_adjoint_forward(spec, noise, chain, levy);

  CHECK((a - g).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("non-finite paths abort with PathAborted") {
  auto lambda = one_state();
  RegimeLevyMeasure levy = no_jumps(1);
  TimeGrid grid(1.0, 8);
  auto chain = simulate_chain(lambda, 0, grid, 2);
  auto noise = sample_noise(grid, chain, levy, 3);
  ForwardCoefficients coeffs;
  coeffs.drift = [](double, double x, int, double, double) {
    return std::exp(x * x) * 1e308;
  };
  CHECK_THROWS_AS(simulate_state(coeffs, {}, noise, levy, 30.0), PathAborted);
}
