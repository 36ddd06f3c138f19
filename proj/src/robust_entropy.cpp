#include "fbsg/robust_entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fbsg/quadrature.hpp"

namespace fbsg {
namespace {

// (1 + x) ln(1 + x) - x, the relative-entropy integrand
double ent(double x) {
  if (x <= -1.0) throw std::domain_error("entropy penalty needs theta > -1");
  return (1.0 + x) * std::log1p(x) - x;
}

Eigen::VectorXd chain_rates_at(const RateMatrix& lambda, int n) {
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(lambda.dim());
  for (int j = 0; j < lambda.dim(); ++j)
    if (j != n) rates(j) = lambda(n, j);
  return rates;
}

std::vector<double> cumulative_kappa(const EntropyModelConfig& config) {
  const int M = config.grid.steps();
  std::vector<double> cum(static_cast<std::size_t>(M) + 1, 0.0);
  for (int m = 0; m < M; ++m)
    cum[static_cast<std::size_t>(m) + 1] =
        cum[static_cast<std::size_t>(m)] +
        integrate(config.kappa, config.grid.time(m), config.grid.time(m + 1));
  return cum;
}

ThetaPoint theta_at(const ScenarioControl& theta, double t, int dim) {
  ThetaPoint pt;
  pt.theta0 = theta.theta0(t);
  pt.theta1 = Eigen::VectorXd::Zero(dim);
  for (int j = 0; j < dim; ++j) pt.theta1(j) = theta.theta1(t, j);
  pt.theta2 = [&theta, t](double z) { return theta.theta2(t, z); };
  return pt;
}

}  // namespace

double penalty_h1(const ThetaPoint& theta, const Eigen::VectorXd& chain_rates,
                  double jump_intensity, const JumpDist& dist) {
  double h = 0.5 * theta.theta0 * theta.theta0;
  for (int j = 0; j < chain_rates.size(); ++j)
    if (chain_rates(j) > 0.0) h += ent(theta.theta1(j)) * chain_rates(j);
  if (jump_intensity > 0.0)
    h += jump_intensity *
         dist.integrate([&](double z) { return ent(theta.theta2(z)); });
  return h;
}

double g_functional(const ThetaPoint& theta, double z, const Eigen::VectorXd& w,
                    const std::function<double(double)>& kfn,
                    const Eigen::VectorXd& chain_rates, double jump_intensity,
                    const JumpDist& dist) {
  double g = penalty_h1(theta, chain_rates, jump_intensity, dist);
  g += theta.theta0 * z;
  for (int j = 0; j < chain_rates.size(); ++j)
    if (chain_rates(j) > 0.0) g += theta.theta1(j) * chain_rates(j) * w(j);
  if (jump_intensity > 0.0)
    g += jump_intensity *
         dist.integrate([&](double zeta) { return theta.theta2(zeta) * kfn(zeta); });
  return g;
}

ThetaPoint optimal_theta(double z, const Eigen::VectorXd& w,
                         const std::function<double(double)>& kfn) {
  ThetaPoint pt;
  pt.theta0 = -z;
  pt.theta1 = Eigen::VectorXd::Zero(w.size());
  for (int j = 0; j < w.size(); ++j) pt.theta1(j) = std::expm1(-w(j));
  pt.theta2 = [kfn](double zeta) { return std::expm1(-kfn(zeta)); };
  return pt;
}

double reduced_driver(double y, double z, const Eigen::VectorXd& w,
                      const std::function<double(double)>& kfn, double kappa,
                      double a0, double u1_value,
                      const Eigen::VectorXd& chain_rates, double jump_intensity,
                      const JumpDist& dist) {
  double g = -kappa * y + a0 * u1_value - 0.5 * z * z;
  for (int j = 0; j < chain_rates.size(); ++j)
    if (chain_rates(j) > 0.0)
      g += chain_rates(j) * (1.0 - std::exp(-w(j)) - w(j));
  if (jump_intensity > 0.0)
    g += jump_intensity *
         dist.integrate([&](double zeta) {
           const double k = kfn(zeta);
           return 1.0 - std::exp(-k) - k;
         });
  return g;
}

RobustSolution solve_robust_value(const EntropyModelConfig& config, int paths,
                                  std::uint64_t seed, int workers,
                                  const RegressionBasis& basis) {
  const int D = config.lambda.dim();
  for (int j = 0; j < D; ++j) {
    if (config.levy.intensity[static_cast<std::size_t>(j)] > 0.0 &&
        config.levy.dist[static_cast<std::size_t>(j)].kind() != JumpDist::Kind::Atom)
      throw std::invalid_argument(
          "solve_robust_value: the reduced jump driver is recovered from the "
          "K-functional, which needs a single-atom claim law per regime");
  }

  RobustSolution out;
  out.batch = make_batch(config.grid, config.lambda, config.levy, config.state,
                         ControlProcess{}, config.x0, paths, seed,
                         config.initial_state, workers);

  const RateMatrix lambda = config.lambda;
  const std::vector<double> intensity = config.levy.intensity;
  const auto kappa = config.kappa;
  const auto u1 = config.u1;
  const double a0 = config.a0;
  BsdeSpec spec;
  spec.driver = [lambda, intensity, kappa, u1, a0](double t, double x, int n,
                                                   double y, double z, double kfun,
                                                   const Eigen::VectorXd& v, double,
                                                   double) {
    double g = -kappa(t) * y + a0 * u1(t, x, n) - 0.5 * z * z;
    for (int j = 0; j < lambda.dim(); ++j) {
      if (j == n) continue;
      const double rate = lambda(n, j);
      if (rate > 0.0) g += rate * (1.0 - std::exp(-v(j)) - v(j));
    }
    const double l0 = intensity[static_cast<std::size_t>(n)];
    if (l0 > 0.0) {
      const double k = kfun / l0;  // single atom: kfun = l0 K(zeta*)
      g += l0 * (1.0 - std::exp(-k) - k);
    }
    return g;
  };
  const auto u2 = config.u2;
  const double abar0 = config.abar0;
  spec.terminal = [u2, abar0](double x, int n) { return abar0 * u2(x, n); };
  out.sol = solve_bsde_regression(spec, out.batch, basis);
  out.y0 = out.sol.y0_mean();
  return out;
}

ScenarioControl worst_case_theta(const EntropyModelConfig& config,
                                 const RobustSolution& solution, int path) {
  const double dt = config.grid.dt();
  const int M = config.grid.steps();
  const BsdeSolution* sol = &solution.sol;
  const std::vector<double> intensity = config.levy.intensity;
  auto step_of = [dt, M](double t) {
    return std::clamp(static_cast<int>(std::lround(t / dt)), 0, M - 1);
  };
  ScenarioControl theta;
  theta.theta0 = [sol, path, step_of](double t) { return -sol->z(path, step_of(t)); };
  theta.theta1 = [sol, path, step_of](double t, int j) {
    return std::expm1(-sol->v[static_cast<std::size_t>(j)](path, step_of(t)));
  };
  auto k_at = [sol, path, step_of, intensity](double t, int j) {
    const double l0 = intensity[static_cast<std::size_t>(j)];
    return l0 > 0.0 ? sol->kfun(path, step_of(t)) / l0 : 0.0;
  };
  const ChainPath* chain = &solution.batch.chains[static_cast<std::size_t>(path)];
  theta.theta2 = [k_at, chain](double t, double) {
    return std::expm1(-k_at(t, chain->state_at(t)));
  };
  theta.theta2_mean = [k_at](double t, int j) { return std::expm1(-k_at(t, j)); };
  return theta;
}

MeanStderr value_under_theta(
    const EntropyModelConfig& config,
    const std::function<ScenarioControl(const PathBatch&, int path)>& theta_factory,
    const PathBatch& batch) {
  const int P = batch.paths();
  const int M = config.grid.steps();
  const double dt = config.grid.dt();
  const std::vector<double> cumk = cumulative_kappa(config);
  std::vector<double> vals(static_cast<std::size_t>(P), 0.0);
  for (int p = 0; p < P; ++p) {
    const ChainPath& chain = batch.chains[static_cast<std::size_t>(p)];
    const NoiseBundle& noise = batch.noises[static_cast<std::size_t>(p)];
    const ScenarioControl theta = theta_factory(batch, p);
    const Eigen::VectorXd g =
        simulate_density_theta(theta, noise, chain, batch.levy);
    double acc = 0.0;
    for (int m = 0; m < M; ++m) {
      const double t = config.grid.time(m);
      const int n = chain.state_at_grid(m);
      const ThetaPoint pt = theta_at(theta, t, config.lambda.dim());
      const double h1 =
          penalty_h1(pt, chain_rates_at(config.lambda, n),
                     config.levy.intensity[static_cast<std::size_t>(n)],
                     config.levy.dist[static_cast<std::size_t>(n)]);
      acc += std::exp(-cumk[static_cast<std::size_t>(m)]) * g(m) *
             (config.a0 * config.u1(t, batch.x(p, m), n) + h1) * dt;
    }
    acc += config.abar0 * std::exp(-cumk[static_cast<std::size_t>(M)]) * g(M) *
           config.u2(batch.x(p, M), chain.state_at_grid(M));
    vals[static_cast<std::size_t>(p)] = acc;
  }
  return mean_stderr(vals);
}

EntropyIdentity entropy_identity_gap(
    const EntropyModelConfig& config,
    const std::function<ScenarioControl(const PathBatch&, int path)>& theta_factory,
    const PathBatch& batch) {
  const int P = batch.paths();
  const int M = config.grid.steps();
  const double dt = config.grid.dt();
  const std::vector<double> cumk = cumulative_kappa(config);
  std::vector<double> lhs(static_cast<std::size_t>(P), 0.0);
  std::vector<double> rhs(static_cast<std::size_t>(P), 0.0);
  std::vector<double> diff(static_cast<std::size_t>(P), 0.0);
  for (int p = 0; p < P; ++p) {
    const ChainPath& chain = batch.chains[static_cast<std::size_t>(p)];
    const NoiseBundle& noise = batch.noises[static_cast<std::size_t>(p)];
    const ScenarioControl theta = theta_factory(batch, p);
    const Eigen::VectorXd g =
        simulate_density_theta(theta, noise, chain, batch.levy);
    double l = 0.0, r = 0.0;
    for (int m = 0; m < M; ++m) {
      const double t = config.grid.time(m);
      const int n = chain.state_at_grid(m);
      const double disc = std::exp(-cumk[static_cast<std::size_t>(m)]);
      l += config.kappa(t) * disc * g(m) * std::log(g(m)) * dt;
      const ThetaPoint pt = theta_at(theta, t, config.lambda.dim());
      r += disc * g(m) *
           penalty_h1(pt, chain_rates_at(config.lambda, n),
                      config.levy.intensity[static_cast<std::size_t>(n)],
                      config.levy.dist[static_cast<std::size_t>(n)]) *
           dt;
    }
    l += std::exp(-cumk[static_cast<std::size_t>(M)]) * g(M) * std::log(g(M));
    lhs[static_cast<std::size_t>(p)] = l;
    rhs[static_cast<std::size_t>(p)] = r;
    diff[static_cast<std::size_t>(p)] = l - r;
  }
  EntropyIdentity out;
  out.lhs = mean_stderr(lhs).mean;
  out.rhs = mean_stderr(rhs).mean;
  out.diff_stderr = mean_stderr(diff).stderr_;
  return out;
}

}  // namespace fbsg
