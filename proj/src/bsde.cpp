#include "fbsg/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fbsg/parallel.hpp"
#include "fbsg/rng.hpp"

namespace fbsg {
namespace {

struct StepData {
  // per path, per step
  Eigen::MatrixXd db;          // Brownian increments
  Eigen::MatrixXd rho_mart;    // sum rho(zeta) over claims - int rho nu ds
  std::vector<Eigen::MatrixXd> dphi_tilde;  // per regime j: dPhi_j - dlambda_j
};

StepData build_step_data(const PathBatch& batch,
                         const std::function<double(double)>& rho) {
  const int P = batch.paths();
  const int M = batch.grid.steps();
  const int D = batch.lambda.dim();
  StepData sd;
  sd.db.resize(P, M);
  sd.rho_mart.resize(P, M);
  sd.dphi_tilde.assign(static_cast<std::size_t>(D), Eigen::MatrixXd::Zero(P, M));

  std::vector<double> rho_bar(static_cast<std::size_t>(D), 0.0);
  for (int j = 0; j < D; ++j) {
    if (batch.levy.intensity[static_cast<std::size_t>(j)] > 0.0)
      rho_bar[static_cast<std::size_t>(j)] =
          rho ? batch.levy.dist[static_cast<std::size_t>(j)].integrate(rho) : 1.0;
  }

  for (int p = 0; p < P; ++p) {
    const ChainPath& chain = batch.chains[static_cast<std::size_t>(p)];
    const NoiseBundle& noise = batch.noises[static_cast<std::size_t>(p)];
    sd.db.row(p) = noise.brownian_increments.transpose();

    std::size_t ce = 0;  // claim event cursor
    std::size_t cj = 0;  // chain jump cursor
    for (int m = 0; m < M; ++m) {
      const double t1 = batch.grid.time(m + 1);
      double rs = 0.0;
      while (ce < noise.jumps.size() && noise.jumps[ce].time <= t1) {
        rs += rho ? rho(noise.jumps[ce].size) : 1.0;
        ++ce;
      }
      for (int j = 0; j < D; ++j) {
        const double docc = chain.occupation(j, m + 1) - chain.occupation(j, m);
        rs -= batch.levy.intensity[static_cast<std::size_t>(j)] *
              rho_bar[static_cast<std::size_t>(j)] * docc;
        sd.dphi_tilde[static_cast<std::size_t>(j)](p, m) =
            -(chain.compensator(j, m + 1) - chain.compensator(j, m));
      }
      sd.rho_mart(p, m) = rs;
      while (cj < chain.jumps.size() && chain.jumps[cj].time <= t1) {
        sd.dphi_tilde[static_cast<std::size_t>(chain.jumps[cj].to)](p, m) += 1.0;
        ++cj;
      }
    }
  }
  return sd;
}

std::vector<double> eval_basis(const RegressionBasis& basis, double x,
                               double center, double scale) {
  std::vector<double> out;
  if (!basis.funcs.empty()) {
    out.reserve(basis.funcs.size());
    for (const auto& f : basis.funcs) out.push_back(f(x));
    return out;
  }
  out.reserve(static_cast<std::size_t>(basis.degree) + 1);
  const double xn = (x - center) / scale;
  double pw = 1.0;
  for (int d = 0; d <= basis.degree; ++d) {
    out.push_back(pw);
    pw *= xn;
  }
  return out;
}

// Generic backward pass. The driver sees (t, x, regime, y, z, kfun, v, u1, u2).
BsdeSolution backward_solve(
    const std::function<double(double, double, int, double, double, double,
                               const Eigen::VectorXd&, double, double)>& driver,
    const Eigen::VectorXd& terminal, const PathBatch& batch,
    const RegressionBasis& basis, const std::function<double(double)>& rho) {
  const int P = batch.paths();
  const int M = batch.grid.steps();
  const int D = batch.lambda.dim();
  const double dt = batch.grid.dt();
  const int B = basis.size();

  BsdeSolution sol;
  sol.y = Eigen::MatrixXd::Zero(P, M + 1);
  sol.z = Eigen::MatrixXd::Zero(P, M + 1);
  sol.kfun = Eigen::MatrixXd::Zero(P, M + 1);
  sol.v.assign(static_cast<std::size_t>(D), Eigen::MatrixXd::Zero(P, M + 1));
  sol.y.col(M) = terminal;

  const StepData sd = build_step_data(batch, rho);

  for (int m = M - 1; m >= 0; --m) {
    const double t = batch.grid.time(m);
    // stratify by the regime in force on [t_m, t_{m+1})
    std::vector<std::vector<int>> strata(static_cast<std::size_t>(D));
    for (int p = 0; p < P; ++p)
      strata[static_cast<std::size_t>(
                 batch.chains[static_cast<std::size_t>(p)].state_at_grid(m))]
          .push_back(p);

    for (int n = 0; n < D; ++n) {
      const auto& idx = strata[static_cast<std::size_t>(n)];
      if (idx.empty()) continue;
      const int S = static_cast<int>(idx.size());
      const int targets = 3 + D;  // y, z, kfun, v_0..v_{D-1}

      Eigen::MatrixXd rhs(S, targets);
      for (int r = 0; r < S; ++r) {
        const int p = idx[static_cast<std::size_t>(r)];
        const double ynext = sol.y(p, m + 1);
        rhs(r, 0) = ynext;
        rhs(r, 1) = ynext * sd.db(p, m) / dt;
        rhs(r, 2) = ynext * sd.rho_mart(p, m) / dt;
        for (int j = 0; j < D; ++j)
          rhs(r, 3 + j) = ynext * sd.dphi_tilde[static_cast<std::size_t>(j)](p, m) / dt;
      }

      Eigen::MatrixXd fitted(S, targets);
      if (S < B + 1) {
        std::ostringstream w;
        w << "step " << m << " regime " << n << ": stratum size " << S
          << " below basis size, sample-mean fallback";
        sol.warnings.push_back(w.str());
        fitted = rhs.colwise().mean().replicate(S, 1);
      } else {
        double center = 0.0, scale = 1.0;
        if (basis.funcs.empty()) {
          double s = 0.0;
          for (int p : idx) s += batch.x(p, m);
          center = s / S;
          double ss = 0.0;
          for (int p : idx) ss += (batch.x(p, m) - center) * (batch.x(p, m) - center);
          scale = std::sqrt(ss / S);
          if (!(scale > 1e-12)) scale = 1.0;
        }
        Eigen::MatrixXd design(S, B);
        for (int r = 0; r < S; ++r) {
          const auto row =
              eval_basis(basis, batch.x(idx[static_cast<std::size_t>(r)], m), center, scale);
          for (int c = 0; c < B; ++c) design(r, c) = row[static_cast<std::size_t>(c)];
        }
        // min-norm least squares: fitted values are the exact column-space
        // projection even for rank-deficient designs, so affine basis changes
        // cannot alter them
        // treat near-parallel columns as rank-deficient so the min-norm fit
        // stays the column-space projection instead of amplifying rounding;
        // the threshold must be set before compute() so the rank-revealing
        // factor is built consistently
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
        cod.setThreshold(1e-10);
        cod.compute(design);
        if (cod.rank() < B) {
          std::ostringstream w;
          w << "step " << m << " regime " << n << ": design rank " << cod.rank()
            << " < " << B << ", reduced fit";
          sol.warnings.push_back(w.str());
        }
        fitted = design * cod.solve(rhs);
      }

      for (int r = 0; r < S; ++r) {
        const int p = idx[static_cast<std::size_t>(r)];
        const double x = batch.x(p, m);
        sol.z(p, m) = fitted(r, 1);
        sol.kfun(p, m) = fitted(r, 2);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(D);
        for (int j = 0; j < D; ++j) {
          const double rate = batch.lambda(n, j);
          if (j != n && rate > 0.0) v(j) = fitted(r, 3 + j) / rate;
          sol.v[static_cast<std::size_t>(j)](p, m) = v(j);
        }
        const double u1 = batch.control.u1 ? batch.control.u1(t, x, n) : 0.0;
        const double u2 = batch.control.u2 ? batch.control.u2(t, x, n) : 0.0;
        // implicit Y: y = E[Y_{m+1}] + g(..., y, ...) dt
        const double e = fitted(r, 0);
        double y = e;
        bool converged = false;
        for (int it = 0; it < 50; ++it) {
          const double ynew =
              e + dt * driver(t, x, n, y, sol.z(p, m), sol.kfun(p, m), v, u1, u2);
          if (std::abs(ynew - y) < 1e-10) {
            y = ynew;
            converged = true;
            break;
          }
          y = ynew;
        }
        if (!converged)
          throw std::runtime_error("implicit Y fixed point failed to converge");
        sol.y(p, m) = y;
      }
    }
  }
  return sol;
}

}  // namespace

PathBatch make_batch(const TimeGrid& grid, const RateMatrix& lambda,
                     const RegimeLevyMeasure& levy,
                     const ForwardCoefficients& coeffs,
                     const ControlProcess& control, double x0, int paths,
                     std::uint64_t seed, int initial_state, int workers) {
  PathBatch batch{grid, lambda, levy, control, {}, {}, {}, seed, initial_state};
  batch.chains.resize(static_cast<std::size_t>(paths));
  batch.noises.resize(static_cast<std::size_t>(paths));
  batch.x.resize(paths, grid.points());
  parallel_for(
      static_cast<std::size_t>(paths),
      [&](std::size_t p) {
        const std::uint64_t cs = mix_seed(seed ^ mix_seed(p ^ mix_seed(11)));
        const std::uint64_t ns = mix_seed(seed ^ mix_seed(p ^ mix_seed(12)));
        batch.chains[p] = simulate_chain(lambda, initial_state, grid, cs);
        batch.noises[p] = sample_noise(grid, batch.chains[p], levy, ns);
        batch.x.row(static_cast<Eigen::Index>(p)) =
            simulate_state(coeffs, control, batch.noises[p], levy, x0).transpose();
      },
      workers);
  // the chain pointers must reference the stored copies
  for (std::size_t p = 0; p < batch.chains.size(); ++p)
    batch.noises[p].chain = &batch.chains[p];
  return batch;
}

PathBatch coarsen_batch(const PathBatch& fine, int factor,
                        const ForwardCoefficients& coeffs, double x0,
                        int workers) {
  if (factor < 1 || fine.grid.steps() % factor != 0)
    throw std::invalid_argument("coarsen_batch: factor must divide the step count");
  const TimeGrid coarse(fine.grid.horizon(), fine.grid.steps() / factor);
  PathBatch batch{coarse,           fine.lambda, fine.levy, fine.control, {}, {}, {},
                  fine.seed,        fine.initial_state};
  const int P = fine.paths();
  batch.chains.resize(static_cast<std::size_t>(P));
  batch.noises.resize(static_cast<std::size_t>(P));
  batch.x.resize(P, coarse.points());
  parallel_for(
      static_cast<std::size_t>(P),
      [&](std::size_t p) {
        const std::uint64_t cs = mix_seed(fine.seed ^ mix_seed(p ^ mix_seed(11)));
        const std::uint64_t ns = mix_seed(fine.seed ^ mix_seed(p ^ mix_seed(12)));
        batch.chains[p] =
            simulate_chain(fine.lambda, fine.initial_state, coarse, cs);
        batch.noises[p] = sample_noise(coarse, batch.chains[p], fine.levy, ns);
        for (int m = 0; m < coarse.steps(); ++m)
          batch.noises[p].brownian_increments(m) =
              fine.noises[p]
                  .brownian_increments.segment(m * factor, factor)
                  .sum();
        batch.x.row(static_cast<Eigen::Index>(p)) =
            simulate_state(coeffs, fine.control, batch.noises[p], fine.levy, x0)
                .transpose();
      },
      workers);
  for (std::size_t p = 0; p < batch.chains.size(); ++p)
    batch.noises[p].chain = &batch.chains[p];
  return batch;
}

BsdeSolution solve_bsde_regression(const BsdeSpec& spec, const PathBatch& batch,
                                   const RegressionBasis& basis) {
  const int P = batch.paths();
  const int M = batch.grid.steps();
  Eigen::VectorXd terminal(P);
  for (int p = 0; p < P; ++p)
    terminal(p) = spec.terminal(batch.x(p, M),
                                batch.chains[static_cast<std::size_t>(p)].state_at_grid(M));
  return backward_solve(spec.driver, terminal, batch, basis, spec.rho);
}

BsdeSolution solve_adjoint_bsde(
    const std::function<double(double, double, int, double, double, double,
                               const Eigen::VectorXd&, double, double)>& neg_dh_dx,
    const Eigen::VectorXd& terminal_per_path, const PathBatch& batch,
    const RegressionBasis& basis, const std::function<double(double)>& rho) {
  if (terminal_per_path.size() != batch.paths())
    throw std::invalid_argument("adjoint terminal size mismatch");
  return backward_solve(neg_dh_dx, terminal_per_path, batch, basis, rho);
}

ResidualStats residual_of_ansatz(const BsdeSpec& spec,
                                 const AnsatzCandidate& candidate,
                                 const PathBatch& batch) {
  const int P = batch.paths();
  const int M = batch.grid.steps();
  const int D = batch.lambda.dim();
  ResidualStats st;
  double sum = 0.0;
  std::size_t count = 0;
  for (int p = 0; p < P; ++p) {
    const ChainPath& chain = batch.chains[static_cast<std::size_t>(p)];
    for (int m = 0; m < M; ++m) {
      const double t = batch.grid.time(m);
      const double x = batch.x(p, m);
      const int n = chain.state_at_grid(m);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(D);
      if (candidate.v)
        for (int j = 0; j < D; ++j) v(j) = candidate.v(t, x, n, j);
      const double u1 = batch.control.u1 ? batch.control.u1(t, x, n) : 0.0;
      const double u2 = batch.control.u2 ? batch.control.u2(t, x, n) : 0.0;
      const double g =
          spec.driver(t, x, n, candidate.y(t, x, n),
                      candidate.z ? candidate.z(t, x, n) : 0.0,
                      candidate.kfun ? candidate.kfun(t, x, n) : 0.0, v, u1, u2);
      const double defect = candidate.lgen(t, x, n) + g;
      st.max_abs = std::max(st.max_abs, std::abs(defect));
      sum += std::abs(defect);
      ++count;
    }
  }
  if (count > 0) st.mean_abs = sum / static_cast<double>(count);
  return st;
}

}  // namespace fbsg
