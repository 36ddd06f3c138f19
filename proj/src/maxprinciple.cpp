#include "fbsg/maxprinciple.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fbsg/rng.hpp"

namespace fbsg {
namespace {

const BsdeSpec& player_bsde(const GameSpec& spec, int player) {
  return player == 1 ? spec.bsde1 : spec.bsde2;
}

// Mean objective including the psi(Y(0)) part; per-path samples (without the
// deterministic psi term) go to *path_vals for paired comparisons.
double total_value(const GameSpec& spec, int player, const PathBatch& batch,
                   const RegressionBasis& basis, Eigen::VectorXd* path_vals,
                   double* y0_out) {
  if (spec.zero_sum && player == 2) {
    const double j1 = total_value(spec, 1, batch, basis, path_vals, y0_out);
    if (path_vals) *path_vals = -*path_vals;
    return -j1;
  }
  Eigen::VectorXd vals = performance_path_values(spec, player, batch, basis);
  double mean = vals.mean();
  double y0 = 0.0;
  const auto& psi = player == 1 ? spec.psi1 : spec.psi2;
  const auto& direct = player == 1 ? spec.direct1 : spec.direct2;
  if (!direct && psi && player_bsde(spec, player).driver) {
    BsdeSolution sol = solve_bsde_regression(player_bsde(spec, player), batch, basis);
    y0 = sol.y0_mean();
    mean += psi(y0);
  }
  if (path_vals) *path_vals = vals;
  if (y0_out) *y0_out = y0;
  return mean;
}

struct BoxedControl {
  ControlProcess control;
  std::shared_ptr<std::atomic<bool>> clipped;
};

BoxedControl perturb_control(const GameSpec& spec, const ControlProcess& base,
                             int player,
                             const std::function<double(double, double, int)>& direction,
                             double scale) {
  BoxedControl out;
  out.clipped = std::make_shared<std::atomic<bool>>(false);
  const auto box = player == 1 ? spec.box1 : spec.box2;
  auto own = player == 1 ? base.u1 : base.u2;
  auto flag = out.clipped;
  auto perturbed = [own, direction, scale, box, flag](double t, double x, int n) {
    double u = (own ? own(t, x, n) : 0.0) + scale * direction(t, x, n);
    if (u < box.first || u > box.second) {
      flag->store(true);
      u = std::clamp(u, box.first, box.second);
    }
    return u;
  };
  if (player == 1)
    out.control = {perturbed, base.u2};
  else
    out.control = {base.u1, perturbed};
  return out;
}

}  // namespace

double evaluate_hamiltonian(const GameSpec& spec, int player,
                            const HamiltonianPoint& pt, double u1, double u2) {
  const auto& f = player == 1 ? spec.f1 : spec.f2;
  const auto& bsde = player_bsde(spec, player);
  double h = 0.0;
  if (f) h += f(pt.t, pt.x, pt.regime, u1, u2);
  if (bsde.driver) {
    Eigen::VectorXd v = pt.v.size() > 0 ? pt.v
                                        : Eigen::VectorXd::Zero(spec.lambda.dim());
    h += pt.a * bsde.driver(pt.t, pt.x, pt.regime, pt.y, pt.z, pt.kfun, v, u1, u2);
  }
  if (spec.coeffs.drift) h += pt.p * spec.coeffs.drift(pt.t, pt.x, pt.regime, u1, u2);
  if (spec.coeffs.diffusion)
    h += pt.q * spec.coeffs.diffusion(pt.t, pt.x, pt.regime, u1, u2);
  if (pt.r_gamma) h += pt.r_gamma(u1, u2);
  if (spec.coeffs.regime_shift && pt.w.size() > 0) {
    for (int j = 0; j < spec.lambda.dim(); ++j) {
      if (j == pt.regime) continue;
      const double rate = spec.lambda(pt.regime, j);
      if (rate > 0.0)
        h += spec.coeffs.regime_shift(pt.t, pt.x, pt.regime, u1, u2, j) * pt.w(j) * rate;
    }
  }
  return h;
}

Eigen::VectorXd performance_path_values(const GameSpec& spec, int player,
                                        const PathBatch& batch,
                                        const RegressionBasis& /*basis*/) {
  const int P = batch.paths();
  const int M = batch.grid.steps();
  const double dt = batch.grid.dt();
  const auto& direct = player == 1 ? spec.direct1 : spec.direct2;
  const auto& f = player == 1 ? spec.f1 : spec.f2;
  const auto& phi = player == 1 ? spec.phi1 : spec.phi2;

  Eigen::VectorXd vals = Eigen::VectorXd::Zero(P);
  for (int p = 0; p < P; ++p) {
    if (direct) {
      vals(p) = direct(batch, p);
      continue;
    }
    const ChainPath& chain = batch.chains[static_cast<std::size_t>(p)];
    double acc = 0.0;
    if (f) {
      for (int m = 0; m < M; ++m) {
        const double t = batch.grid.time(m);
        const double x = batch.x(p, m);
        const int n = chain.state_at_grid(m);
        const double u1 = batch.control.u1 ? batch.control.u1(t, x, n) : 0.0;
        const double u2 = batch.control.u2 ? batch.control.u2(t, x, n) : 0.0;
        acc += f(t, x, n, u1, u2) * dt;
      }
    }
    if (phi) acc += phi(batch.x(p, M), chain.state_at_grid(M));
    vals(p) = acc;
  }
  return vals;
}

PerformanceEstimate estimate_performance(const GameSpec& spec,
                                         const ControlProcess& control,
                                         int paths, std::uint64_t seed, int workers,
                                         const RegressionBasis& basis) {
  PathBatch batch = make_batch(spec.grid, spec.lambda, spec.levy, spec.coeffs,
                               control, spec.x0, paths, seed, spec.initial_state,
                               workers);
  PerformanceEstimate est;
  Eigen::VectorXd vals;
  est.j1.mean = total_value(spec, 1, batch, basis, &vals, &est.j1.y0);
  {
    std::vector<double> xs(vals.data(), vals.data() + vals.size());
    est.j1.stderr_ = mean_stderr(xs).stderr_;
  }
  if (spec.zero_sum) {
    est.j2.mean = -est.j1.mean;
    est.j2.stderr_ = est.j1.stderr_;
    est.j2.y0 = est.j1.y0;
  } else {
    est.j2.mean = total_value(spec, 2, batch, basis, &vals, &est.j2.y0);
    std::vector<double> xs(vals.data(), vals.data() + vals.size());
    est.j2.stderr_ = mean_stderr(xs).stderr_;
  }
  return est;
}

FocResult foc_residual(const GameSpec& spec, int player,
                       const std::vector<HamiltonianPoint>& points,
                       const ControlProcess& control) {
  FocResult res;
  const auto box = player == 1 ? spec.box1 : spec.box2;
  double sum = 0.0;
  for (const auto& pt : points) {
    const double u1 = control.u1 ? control.u1(pt.t, pt.x, pt.regime) : 0.0;
    const double u2 = control.u2 ? control.u2(pt.t, pt.x, pt.regime) : 0.0;
    const double u = player == 1 ? u1 : u2;
    const double h = 1e-5 * (1.0 + std::abs(u));
    auto ham = [&](double ui) {
      return player == 1 ? evaluate_hamiltonian(spec, 1, pt, ui, u2)
                         : evaluate_hamiltonian(spec, 2, pt, u1, ui);
    };
    double d;
    if (u + h > box.second) {
      d = (ham(u) - ham(u - h)) / h;
      res.at_boundary = true;
    } else if (u - h < box.first) {
      d = (ham(u + h) - ham(u)) / h;
      res.at_boundary = true;
    } else {
      d = (ham(u + h) - ham(u - h)) / (2.0 * h);
    }
    res.max_abs = std::max(res.max_abs, std::abs(d));
    sum += std::abs(d);
  }
  if (!points.empty()) res.mean_abs = sum / static_cast<double>(points.size());
  return res;
}

GateauxResult gateaux_derivative(const GameSpec& spec, int player,
                                 const ControlProcess& control,
                                 const std::function<double(double, double, int)>& direction,
                                 int paths, std::uint64_t seed, double ell,
                                 int workers, const RegressionBasis& basis) {
  GateauxResult res;
  for (int attempt = 0; attempt < 20; ++attempt) {
    auto quotient = [&](double step, Eigen::VectorXd* diffs, bool* clipped) {
      BoxedControl up = perturb_control(spec, control, player, direction, step);
      BoxedControl um = perturb_control(spec, control, player, direction, -step);
      PathBatch bp = make_batch(spec.grid, spec.lambda, spec.levy, spec.coeffs,
                                up.control, spec.x0, paths, seed,
                                spec.initial_state, workers);
      PathBatch bm = make_batch(spec.grid, spec.lambda, spec.levy, spec.coeffs,
                                um.control, spec.x0, paths, seed,
                                spec.initial_state, workers);
      *clipped = up.clipped->load() || um.clipped->load();
      Eigen::VectorXd vp, vm;
      const double jp = total_value(spec, player, bp, basis, &vp, nullptr);
      const double jm = total_value(spec, player, bm, basis, &vm, nullptr);
      if (diffs) *diffs = (vp - vm) / (2.0 * step);
      return (jp - jm) / (2.0 * step);
    };
    Eigen::VectorXd diffs;
    bool clipped1 = false, clipped2 = false;
    const double d1 = quotient(ell, &diffs, &clipped1);
    const double d2 = quotient(ell / 2.0, nullptr, &clipped2);
    if ((clipped1 || clipped2) && ell > 1e-8) {
      ell /= 2.0;
      continue;
    }
    res.d_ell = d1;
    res.d_half = d2;
    res.value = (4.0 * d2 - d1) / 3.0;
    res.ell = ell;
    std::vector<double> xs(diffs.data(), diffs.data() + diffs.size());
    res.stderr_ = mean_stderr(xs).stderr_;
    return res;
  }
  throw std::runtime_error("gateaux_derivative: no feasible step found");
}

namespace {

void check_deviations(const GameSpec& spec, const ControlProcess& candidate,
                      int player, const DeviationList& deviations,
                      const PathBatch& base_batch, const Eigen::VectorXd& base_vals,
                      double base_psi, int paths, std::uint64_t seed, int workers,
                      const RegressionBasis& basis, VerificationReport& report) {
  for (const auto& [label, dev] : deviations) {
    ControlProcess devctl = candidate;
    if (player == 1)
      devctl.u1 = dev;
    else
      devctl.u2 = dev;
    PathBatch batch = make_batch(spec.grid, spec.lambda, spec.levy, spec.coeffs,
                                 devctl, spec.x0, paths, seed, spec.initial_state,
                                 workers);
    Eigen::VectorXd vals;
    const double total = total_value(spec, player, batch, basis, &vals, nullptr);
    const double dev_psi = total - vals.mean();
    Eigen::VectorXd diff = vals - base_vals;
    std::vector<double> xs(diff.data(), diff.data() + diff.size());
    MeanStderr ms = mean_stderr(xs);
    ReportEntry entry;
    entry.label = label;
    entry.delta = ms.mean + (dev_psi - base_psi);
    entry.stderr_ = ms.stderr_;
    const double sigmas = entry.stderr_ > 0.0 ? entry.delta / entry.stderr_
                                              : (entry.delta > 0.0 ? 1e18 : -1e18);
    report.worst_gain = std::max(report.worst_gain, sigmas);
    if (entry.delta > 3.0 * entry.stderr_ && entry.delta > 0.0) {
      entry.verdict = "violation";
      report.pass = false;
    } else if (entry.delta > 0.0) {
      entry.verdict = "ok (within noise)";
    } else {
      entry.verdict = "ok";
    }
    report.entries.push_back(std::move(entry));
  }
  (void)base_batch;
}

}  // namespace

VerificationReport verify_nash(const GameSpec& spec, const ControlProcess& candidate,
                               const DeviationList& deviations1,
                               const DeviationList& deviations2, int paths,
                               std::uint64_t seed, int workers,
                               const RegressionBasis& basis) {
  VerificationReport report;
  report.worst_gain = -1e18;
  PathBatch base = make_batch(spec.grid, spec.lambda, spec.levy, spec.coeffs,
                              candidate, spec.x0, paths, seed, spec.initial_state,
                              workers);
  for (int player : {1, 2}) {
    const auto& devs = player == 1 ? deviations1 : deviations2;
    if (devs.empty()) continue;
    Eigen::VectorXd vals;
    const double total = total_value(spec, player, base, basis, &vals, nullptr);
    check_deviations(spec, candidate, player, devs, base, vals,
                     total - vals.mean(), paths, seed, workers, basis, report);
  }
  return report;
}

VerificationReport verify_saddle(const GameSpec& spec, const ControlProcess& candidate,
                                 const DeviationList& max_deviations,
                                 const DeviationList& min_deviations, int paths,
                                 std::uint64_t seed, int workers,
                                 const RegressionBasis& basis) {
  GameSpec zs = spec;
  zs.zero_sum = true;
  return verify_nash(zs, candidate, max_deviations, min_deviations, paths, seed,
                     workers, basis);
}

ConcavityResult concavity_probe(const GameSpec& spec, int player,
                                const HamiltonianPoint& base, double u1, double u2,
                                double radius, int segments, std::uint64_t seed) {
  ConcavityResult res;
  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_real_distribution<double> unif(-radius, radius);
  const int dv = static_cast<int>(base.v.size());
  auto perturbed = [&](const std::vector<double>& d) {
    HamiltonianPoint pt = base;
    pt.x += d[0];
    pt.y += d[1];
    pt.z += d[2];
    pt.kfun += d[3];
    for (int j = 0; j < dv; ++j) pt.v(j) += d[static_cast<std::size_t>(4 + j)];
    return evaluate_hamiltonian(spec, player, pt, u1, u2);
  };
  for (int s = 0; s < segments; ++s) {
    std::vector<double> da(static_cast<std::size_t>(4 + dv)),
        db(static_cast<std::size_t>(4 + dv)), dm(static_cast<std::size_t>(4 + dv));
    for (std::size_t i = 0; i < da.size(); ++i) {
      da[i] = unif(rng);
      db[i] = unif(rng);
      dm[i] = 0.5 * (da[i] + db[i]);
    }
    const double ha = perturbed(da);
    const double hb = perturbed(db);
    const double hm = perturbed(dm);
    const double gap = hm - 0.5 * (ha + hb);
    const double tol = 1e-10 * (1.0 + std::abs(ha) + std::abs(hb));
    if (gap < -tol) {
      ++res.violations;
      res.worst_gap = std::min(res.worst_gap, gap);
    }
  }
  return res;
}

std::string VerificationReport::to_text() const {
  std::ostringstream os;
  os.precision(12);
  os << "pass = " << (pass ? "true" : "false") << "\n";
  os << "worst_gain_sigmas = " << worst_gain << "\n";
  os << "entries = " << entries.size() << "\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    os << "entry." << i << ".label = " << entries[i].label << "\n";
    os << "entry." << i << ".delta = " << entries[i].delta << "\n";
    os << "entry." << i << ".stderr = " << entries[i].stderr_ << "\n";
    os << "entry." << i << ".verdict = " << entries[i].verdict << "\n";
  }
  for (std::size_t i = 0; i < notes.size(); ++i)
    os << "note." << i << " = " << notes[i] << "\n";
  return os.str();
}

}  // namespace fbsg
