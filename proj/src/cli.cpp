#include "fbsg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fbsg/bsde.hpp"
#include "fbsg/chain.hpp"
#include "fbsg/insurance.hpp"
#include "fbsg/robust_entropy.hpp"
#include "fbsg/rng.hpp"

namespace fbsg {

const char* const kKnownTasks[5] = {"chain-sim", "entropy-solve", "insurance-solve",
                                    "verify-nash", "bsde-convergence"};
const char* const kArtifactVersion = "1.0.0";

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

bool is_known_task(const std::string& task) {
  return std::find_if(std::begin(kKnownTasks), std::end(kKnownTasks),
                      [&](const char* t) { return task == t; }) !=
         std::end(kKnownTasks);
}

// --- config access helpers -------------------------------------------------

double jnum(const json& j, const char* key, double fallback) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : fallback;
}

Eigen::VectorXd jvec(const json& j, const char* key, int d) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  if (j.contains(key) && j[key].is_array())
    for (int i = 0; i < std::min<int>(d, static_cast<int>(j[key].size())); ++i)
      v(i) = j[key][static_cast<std::size_t>(i)].get<double>();
  return v;
}

int chain_dim(const json& cfg) {
  if (!cfg.contains("chain")) return 0;
  return static_cast<int>(jnum(cfg["chain"], "dim", 0));
}

RateMatrix make_lambda(const json& cfg) {
  const int d = chain_dim(cfg);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(std::max(d, 1), std::max(d, 1));
  const json& rates = cfg["chain"]["rates"];
  for (int n = 0; n < d; ++n)
    for (int j = 0; j < d; ++j)
      q(n, j) = rates[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)]
                    .get<double>();
  return RateMatrix(q);
}

JumpDist make_dist(const json& d, std::vector<std::string>* violations) {
  const std::string type = d.value("type", "");
  try {
    if (type == "exponential") return JumpDist::exponential(d.value("rate", 0.0));
    if (type == "atom") return JumpDist::atom(d.value("size", 0.0));
    if (type == "discrete") {
      std::vector<std::pair<double, double>> sw;
      for (const auto& a : d.value("atoms", json::array()))
        sw.emplace_back(a.value("size", 0.0), a.value("weight", 0.0));
      return JumpDist::discrete(sw);
    }
  } catch (const std::exception& e) {
    if (violations) violations->push_back(std::string("levy: ") + e.what());
    return JumpDist::atom(0.0);
  }
  if (violations) violations->push_back("levy: unknown distribution type '" + type + "'");
  return JumpDist::atom(0.0);
}

RegimeLevyMeasure make_levy(const json& cfg, int d,
                            std::vector<std::string>* violations) {
  RegimeLevyMeasure levy;
  levy.intensity.assign(static_cast<std::size_t>(d), 0.0);
  levy.dist.assign(static_cast<std::size_t>(d), JumpDist::atom(0.0));
  if (!cfg.contains("levy")) return levy;
  const json& block = cfg["levy"];
  for (int j = 0; j < d; ++j) {
    if (block.contains("intensity") && j < static_cast<int>(block["intensity"].size()))
      levy.intensity[static_cast<std::size_t>(j)] =
          block["intensity"][static_cast<std::size_t>(j)].get<double>();
    if (block.contains("dist") && j < static_cast<int>(block["dist"].size()))
      levy.dist[static_cast<std::size_t>(j)] =
          make_dist(block["dist"][static_cast<std::size_t>(j)], violations);
  }
  return levy;
}

InsuranceMarket make_market(const json& cfg, std::vector<std::string>* violations) {
  const int d = chain_dim(cfg);
  const json& dyn = cfg["dynamics"];
  InsuranceMarket market;
  market.beta = jnum(dyn, "beta", 1.0);
  market.r = jvec(dyn, "r", d);
  market.mu = jvec(dyn, "mu", d);
  market.sigma = jvec(dyn, "sigma", d);
  market.premium = jvec(dyn, "premium", d);
  market.x0 = jnum(dyn, "x0", 0.0);
  market.lambda = make_lambda(cfg);
  market.initial_state =
      static_cast<int>(jnum(cfg["chain"], "initial_state", 1)) - 1;
  const RegimeLevyMeasure levy = make_levy(cfg, d, violations);
  market.claim_intensity = levy.intensity;
  market.claims = levy.dist;
  return market;
}

CBounds make_bounds(const json& dyn, int d) {
  CBounds bounds{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
  for (int n = 0; n < d; ++n)
    for (int j = 0; j < d; ++j) {
      if (dyn.contains("c_lower"))
        bounds.lo(n, j) = dyn["c_lower"][static_cast<std::size_t>(n)]
                             [static_cast<std::size_t>(j)].get<double>();
      if (dyn.contains("c_upper"))
        bounds.hi(n, j) = dyn["c_upper"][static_cast<std::size_t>(n)]
                             [static_cast<std::size_t>(j)].get<double>();
    }
  return bounds;
}

EntropyModelConfig make_entropy_config(const json& cfg, double horizon, int steps,
                                       std::vector<std::string>* violations) {
  const int d = chain_dim(cfg);
  const json& dyn = cfg["dynamics"];
  EntropyModelConfig model;
  model.grid = TimeGrid(horizon, steps);
  model.lambda = make_lambda(cfg);
  model.levy = make_levy(cfg, d, violations);
  const double kappa = jnum(dyn, "kappa", 0.0);
  model.kappa = [kappa](double) { return kappa; };
  model.a0 = jnum(dyn, "a0", 1.0);
  model.abar0 = jnum(dyn, "abar0", 1.0);
  const Eigen::VectorXd u1 = jvec(dyn, "u1", d);
  model.u1 = [u1](double, double, int n) { return u1(n); };
  const Eigen::VectorXd u2c = jvec(dyn, "u2_const", d);
  const Eigen::VectorXd u2s = jvec(dyn, "u2_slope", d);
  model.u2 = [u2c, u2s](double x, int n) { return u2c(n) + u2s(n) * x; };
  const double sig = jnum(dyn, "state_sigma", 0.0);
  model.state.diffusion = [sig](double, double, int, double, double) { return sig; };
  model.x0 = jnum(dyn, "x0", 0.0);
  model.initial_state = static_cast<int>(jnum(cfg["chain"], "initial_state", 1)) - 1;
  return model;
}

// --- run parameters ---------------------------------------------------------

struct RunParams {
  double horizon = 1.0;
  int steps = 64;
  int paths = 1000;
  std::uint64_t seed = 0;
  int workers = 0;
};

RunParams run_params(const json& cfg, const RunOverrides& ov) {
  RunParams rp;
  if (cfg.contains("run")) {
    const json& run = cfg["run"];
    rp.horizon = jnum(run, "horizon", 1.0);
    rp.steps = static_cast<int>(jnum(run, "steps", 64));
    rp.paths = static_cast<int>(jnum(run, "paths", 1000));
    rp.seed = static_cast<std::uint64_t>(jnum(run, "seed", 0));
    rp.workers = static_cast<int>(jnum(run, "workers", 0));
  }
  if (ov.seed) rp.seed = *ov.seed;
  if (ov.paths) rp.paths = *ov.paths;
  if (ov.steps) rp.steps = *ov.steps;
  if (ov.workers) rp.workers = *ov.workers;
  return rp;
}

std::string repro_stanza(const std::string& task, const RunParams& rp) {
  std::ostringstream os;
  os << "repro.task = " << task << "\n";
  os << "repro.schema_version = 1\n";
  os << "repro.artifact_version = " << kArtifactVersion << "\n";
  os << "repro.seed = " << rp.seed << "\n";
  os << "repro.horizon = " << num(rp.horizon) << "\n";
  os << "repro.steps = " << rp.steps << "\n";
  os << "repro.paths = " << rp.paths << "\n";
  os << "repro.workers = " << rp.workers << "\n";
  return os.str();
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
  out << content;
}

// --- tasks -------------------------------------------------------------------

int task_chain_sim(const json& cfg, const RunParams& rp, const std::string& out) {
  const int d = chain_dim(cfg);
  const RateMatrix lambda = make_lambda(cfg);
  const int initial = static_cast<int>(jnum(cfg["chain"], "initial_state", 1)) - 1;
  const TimeGrid grid(rp.horizon, rp.steps);

  Eigen::MatrixXd occ_sum = Eigen::MatrixXd::Zero(d, grid.points());
  Eigen::MatrixXd mart_sum = Eigen::MatrixXd::Zero(d, grid.points());
  double jumps_sum = 0.0;
  std::vector<ChainPath> chains(static_cast<std::size_t>(rp.paths));
  parallel_for(
      static_cast<std::size_t>(rp.paths),
      [&](std::size_t p) {
        const std::uint64_t cs = mix_seed(rp.seed ^ mix_seed(p ^ mix_seed(11)));
        chains[p] = simulate_chain(lambda, initial, grid, cs);
      },
      rp.workers);
  for (const auto& chain : chains) {
    occ_sum += chain.occupation;
    mart_sum += martingale_part(chain, lambda);
    jumps_sum += static_cast<double>(chain.jumps.size());
  }

  std::ostringstream csv;
  csv << "time";
  for (int n = 0; n < d; ++n) csv << ",occupation_fraction_" << n + 1;
  for (int n = 0; n < d; ++n) csv << ",martingale_mean_" << n + 1;
  csv << "\n";
  Eigen::VectorXd final_frac = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < grid.points(); ++i) {
    const double t = grid.time(i);
    csv << num(t);
    for (int n = 0; n < d; ++n) {
      const double frac = i == 0 ? (n == initial ? 1.0 : 0.0)
                                 : occ_sum(n, i) / (t * rp.paths);
      if (i == grid.points() - 1) final_frac(n) = frac;
      csv << "," << num(frac);
    }
    for (int n = 0; n < d; ++n) csv << "," << num(mart_sum(n, i) / rp.paths);
    csv << "\n";
  }

  std::ostringstream summary;
  for (int n = 0; n < d; ++n)
    summary << "chain.occupation_fraction_final." << n + 1 << " = "
            << num(final_frac(n)) << "\n";
  summary << "chain.mean_jump_count = " << num(jumps_sum / rp.paths) << "\n";
  summary << repro_stanza("chain-sim", rp);
  write_file(out, "results.csv", csv.str());
  write_file(out, "summary.txt", summary.str());
  return 0;
}

int task_entropy_solve(const json& cfg, const RunParams& rp, const std::string& out) {
  std::vector<std::string> violations;
  EntropyModelConfig model =
      make_entropy_config(cfg, rp.horizon, rp.steps, &violations);
  if (!violations.empty()) throw std::runtime_error(violations.front());
  RobustSolution sol = solve_robust_value(model, rp.paths, rp.seed, rp.workers);

  const int d = model.lambda.dim();
  std::ostringstream csv;
  csv << "time,y_mean,z_mean";
  for (int j = 0; j < d; ++j) csv << ",v_mean_" << j + 1;
  csv << "\n";
  for (int i = 0; i < model.grid.points(); ++i) {
    csv << num(model.grid.time(i)) << "," << num(sol.sol.y.col(i).mean()) << ","
        << num(sol.sol.z.col(i).mean());
    for (int j = 0; j < d; ++j)
      csv << "," << num(sol.sol.v[static_cast<std::size_t>(j)].col(i).mean());
    csv << "\n";
  }

  std::ostringstream summary;
  summary << "entropy.y0 = " << num(sol.y0) << "\n";
  summary << "entropy.theta0_at_0 = " << num(-sol.sol.z.col(0).mean()) << "\n";
  summary << "entropy.regression_warnings = " << sol.sol.warnings.size() << "\n";
  summary << repro_stanza("entropy-solve", rp);
  write_file(out, "results.csv", csv.str());
  write_file(out, "summary.txt", summary.str());
  return 0;
}

int task_insurance_solve(const json& cfg, const RunParams& rp,
                         const std::string& out) {
  std::vector<std::string> violations;
  InsuranceMarket market = make_market(cfg, &violations);
  if (!violations.empty()) throw std::runtime_error(violations.front());
  const CBounds bounds = make_bounds(cfg["dynamics"], market.dim());
  const TimeGrid grid(rp.horizon, rp.steps);
  InsuranceEquilibrium eq = solve_equilibrium(market, bounds, grid);

  const int d = market.dim();
  std::ostringstream csv;
  csv << "time";
  for (int n = 0; n < d; ++n) csv << ",f1_" << n + 1;
  for (int n = 0; n < d; ++n) csv << ",f_" << n + 1;
  csv << "\n";
  for (int i = 0; i < grid.points(); ++i) {
    csv << num(grid.time(i));
    for (int n = 0; n < d; ++n) csv << "," << num(eq.f1.values(n, i));
    for (int n = 0; n < d; ++n) csv << "," << num(eq.f.values(n, i));
    csv << "\n";
  }

  std::ostringstream summary;
  for (int n = 0; n < d; ++n)
    summary << "insurance.pi_star." << n + 1 << " = " << num(eq.pi(n)) << "\n";
  for (int n = 0; n < d; ++n)
    summary << "insurance.theta_star." << n + 1 << " = " << num(eq.theta(n)) << "\n";
  const Eigen::MatrixXd c0 = eq.c_at(0.0);
  for (int n = 0; n < d; ++n)
    for (int j = 0; j < d; ++j)
      summary << "insurance.c_star_at_0." << n + 1 << "." << j + 1 << " = "
              << num(c0(n, j)) << "\n";
  summary << "insurance.value = "
          << num(eq.f1.at(0.0, market.initial_state) *
                 std::exp(-market.beta * market.x0))
          << "\n";
  summary << "insurance.converged = " << (eq.converged ? "true" : "false") << "\n";
  summary << "insurance.iterations = " << eq.iterations << "\n";
  summary << "insurance.note = " << eq.note << "\n";
  summary << repro_stanza("insurance-solve", rp);
  write_file(out, "results.csv", csv.str());
  write_file(out, "summary.txt", summary.str());
  return eq.converged ? 0 : 3;
}

int task_verify_nash(const json& cfg, const RunParams& rp, const std::string& out) {
  std::vector<std::string> violations;
  InsuranceMarket market = make_market(cfg, &violations);
  if (!violations.empty()) throw std::runtime_error(violations.front());
  const CBounds bounds = make_bounds(cfg["dynamics"], market.dim());
  const TimeGrid grid(rp.horizon, rp.steps);
  VerificationReport report = verify_insurance_equilibrium(
      market, bounds, grid, rp.paths, rp.seed, rp.workers);

  std::ostringstream csv;
  csv << "label,delta,stderr,verdict\n";
  for (const auto& e : report.entries)
    csv << e.label << "," << num(e.delta) << "," << num(e.stderr_) << ","
        << e.verdict << "\n";

  std::ostringstream summary;
  summary << "verify." << report.to_text();
  // to_text is multi-line; prefix each line for the nested key-value format
  std::string text = report.to_text();
  summary.str("");
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) summary << "verify." << line << "\n";
  summary << repro_stanza("verify-nash", rp);
  write_file(out, "results.csv", csv.str());
  write_file(out, "summary.txt", summary.str());
  return report.pass ? 0 : 3;
}

int task_bsde_convergence(const json& cfg, const RunParams& rp,
                          const std::string& out) {
  std::vector<std::string> violations;
  InsuranceMarket market = make_market(cfg, &violations);
  if (!violations.empty()) throw std::runtime_error(violations.front());
  const TimeGrid fine_grid(rp.horizon, rp.steps);

  const Eigen::VectorXd pi = optimal_pi(market);
  const Eigen::VectorXd theta = optimal_theta_market(market, pi);
  std::function<Eigen::MatrixXd(double)> c_family;
  if (cfg["dynamics"].contains("c_lower")) {
    InsuranceEquilibrium eq = solve_equilibrium(
        market, make_bounds(cfg["dynamics"], market.dim()), fine_grid);
    c_family = eq.c_family();
  } else {
    const Eigen::MatrixXd ref = market.lambda.matrix();
    c_family = [ref](double) { return ref; };
  }
  ControlProcess control{[pi](double, double, int n) { return pi(n); },
                         [theta](double, double, int n) { return theta(n); }};

  PathBatch fine = make_batch(fine_grid, market.lambda, market.levy(),
                              surplus_coefficients(market), control, market.x0,
                              rp.paths, rp.seed, market.initial_state, rp.workers);
  const BsdeSpec spec = value_bsde(market, c_family);

  std::vector<int> factors;
  for (int f = 16; f >= 1; f /= 2)
    if (rp.steps % f == 0 && rp.steps / f >= 4) factors.push_back(f);

  std::ostringstream csv;
  csv << "steps,dt,rms_gap\n";
  std::vector<double> gaps;
  std::ostringstream summary;
  for (int f : factors) {
    PathBatch batch = f == 1 ? std::move(fine)
                             : coarsen_batch(fine, f, surplus_coefficients(market),
                                             market.x0, rp.workers);
    const FCurve f1 = solve_f_ode(market, pi, theta, c_family, batch.grid, {});
    const AnsatzCandidate cand =
        value_ansatz_candidate(market, f1, pi, theta, c_family);
    const BsdeSolution sol = solve_bsde_regression(spec, batch);
    double ss = 0.0;
    std::size_t count = 0;
    for (int p = 0; p < batch.paths(); ++p) {
      for (int i = 0; i < batch.grid.points(); ++i) {
        const double ref = cand.y(batch.grid.time(i), batch.x(p, i),
                                  batch.chains[static_cast<std::size_t>(p)]
                                      .state_at_grid(i));
        ss += (sol.y(p, i) - ref) * (sol.y(p, i) - ref);
        ++count;
      }
    }
    const double rms = std::sqrt(ss / static_cast<double>(count));
    gaps.push_back(rms);
    csv << batch.grid.steps() << "," << num(batch.grid.dt()) << "," << num(rms)
        << "\n";
  }
  double min_order = 1e18;
  bool monotone = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    const double order = std::log2(gaps[i - 1] / gaps[i]);
    summary << "bsde.order." << i << " = " << num(order) << "\n";
    min_order = std::min(min_order, order);
    if (gaps[i] >= gaps[i - 1]) monotone = false;
  }
  summary << "bsde.min_order = " << num(gaps.size() > 1 ? min_order : 0.0) << "\n";
  summary << "bsde.monotone = " << (monotone ? "true" : "false") << "\n";
  summary << repro_stanza("bsde-convergence", rp);
  write_file(out, "results.csv", csv.str());
  write_file(out, "summary.txt", summary.str());
  return 0;
}

// --- validation ---------------------------------------------------------------

void validate_config(const json& cfg, std::vector<std::string>* violations) {
  auto add = [violations](const std::string& s) { violations->push_back(s); };
  if (!cfg.is_object()) {
    add("config: top level must be an object");
    return;
  }
  if (cfg.value("schema_version", 0) != 1)
    add("config: schema_version must be 1");
  if (cfg.contains("task") && !is_known_task(cfg["task"].get<std::string>()))
    add("config: unknown task '" + cfg["task"].get<std::string>() + "'");

  if (!cfg.contains("chain") || !cfg["chain"].is_object()) {
    add("chain: block missing");
    return;
  }
  const int d = chain_dim(cfg);
  if (d < 1) add("chain: dim must be a positive integer");
  if (!cfg["chain"].contains("rates") ||
      static_cast<int>(cfg["chain"]["rates"].size()) != d) {
    add("chain: rates must be a dim x dim matrix");
  } else {
    bool shape_ok = true;
    for (const auto& row : cfg["chain"]["rates"])
      if (static_cast<int>(row.size()) != d) shape_ok = false;
    if (!shape_ok) {
      add("chain: rates must be a dim x dim matrix");
    } else {
      const std::string bad = make_lambda(cfg).validate();
      if (!bad.empty()) add("chain: " + bad);
    }
  }
  const int initial = static_cast<int>(jnum(cfg["chain"], "initial_state", 1));
  if (initial < 1 || initial > d) add("chain: initial_state out of range");

  if (cfg.contains("levy")) {
    RegimeLevyMeasure levy = make_levy(cfg, d, violations);
    const std::string bad = levy.validate();
    if (!bad.empty()) add("levy: " + bad);
  }

  if (cfg.contains("run")) {
    const json& run = cfg["run"];
    if (!(jnum(run, "horizon", 1.0) > 0.0)) add("run: horizon must be positive");
    if (jnum(run, "steps", 64) < 1) add("run: steps must be positive");
    if (jnum(run, "paths", 1000) < 1) add("run: paths must be positive");
  }

  const std::string kind =
      cfg.contains("dynamics") ? cfg["dynamics"].value("kind", "generic") : "generic";
  if (kind != "generic" && kind != "entropy" && kind != "insurance")
    add("dynamics: unknown kind '" + kind + "'");
  if (kind == "insurance") {
    InsuranceMarket market = make_market(cfg, violations);
    const std::string bad = market.validate();
    if (!bad.empty()) add("insurance: " + bad);
    if (cfg["dynamics"].contains("c_lower") || cfg["dynamics"].contains("c_upper")) {
      const std::string bb = make_bounds(cfg["dynamics"], d).validate(d);
      if (!bb.empty()) add("insurance bounds: " + bb);
    }
  }
  if (kind == "entropy") {
    if (jnum(cfg["dynamics"], "kappa", 0.0) < 0.0)
      add("entropy: kappa must be nonnegative");
    RegimeLevyMeasure levy = make_levy(cfg, d, violations);
    for (int j = 0; j < d; ++j)
      if (levy.intensity[static_cast<std::size_t>(j)] > 0.0 &&
          levy.dist[static_cast<std::size_t>(j)].kind() != JumpDist::Kind::Atom)
        add("entropy: regime " + std::to_string(j + 1) +
            " needs a single-atom claim law (K recovered from its functional)");
  }
}

}  // namespace

ConfigResult load_config(const std::string& path) {
  ConfigResult result;
  std::ifstream in(path);
  if (!in) {
    result.violations.push_back("config: cannot open " + path);
    return result;
  }
  try {
    in >> result.config;
  } catch (const std::exception& e) {
    result.violations.push_back(std::string("config: parse error: ") + e.what());
    return result;
  }
  validate_config(result.config, &result.violations);
  return result;
}

int run_task(const nlohmann::json& config, const std::string& task,
             const RunOverrides& overrides) {
  if (!is_known_task(task)) throw std::invalid_argument("unknown task: " + task);
  const RunParams rp = run_params(config, overrides);
  if (task == "chain-sim") return task_chain_sim(config, rp, overrides.out);
  if (task == "entropy-solve") return task_entropy_solve(config, rp, overrides.out);
  if (task == "insurance-solve")
    return task_insurance_solve(config, rp, overrides.out);
  if (task == "verify-nash") return task_verify_nash(config, rp, overrides.out);
  return task_bsde_convergence(config, rp, overrides.out);
}

}  // namespace fbsg
