#include "fbsg/drivers.hpp"

#include <algorithm>
#include <cmath>

#include "fbsg/quadrature.hpp"
#include "fbsg/rng.hpp"

namespace fbsg {

JumpDist JumpDist::exponential(double rate) {
  if (rate <= 0.0) throw std::invalid_argument("exponential jump size: rate <= 0");
  JumpDist d;
  d.kind_ = Kind::Exponential;
  d.rate_ = rate;
  return d;
}

JumpDist JumpDist::atom(double size) {
  JumpDist d;
  d.kind_ = Kind::Atom;
  d.atoms_ = {{size, 1.0}};
  return d;
}

JumpDist JumpDist::discrete(std::vector<std::pair<double, double>> size_weight) {
  double total = 0.0;
  for (const auto& [z, w] : size_weight) {
    if (w < 0.0) throw std::invalid_argument("discrete jump size: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("discrete jump size: weights do not sum to 1");
  JumpDist d;
  d.kind_ = Kind::Discrete;
  d.atoms_ = std::move(size_weight);
  return d;
}

double JumpDist::sample(std::mt19937_64& rng) const {
  switch (kind_) {
    case Kind::Exponential: {
      std::exponential_distribution<double> e(rate_);
      return e(rng);
    }
    case Kind::Atom:
      return atoms_[0].first;
    case Kind::Discrete: {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      double u = unif(rng);
      for (const auto& [z, w] : atoms_) {
        u -= w;
        if (u <= 0.0) return z;
      }
      return atoms_.back().first;
    }
  }
  return 0.0;
}

double JumpDist::integrate(const std::function<double(double)>& phi,
                           double rel_tol) const {
  switch (kind_) {
    case Kind::Exponential: {
      const double rate = rate_;
      return integrate_half_line(
          [&phi, rate](double z) { return phi(z) * rate * std::exp(-rate * z); },
          rel_tol);
    }
    case Kind::Atom:
      return phi(atoms_[0].first);
    case Kind::Discrete: {
      double s = 0.0;
      for (const auto& [z, w] : atoms_) s += w * phi(z);
      return s;
    }
  }
  return 0.0;
}

double JumpDist::mean() const {
  if (kind_ == Kind::Exponential) return 1.0 / rate_;
  double s = 0.0;
  for (const auto& [z, w] : atoms_) s += w * z;
  return s;
}

double JumpDist::exp_moment_minus_one(double b) const {
  if (kind_ == Kind::Exponential) {
    if (b >= rate_)
      throw std::domain_error("exp moment diverges: exponent >= claim rate");
    // int (e^{bz}-1) rate e^{-rate z} dz = b / (rate - b)
    return b / (rate_ - b);
  }
  double s = 0.0;
  for (const auto& [z, w] : atoms_) s += w * (std::exp(b * z) - 1.0);
  return s;
}

std::string RegimeLevyMeasure::validate() const {
  if (intensity.size() != dist.size()) return "intensity/distribution count mismatch";
  for (std::size_t j = 0; j < intensity.size(); ++j) {
    if (!(intensity[j] >= 0.0) || !std::isfinite(intensity[j]))
      return "jump intensity must be finite and nonnegative";
  }
  return {};
}

NoiseBundle sample_noise(const TimeGrid& grid, const ChainPath& chain,
                         const RegimeLevyMeasure& levy, std::uint64_t seed) {
  if (levy.dim() != chain.dim())
    throw std::invalid_argument("sample_noise: levy dimension mismatch");
  const std::string bad = levy.validate();
  if (!bad.empty()) throw std::invalid_argument("sample_noise: " + bad);

  NoiseBundle noise;
  noise.chain = &chain;

  std::mt19937_64 rng_b = path_rng(seed, 0, /*stream=*/1);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqrt_dt = std::sqrt(grid.dt());
  noise.brownian_increments.resize(grid.steps());
  for (int i = 0; i < grid.steps(); ++i)
    noise.brownian_increments[i] = sqrt_dt * normal(rng_b);

  // Conditional Poisson process: intensity is piecewise constant between
  // chain jumps, so draw per constant-regime segment.
  std::mt19937_64 rng_j = path_rng(seed, 0, /*stream=*/2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double seg_start = 0.0;
  int state = chain.regime[0];
  auto emit_segment = [&](double a, double b, int regime) {
    const double lam = levy.intensity[static_cast<std::size_t>(regime)];
    if (lam <= 0.0 || b <= a) return;
    std::poisson_distribution<int> pois(lam * (b - a));
    const int count = pois(rng_j);
    std::vector<double> times(static_cast<std::size_t>(count));
    for (auto& t : times) t = a + (b - a) * unif(rng_j);
    std::sort(times.begin(), times.end());
    for (double t : times) {
      const double z = levy.dist[static_cast<std::size_t>(regime)].sample(rng_j);
      noise.jumps.push_back({t, z, regime});
    }
  };
  for (const auto& jump : chain.jumps) {
    emit_segment(seg_start, jump.time, state);
    seg_start = jump.time;
    state = jump.to;
  }
  emit_segment(seg_start, grid.horizon(), state);
  return noise;
}

double compensator_integral(const RegimeLevyMeasure& levy, const ChainPath& chain,
                            const std::function<double(double)>& phi, double t) {
  if (levy.dim() != chain.dim())
    throw std::invalid_argument("compensator_integral: dimension mismatch");
  const Eigen::VectorXd occ = chain.occupation_at(t);
  double total = 0.0;
  for (int j = 0; j < levy.dim(); ++j) {
    const double lam = levy.intensity[static_cast<std::size_t>(j)];
    if (lam == 0.0 || occ[j] == 0.0) continue;
    total += lam * occ[j] * levy.dist[static_cast<std::size_t>(j)].integrate(phi);
  }
  return total;
}

}  // namespace fbsg
