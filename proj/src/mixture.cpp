#include "geovmf/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "geovmf/errors.hpp"

namespace geovmf {

void validate(const VmfMixture& m) {
  if (m.components.empty()) throw ArgError("mixture must have K >= 1 components");
  if (m.rho.size() != m.components.size()) {
    throw ArgError("mixture rho/component count mismatch");
  }
  double sum = 0.0;
  for (double r : m.rho) {
    if (!std::isfinite(r) || r < 0.0) throw ArgError("mixing probabilities must be >= 0");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ArgError("mixing probabilities must sum to 1, got " + std::to_string(sum));
  }
  for (const auto& c : m.components) validate(c);
}

double mixture_log_density(const Vec3& x, const VmfMixture& m) {
  validate(m);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.rho[k] == 0.0) continue;
    const double t = std::log(m.rho[k]) + log_density(x, m.components[k]);
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

double weighted_component_loss(std::span<const Vec3> targets, std::span<const VmfMixture> mixtures) {
  if (targets.size() != mixtures.size()) {
    throw ArgError("weighted_component_loss: targets and mixtures must have equal length");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const VmfMixture& m = mixtures[i];
    validate(m);
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m.rho[k] == 0.0) continue;
      loss -= m.rho[k] * log_density(targets[i], m.components[k]);
    }
  }
  return loss;
}

double mixture_nll(std::span<const Vec3> targets, std::span<const VmfMixture> mixtures) {
  if (targets.size() != mixtures.size()) {
    throw ArgError("mixture_nll: targets and mixtures must have equal length");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    loss -= mixture_log_density(targets[i], mixtures[i]);
  }
  return loss;
}

namespace {

std::size_t pick_component(const VmfMixture& m, PointRule rule, Rng& rng) {
  switch (rule) {
    case PointRule::high_prob: {
      std::size_t best = 0;
      for (std::size_t k = 1; k < m.size(); ++k) {
        if (m.rho[k] > m.rho[best]) best = k;
      }
      return best;
    }
    case PointRule::random_uniform:
      return static_cast<std::size_t>(rng.uniform_u64(m.size()));
    case PointRule::random_weighted: {
      const double u = rng.uniform();
      double cum = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) {
        cum += m.rho[k];
        if (u < cum) return k;
      }
      return m.size() - 1;  // u landed in the 1e-9 slack of sum(rho)
    }
  }
  throw ArgError("unknown point rule");
}

}  // namespace

GeoPoint point_estimate(const VmfMixture& m, PointRule rule, std::uint64_t seed) {
  validate(m);
  Rng rng(seed);
  return cart_to_geo(m.components[pick_component(m, rule, rng)].mu);
}

std::vector<Vec3> sample_mixture(const VmfMixture& m, std::size_t n, std::uint64_t seed) {
  validate(m);
  Rng rng(seed);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick_component(m, PointRule::random_weighted, rng);
    out.push_back(sample_one(m.components[k], rng));
  }
  return out;
}

}  // namespace geovmf
