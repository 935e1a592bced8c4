#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geovmf/vmf.hpp"

namespace geovmf {

// Mixture of K vMF components with mixing probabilities rho (nonnegative,
// summing to 1 within 1e-9).
struct VmfMixture {
  std::vector<VmfComponent> components;
  std::vector<double> rho;

  std::size_t size() const { return components.size(); }
};

void validate(const VmfMixture& m);

// log sum_k rho_k f_k(x), via log-sum-exp.
double mixture_log_density(const Vec3& x, const VmfMixture& m);

// Batch loss: - sum_i sum_k rho_ik * log f(y_i; mu_ik, kappa_ik). The mixing
// weights multiply the component log-likelihoods directly, so by Jensen this
// upper-bounds mixture_nll, with equality when a mixture's components
// coincide.
double weighted_component_loss(std::span<const Vec3> targets, std::span<const VmfMixture> mixtures);

// Proper mixture negative log likelihood: - sum_i mixture_log_density(y_i).
double mixture_nll(std::span<const Vec3> targets, std::span<const VmfMixture> mixtures);

enum class PointRule {
  high_prob,        // mu of the argmax-rho component, ties to the lowest index
  random_uniform,   // mu of a uniformly drawn component
  random_weighted,  // mu of a rho-weighted drawn component
};

GeoPoint point_estimate(const VmfMixture& m, PointRule rule, std::uint64_t seed);

// Ancestral sampling: component by rho, then the component's vMF draw.
std::vector<Vec3> sample_mixture(const VmfMixture& m, std::size_t n, std::uint64_t seed);

}  // namespace geovmf
