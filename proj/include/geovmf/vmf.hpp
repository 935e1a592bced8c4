#pragma once

#include <cstdint>
#include <vector>

#include "geovmf/rng.hpp"
#include "geovmf/sphere.hpp"

namespace geovmf {

// Concentration cap. exp(kappa * mu.x) overflows well before this naively;
// all density work stays in log-domain and training clamps kappa here.
inline constexpr double kKappaMax = 1e4;

// Below this, log C3 and A3 switch to series whose dropped term is < 1e-12.
inline constexpr double kKappaSeriesThreshold = 1e-4;

// von Mises-Fisher component on S^2: unit mean direction and concentration.
// kappa = 0 is the uniform distribution over the sphere.
struct VmfComponent {
  Vec3 mu{0.0, 0.0, 1.0};
  double kappa = 0.0;
};

void validate(const VmfComponent& c);

// log C3(kappa) with C3(kappa) = kappa / (4 pi sinh kappa), the p=3 closed
// form of the vMF normalizer. Stable for kappa in [0, kKappaMax].
double log_norm_const(double kappa);

// log density at unit vector x.
double log_density(const Vec3& x, const VmfComponent& c);

// Mean resultant length A3(kappa) = coth(kappa) - 1/kappa. Also the negative
// derivative of log_norm_const, which is how the gradients use it.
double mean_resultant_length(double kappa);

struct VmfGrad {
  Vec3 d_mu_raw;   // gradient through mu = mu_raw / ||mu_raw||
  double d_kappa;  // -A3(kappa) + mu.x
};

// Gradient of log_density wrt kappa and wrt the pre-normalization vector
// mu_raw whose L2 normalization gives c.mu. mu_raw_norm is ||mu_raw|| at the
// point of evaluation (1 when differentiating at the unit vector itself).
VmfGrad grad_log_density(const Vec3& x, const VmfComponent& c, double mu_raw_norm = 1.0);

// One draw. Exact inverse-CDF construction for p=3; kappa = 0 falls back to
// uniform sphere sampling.
Vec3 sample_one(const VmfComponent& c, Rng& rng);

// n i.i.d. draws, deterministic given seed.
std::vector<Vec3> sample(const VmfComponent& c, std::size_t n, std::uint64_t seed);

// Two unit vectors completing mu to an orthonormal frame. Deterministic.
void orthonormal_frame(const Vec3& mu, Vec3& e1, Vec3& e2);

}  // namespace geovmf
