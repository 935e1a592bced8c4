#include "geovmf/vmf.hpp"

#include <cmath>
#include <string>

#include "geovmf/errors.hpp"

namespace geovmf {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLog4Pi = 2.5310242469692907930;
}  // namespace

void validate(const VmfComponent& c) {
  if (!std::isfinite(c.kappa) || c.kappa < 0.0 || c.kappa > kKappaMax) {
    throw ArgError("vMF kappa must be finite in [0, " + std::to_string(kKappaMax) +
                   "], got " + std::to_string(c.kappa));
  }
  const double n = norm(c.mu);
  if (std::abs(n - 1.0) > 1e-9) {
    throw ArgError("vMF mu must be a unit vector, got norm " + std::to_string(n));
  }
}

double log_norm_const(double kappa) {
  if (!std::isfinite(kappa) || kappa < 0.0) {
    throw ArgError("log_norm_const: kappa must be finite and >= 0");
  }
  if (kappa > kKappaMax) {
    throw ArgError("log_norm_const: kappa exceeds kKappaMax");
  }
  if (kappa < kKappaSeriesThreshold) {
    // log C3 = -log(4 pi) - kappa^2/6 + O(kappa^4)
    return -kLog4Pi - kappa * kappa / 6.0;
  }
  // C3 = kappa / (4 pi sinh kappa) = kappa / (2 pi e^kappa (1 - e^{-2 kappa}))
  return std::log(kappa) - kLog2Pi - kappa - std::log1p(-std::exp(-2.0 * kappa));
}

double log_density(const Vec3& x, const VmfComponent& c) {
  validate(c);
  const double nx = norm(x);
  if (std::abs(nx - 1.0) > 1e-9) {
    throw ArgError("log_density: x must be a unit vector");
  }
  return log_norm_const(c.kappa) + c.kappa * dot(c.mu, x);
}

double mean_resultant_length(double kappa) {
  if (!std::isfinite(kappa) || kappa < 0.0) {
    throw ArgError("mean_resultant_length: kappa must be finite and >= 0");
  }
  if (kappa < 1e-3) {
    const double k2 = kappa * kappa;
    return kappa / 3.0 - kappa * k2 / 45.0;
  }
  // coth(k) = 1 - 2(e^{-2k}) / (e^{-2k} - 1), via expm1 so large k is exact
  const double em = std::expm1(-2.0 * kappa);  // e^{-2k} - 1, in (-1, 0)
  const double coth = 1.0 - 2.0 * (em + 1.0) / em;
  return coth - 1.0 / kappa;
}

VmfGrad grad_log_density(const Vec3& x, const VmfComponent& c, double mu_raw_norm) {
  validate(c);
  if (!(mu_raw_norm > 0.0) || !std::isfinite(mu_raw_norm)) {
    throw ArgError("grad_log_density: mu_raw_norm must be positive and finite");
  }
  const double md = dot(c.mu, x);
  const double d_kappa = -mean_resultant_length(c.kappa) + md;
  // d(kappa mu.x)/d mu_raw = kappa (I - mu mu^T) x / ||mu_raw||
  const Vec3 tangent = x - md * c.mu;
  return {(c.kappa / mu_raw_norm) * tangent, d_kappa};
}

void orthonormal_frame(const Vec3& mu, Vec3& e1, Vec3& e2) {
  // pick the axis least aligned with mu, Gram-Schmidt it
  Vec3 a = std::abs(mu.x) <= std::abs(mu.y)
               ? (std::abs(mu.x) <= std::abs(mu.z) ? Vec3{1, 0, 0} : Vec3{0, 0, 1})
               : (std::abs(mu.y) <= std::abs(mu.z) ? Vec3{0, 1, 0} : Vec3{0, 0, 1});
  Vec3 u = a - dot(a, mu) * mu;
  e1 = (1.0 / norm(u)) * u;
  e2 = cross(mu, e1);
}

Vec3 sample_one(const VmfComponent& c, Rng& rng) {
  const double u = rng.uniform();
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  if (c.kappa < 1e-12) {
    const double z = 2.0 * u - 1.0;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }
  // Inverse CDF of w = cos(angle to mu):  w = 1 + log(u + (1-u) e^{-2k}) / k,
  // written with log1p/expm1 so small kappa stays exact.
  const double w =
      1.0 + std::log1p((1.0 - u) * std::expm1(-2.0 * c.kappa)) / c.kappa;
  const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
  Vec3 e1, e2;
  orthonormal_frame(c.mu, e1, e2);
  return w * c.mu + (r * std::cos(phi)) * e1 + (r * std::sin(phi)) * e2;
}

std::vector<Vec3> sample(const VmfComponent& c, std::size_t n, std::uint64_t seed) {
  validate(c);
  if (n < 1) throw ArgError("sample: n must be >= 1");
  Rng rng(seed);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(c, rng));
  return out;
}

}  // namespace geovmf
