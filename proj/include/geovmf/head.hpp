#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "geovmf/features.hpp"
#include "geovmf/mixture.hpp"

namespace geovmf {

struct HeadDims {
  std::uint32_t feature_dim = 4096;  // D
  std::uint32_t hidden = 256;        // H
  std::uint32_t components = 5;      // K
};

// Raw outputs per component: 3 for mu_raw, 1 for kappa, 1 for the rho logit.
inline constexpr int kOutputsPerComponent = 5;

// All trainable weights: three sigmoid hidden layers and the output layer
// that emits mixture parameters. Also used as the container for gradients and
// Adam moments, which share the shapes.
struct HeadParams {
  HeadDims dims;
  FeaturizerConfig featurizer;
  Eigen::MatrixXd w1, w2, w3, w_out;
  Eigen::VectorXd b1, b2, b3, b_out;
};

// Visits the arrays in their declared (and serialized) order.
template <class P, class F>
void for_each_param(P& p, F&& f) {
  f(p.w1);
  f(p.b1);
  f(p.w2);
  f(p.b2);
  f(p.w3);
  f(p.b3);
  f(p.w_out);
  f(p.b_out);
}

// Glorot-uniform weights, zero biases except the kappa output biases, which
// start the concentrations near 10 to avoid the flat plateau around the
// uniform distribution.
HeadParams init_head(std::uint64_t seed, const HeadDims& dims, const FeaturizerConfig& feat);

HeadParams zeros_like(const HeadParams& w);

struct ForwardTrace {
  Eigen::VectorXd input;
  Eigen::VectorXd h1, h2, h3;        // sigmoid activations
  Eigen::VectorXd raw;               // output pre-activations (after the degenerate-mu guard)
  std::vector<double> mu_raw_norm;   // per component
  std::vector<bool> kappa_clamped;   // softplus output hit the clamp
  VmfMixture mixture;
};

VmfMixture forward(const FeatureVector& f, const HeadParams& w);
ForwardTrace forward_trace(const FeatureVector& f, const HeadParams& w);

enum class LossKind { mixture_nll, weighted_component };

// Per-observation loss of the traced forward pass against a unit target.
double trace_loss(const ForwardTrace& t, const Vec3& target, LossKind kind);

// Exact gradient of trace_loss wrt every parameter. The chain rule runs
// through softmax, clamped softplus (zero gradient when clamped), the L2
// normalization of mu_raw, and the sigmoid stack.
HeadParams backward(const HeadParams& w, const ForwardTrace& t, const Vec3& target,
                    LossKind kind);

// Checkpoint: magic, format version, dims and featurizer config, float64
// arrays little-endian in declared order, trailing CRC-32.
void save_head(const HeadParams& w, const std::string& path);
HeadParams load_head(const std::string& path);
HeadParams load_head(const std::string& path, const HeadDims& expected);

double sigmoid(double x);
double softplus(double x);

}  // namespace geovmf
