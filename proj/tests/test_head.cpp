#include <doctest.h>

#include <cmath>

#include "geovmf/errors.hpp"
#include "geovmf/head.hpp"
#include "geovmf/rng.hpp"
#include "geovmf/vmf.hpp"
#include "tmpdir.hpp"

using namespace geovmf;

namespace {

FeaturizerConfig small_feat(std::uint32_t dim) {
  FeaturizerConfig f;
  f.dim = dim;
  return f;
}

FeatureVector random_features(std::uint32_t dim, std::uint64_t seed) {
  Rng rng(seed);
  FeatureVector f(dim);
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = rng.uniform(-1.0, 1.0);
  return f;
}

bool params_equal(const HeadParams& a, const HeadParams& b) {
  bool equal = true;
  auto cmp = [&equal](const auto& x, const auto& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
      equal = false;
      return;
    }
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (x(r, c) != y(r, c)) equal = false;  // bitwise, not approximate
      }
    }
  };
  cmp(a.w1, b.w1);
  cmp(a.b1, b.b1);
  cmp(a.w2, b.w2);
  cmp(a.b2, b.b2);
  cmp(a.w3, b.w3);
  cmp(a.b3, b.b3);
  cmp(a.w_out, b.w_out);
  cmp(a.b_out, b.b_out);
  return equal;
}

}  // namespace

TEST_CASE("init is seed-deterministic") {
  const HeadDims dims{64, 16, 3};
  const HeadParams a = init_head(7, dims, small_feat(64));
  const HeadParams b = init_head(7, dims, small_feat(64));
  const HeadParams c = init_head(8, dims, small_feat(64));
  CHECK(params_equal(a, b));
  CHECK_FALSE(params_equal(a, c));
}

TEST_CASE("initial concentrations start near 10") {
  const HeadDims dims{256, 256, 5};
  const HeadParams w = init_head(3, dims, small_feat(256));
  for (int trial = 0; trial < 10; ++trial) {
    const VmfMixture m = forward(random_features(256, 100 + trial), w);
    for (const auto& c : m.components) {
      CHECK(c.kappa >= 5.0);
      CHECK(c.kappa <= 20.0);
    }
  }
}

TEST_CASE("forward always emits a valid mixture") {
  const HeadDims dims{32, 8, 5};
  const HeadParams w = init_head(11, dims, small_feat(32));

  // zero input: biases alone determine the output
  const VmfMixture from_zero = forward(FeatureVector::Zero(32), w);
  CHECK_NOTHROW(validate(from_zero));
  double rho_sum = 0.0;
  for (double r : from_zero.rho) rho_sum += r;
  CHECK(rho_sum == doctest::Approx(1.0).epsilon(1e-12));

  for (int trial = 0; trial < 50; ++trial) {
    const VmfMixture m = forward(random_features(32, 500 + trial), w);
    CHECK_NOTHROW(validate(m));
    for (const auto& c : m.components) {
      CHECK(std::abs(norm(c.mu) - 1.0) < 1e-9);
      CHECK(c.kappa > 0.0);
      CHECK(c.kappa <= kKappaMax);
    }
  }
}

TEST_CASE("forward rejects wrong feature dimension") {
  const HeadDims dims{32, 8, 2};
  const HeadParams w = init_head(1, dims, small_feat(32));
  CHECK_THROWS_AS(forward(FeatureVector::Zero(16), w), ArgError);
}

TEST_CASE("forward is locally smooth in its input") {
  const HeadDims dims{32, 8, 3};
  const HeadParams w = init_head(19, dims, small_feat(32));
  FeatureVector f = random_features(32, 77);

  auto flatten = [](const VmfMixture& m) {
    Eigen::VectorXd out(m.size() * 5);
    for (std::size_t k = 0; k < m.size(); ++k) {
      out[5 * k + 0] = m.components[k].mu.x;
      out[5 * k + 1] = m.components[k].mu.y;
      out[5 * k + 2] = m.components[k].mu.z;
      out[5 * k + 3] = m.components[k].kappa;
      out[5 * k + 4] = m.rho[k];
    }
    return out;
  };

  // measured local Lipschitz bound along coordinate 5, then a small step
  const int coord = 5;
  const double probe = 1e-4;
  FeatureVector up = f, dn = f;
  up[coord] += probe;
  dn[coord] -= probe;
  const double lipschitz =
      (flatten(forward(up, w)) - flatten(forward(dn, w))).norm() / (2.0 * probe);

  const double h = 1e-6;
  FeatureVector g = f;
  g[coord] += h;
  const double change = (flatten(forward(g, w)) - flatten(forward(f, w))).norm();
  CHECK(change <= lipschitz * h * 1.05 + 1e-12);
}

TEST_CASE("rho-logit gradients sum to zero") {
  const HeadDims dims{16, 4, 4};
  const HeadParams w = init_head(23, dims, small_feat(16));
  const FeatureVector f = random_features(16, 5);
  const ForwardTrace trace = forward_trace(f, w);
  const Vec3 target = geo_to_cart({35.0, -100.0});
  for (LossKind kind : {LossKind::mixture_nll, LossKind::weighted_component}) {
    const HeadParams g = backward(w, trace, target, kind);
    double sum = 0.0;
    for (std::uint32_t k = 0; k < dims.components; ++k) {
      sum += g.b_out[kOutputsPerComponent * k + 4];
    }
    CHECK(std::abs(sum) < 1e-12);
  }
}

TEST_CASE("mu_raw gradient is tangent when the target sits at mu (K=1)") {
  const HeadDims dims{16, 4, 1};
  const HeadParams w = init_head(29, dims, small_feat(16));
  const FeatureVector f = random_features(16, 6);
  const ForwardTrace trace = forward_trace(f, w);
  const Vec3 mu = trace.mixture.components[0].mu;

  const HeadParams g = backward(w, trace, mu, LossKind::mixture_nll);
  const Vec3 grad{g.b_out[0], g.b_out[1], g.b_out[2]};
  CHECK(std::abs(dot(grad, mu)) < 1e-9);  // normalization removes the radial part
}

TEST_CASE("checkpoint round trip is bit-identical") {
  testutil::TempDir tmp;
  const HeadDims dims{64, 16, 5};
  FeaturizerConfig feat = small_feat(64);
  feat.ngram_min = 2;
  feat.ngram_max = 4;
  feat.hash_seed = 99;
  feat.lowercase = false;
  const HeadParams w = init_head(31, dims, feat);
  const std::string path = tmp.file("model.ckpt");
  save_head(w, path);
  const HeadParams back = load_head(path);
  CHECK(params_equal(w, back));
  CHECK(back.dims.feature_dim == 64);
  CHECK(back.dims.hidden == 16);
  CHECK(back.dims.components == 5);
  CHECK(back.featurizer.ngram_min == 2);
  CHECK(back.featurizer.ngram_max == 4);
  CHECK(back.featurizer.hash_seed == 99);
  CHECK(back.featurizer.lowercase == false);
}

TEST_CASE("checkpoint load with wrong dims names expected and actual") {
  testutil::TempDir tmp;
  const HeadDims dims{64, 16, 2};
  const HeadParams w = init_head(37, dims, small_feat(64));
  const std::string path = tmp.file("model.ckpt");
  save_head(w, path);
  CHECK_THROWS_WITH_AS(load_head(path, HeadDims{128, 16, 2}),
                       doctest::Contains("expected (D=128"), DataError);
  CHECK_NOTHROW(load_head(path, dims));
}

TEST_CASE("checkpoint corruption and truncation fail the checksum") {
  testutil::TempDir tmp;
  const HeadParams w = init_head(41, HeadDims{32, 8, 2}, small_feat(32));
  const std::string path = tmp.file("model.ckpt");
  save_head(w, path);

  std::string bytes = testutil::slurp(path);
  std::string truncated = bytes.substr(0, bytes.size() / 2);
  const std::string trunc_path = tmp.write("trunc.ckpt", truncated);
  CHECK_THROWS_AS(load_head(trunc_path), DataError);

  std::string corrupt = bytes;
  corrupt[bytes.size() / 3] = static_cast<char>(corrupt[bytes.size() / 3] ^ 0x40);
  const std::string corrupt_path = tmp.write("corrupt.ckpt", corrupt);
  CHECK_THROWS_WITH_AS(load_head(corrupt_path), doctest::Contains("checksum"), DataError);

  CHECK_THROWS_AS(load_head(tmp.file("missing.ckpt")), IoError);
  CHECK_THROWS_AS(load_head(tmp.write("junk.ckpt", "not a checkpoint at all, promise")),
                  DataError);
}
