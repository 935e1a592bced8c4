#include "geovmf/head.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "geovmf/errors.hpp"
#include "geovmf/rng.hpp"
#include "geovmf/vmf.hpp"

namespace geovmf {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

namespace {

constexpr double kKappaFloor = 1e-6;
// softplus(x) = 10  =>  x = log(e^10 - 1)
constexpr double kKappaBiasInit = 9.999954599039630;

void check_dims(const HeadDims& d) {
  if (d.feature_dim == 0 || d.hidden == 0 || d.components == 0) {
    throw ArgError("head dims must all be positive");
  }
}

void glorot_fill(Eigen::MatrixXd& w, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      w(r, c) = rng.uniform(-a, a);
    }
  }
}

HeadParams make_shaped(const HeadDims& dims, const FeaturizerConfig& feat) {
  check_dims(dims);
  const auto D = static_cast<Eigen::Index>(dims.feature_dim);
  const auto H = static_cast<Eigen::Index>(dims.hidden);
  const auto out = static_cast<Eigen::Index>(kOutputsPerComponent * dims.components);

  HeadParams p;
  p.dims = dims;
  p.featurizer = feat;
  p.w1 = Eigen::MatrixXd::Zero(H, D);
  p.w2 = Eigen::MatrixXd::Zero(H, H);
  p.w3 = Eigen::MatrixXd::Zero(H, H);
  p.w_out = Eigen::MatrixXd::Zero(out, H);
  p.b1 = Eigen::VectorXd::Zero(H);
  p.b2 = Eigen::VectorXd::Zero(H);
  p.b3 = Eigen::VectorXd::Zero(H);
  p.b_out = Eigen::VectorXd::Zero(out);
  return p;
}

}  // namespace

HeadParams init_head(std::uint64_t seed, const HeadDims& dims, const FeaturizerConfig& feat) {
  validate(feat);
  if (feat.dim != dims.feature_dim) {
    throw ArgError("featurizer dim and head feature_dim disagree");
  }
  HeadParams p = make_shaped(dims, feat);

  Rng rng(seed);
  glorot_fill(p.w1, rng);
  glorot_fill(p.w2, rng);
  glorot_fill(p.w3, rng);
  glorot_fill(p.w_out, rng);
  for (std::uint32_t k = 0; k < dims.components; ++k) {
    p.b_out[kOutputsPerComponent * k + 3] = kKappaBiasInit;
  }
  return p;
}

HeadParams zeros_like(const HeadParams& w) {
  HeadParams g;
  g.dims = w.dims;
  g.featurizer = w.featurizer;
  g.w1 = Eigen::MatrixXd::Zero(w.w1.rows(), w.w1.cols());
  g.w2 = Eigen::MatrixXd::Zero(w.w2.rows(), w.w2.cols());
  g.w3 = Eigen::MatrixXd::Zero(w.w3.rows(), w.w3.cols());
  g.w_out = Eigen::MatrixXd::Zero(w.w_out.rows(), w.w_out.cols());
  g.b1 = Eigen::VectorXd::Zero(w.b1.size());
  g.b2 = Eigen::VectorXd::Zero(w.b2.size());
  g.b3 = Eigen::VectorXd::Zero(w.b3.size());
  g.b_out = Eigen::VectorXd::Zero(w.b_out.size());
  return g;
}

ForwardTrace forward_trace(const FeatureVector& f, const HeadParams& w) {
  if (f.size() != static_cast<Eigen::Index>(w.dims.feature_dim)) {
    throw ArgError("feature vector dim " + std::to_string(f.size()) + " != head feature_dim " +
                   std::to_string(w.dims.feature_dim));
  }
  ForwardTrace t;
  t.input = f;
  t.h1 = (w.w1 * f + w.b1).unaryExpr([](double z) { return sigmoid(z); });
  t.h2 = (w.w2 * t.h1 + w.b2).unaryExpr([](double z) { return sigmoid(z); });
  t.h3 = (w.w3 * t.h2 + w.b3).unaryExpr([](double z) { return sigmoid(z); });
  t.raw = w.w_out * t.h3 + w.b_out;

  const std::uint32_t K = w.dims.components;
  t.mu_raw_norm.resize(K);
  t.kappa_clamped.resize(K);
  t.mixture.components.resize(K);
  t.mixture.rho.resize(K);

  Eigen::VectorXd logits(K);
  for (std::uint32_t k = 0; k < K; ++k) {
    const Eigen::Index base = kOutputsPerComponent * k;
    Vec3 mu_raw{t.raw[base], t.raw[base + 1], t.raw[base + 2]};
    double n = norm(mu_raw);
    if (n < 1e-12) {
      // degenerate direction; nudge deterministically instead of aborting a
      // training step
      t.raw[base] += 1e-6;
      mu_raw.x += 1e-6;
      n = norm(mu_raw);
    }
    t.mu_raw_norm[k] = n;
    const double sp = softplus(t.raw[base + 3]);
    const double kappa = std::clamp(sp, kKappaFloor, kKappaMax);
    t.kappa_clamped[k] = (sp != kappa);
    t.mixture.components[k] = {(1.0 / n) * mu_raw, kappa};
    logits[k] = t.raw[base + 4];
  }
  const double zmax = logits.maxCoeff();
  Eigen::VectorXd ex = (logits.array() - zmax).exp();
  ex /= ex.sum();
  for (std::uint32_t k = 0; k < K; ++k) t.mixture.rho[k] = ex[k];
  return t;
}

VmfMixture forward(const FeatureVector& f, const HeadParams& w) {
  return forward_trace(f, w).mixture;
}

namespace {

// Component log densities at the target.
Eigen::VectorXd component_logliks(const ForwardTrace& t, const Vec3& target) {
  const std::size_t K = t.mixture.size();
  Eigen::VectorXd l(K);
  for (std::size_t k = 0; k < K; ++k) {
    l[static_cast<Eigen::Index>(k)] = log_density(target, t.mixture.components[k]);
  }
  return l;
}

}  // namespace

double trace_loss(const ForwardTrace& t, const Vec3& target, LossKind kind) {
  const Eigen::VectorXd l = component_logliks(t, target);
  const std::size_t K = t.mixture.size();
  if (kind == LossKind::weighted_component) {
    double loss = 0.0;
    for (std::size_t k = 0; k < K; ++k) loss -= t.mixture.rho[k] * l[k];
    return loss;
  }
  Eigen::VectorXd terms(K);
  for (std::size_t k = 0; k < K; ++k) terms[k] = std::log(t.mixture.rho[k]) + l[k];
  const double m = terms.maxCoeff();
  return -(m + std::log((terms.array() - m).exp().sum()));
}

HeadParams backward(const HeadParams& w, const ForwardTrace& t, const Vec3& target,
                    LossKind kind) {
  const std::uint32_t K = w.dims.components;
  const Eigen::VectorXd l = component_logliks(t, target);

  // dL/dl_k and dL/dlogit_k at the output head
  Eigen::VectorXd dl(K);
  Eigen::VectorXd dlogit(K);
  const Eigen::Map<const Eigen::VectorXd> rho(t.mixture.rho.data(), K);
  if (kind == LossKind::mixture_nll) {
    Eigen::VectorXd terms = rho.array().log() + l.array();
    const double m = terms.maxCoeff();
    Eigen::VectorXd resp = (terms.array() - m).exp();
    resp /= resp.sum();  // posterior responsibilities
    dl = -resp;
    dlogit = rho - resp;
  } else {
    dl = -rho;
    const double mean_l = rho.dot(l);
    dlogit = (-rho.array() * (l.array() - mean_l)).matrix();
  }

  Eigen::VectorXd d_raw = Eigen::VectorXd::Zero(t.raw.size());
  for (std::uint32_t k = 0; k < K; ++k) {
    const Eigen::Index base = kOutputsPerComponent * k;
    const VmfComponent& c = t.mixture.components[k];
    const VmfGrad g = grad_log_density(target, c, t.mu_raw_norm[k]);
    d_raw[base] = dl[k] * g.d_mu_raw.x;
    d_raw[base + 1] = dl[k] * g.d_mu_raw.y;
    d_raw[base + 2] = dl[k] * g.d_mu_raw.z;
    const double dsp = t.kappa_clamped[k] ? 0.0 : sigmoid(t.raw[base + 3]);
    d_raw[base + 3] = dl[k] * g.d_kappa * dsp;
    d_raw[base + 4] = dlogit[k];
  }

  HeadParams g = zeros_like(w);
  g.w_out = d_raw * t.h3.transpose();
  g.b_out = d_raw;
  Eigen::VectorXd dz3 =
      (w.w_out.transpose() * d_raw).cwiseProduct(t.h3.cwiseProduct(Eigen::VectorXd::Ones(t.h3.size()) - t.h3));
  g.w3 = dz3 * t.h2.transpose();
  g.b3 = dz3;
  Eigen::VectorXd dz2 =
      (w.w3.transpose() * dz3).cwiseProduct(t.h2.cwiseProduct(Eigen::VectorXd::Ones(t.h2.size()) - t.h2));
  g.w2 = dz2 * t.h1.transpose();
  g.b2 = dz2;
  Eigen::VectorXd dz1 =
      (w.w2.transpose() * dz2).cwiseProduct(t.h1.cwiseProduct(Eigen::VectorXd::Ones(t.h1.size()) - t.h1));
  g.w1 = dz1 * t.input.transpose();
  g.b1 = dz1;
  return g;
}

// ---------------------------------------------------------------------------
// checkpoint serialization

namespace {

constexpr char kMagic[4] = {'G', 'V', 'M', 'F'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double d) { put_u64(buf, std::bit_cast<std::uint64_t>(d)); }

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

template <class M>
void put_array(std::string& buf, const M& m) {
  put_u64(buf, static_cast<std::uint64_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(buf, m(r, c));
  }
}

template <class M>
void read_array(Reader& rd, M& m) {
  const std::uint64_t n = rd.u64();
  if (n != static_cast<std::uint64_t>(m.size())) {
    throw DataError("checkpoint shape mismatch: expected array of " + std::to_string(m.size()) +
                    " values, file has " + std::to_string(n));
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rd.f64();
  }
}

}  // namespace

void save_head(const HeadParams& w, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kFormatVersion);
  put_u32(buf, w.dims.feature_dim);
  put_u32(buf, w.dims.hidden);
  put_u32(buf, w.dims.components);
  put_u32(buf, w.featurizer.dim);
  put_u32(buf, w.featurizer.ngram_min);
  put_u32(buf, w.featurizer.ngram_max);
  buf.push_back(w.featurizer.lowercase ? 1 : 0);
  put_u64(buf, w.featurizer.hash_seed);
  for_each_param(w, [&buf](const auto& arr) { put_array(buf, arr); });

  const auto crc = static_cast<std::uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
  put_u32(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

HeadParams load_head(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < 8 + 4) throw DataError("checkpoint truncated");
  const std::string payload = buf.substr(0, buf.size() - 4);
  Reader tail{buf, buf.size() - 4};
  const std::uint32_t stored_crc = tail.u32();
  const auto crc = static_cast<std::uint32_t>(crc32(
      0, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
  if (crc != stored_crc) throw DataError("checkpoint checksum mismatch (corrupt or truncated)");

  Reader rd{payload, 0};
  rd.need(4);
  if (std::memcmp(payload.data(), kMagic, 4) != 0) throw DataError("not a checkpoint file");
  rd.pos = 4;
  const std::uint32_t version = rd.u32();
  if (version != kFormatVersion) {
    throw DataError("unsupported checkpoint format version " + std::to_string(version) +
                    ", expected " + std::to_string(kFormatVersion));
  }
  HeadDims dims;
  dims.feature_dim = rd.u32();
  dims.hidden = rd.u32();
  dims.components = rd.u32();
  if (dims.feature_dim == 0 || dims.hidden == 0 || dims.components == 0) {
    throw DataError("checkpoint declares zero dims");
  }

  FeaturizerConfig feat;
  feat.dim = rd.u32();
  feat.ngram_min = rd.u32();
  feat.ngram_max = rd.u32();
  rd.need(1);
  feat.lowercase = payload[rd.pos++] != 0;
  feat.hash_seed = rd.u64();

  HeadParams w = make_shaped(dims, feat);
  for_each_param(w, [&rd](auto& arr) { read_array(rd, arr); });
  if (rd.pos != payload.size()) throw DataError("checkpoint has trailing bytes");
  return w;
}

HeadParams load_head(const std::string& path, const HeadDims& expected) {
  HeadParams w = load_head(path);
  const auto& d = w.dims;
  if (d.feature_dim != expected.feature_dim || d.hidden != expected.hidden ||
      d.components != expected.components) {
    throw DataError("checkpoint shape mismatch: expected (D=" + std::to_string(expected.feature_dim) +
                    ", H=" + std::to_string(expected.hidden) +
                    ", K=" + std::to_string(expected.components) + "), file has (D=" +
                    std::to_string(d.feature_dim) + ", H=" + std::to_string(d.hidden) +
                    ", K=" + std::to_string(d.components) + ")");
  }
  return w;
}

}  // namespace geovmf
