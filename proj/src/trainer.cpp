#include "geovmf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "geovmf/errors.hpp"
#include "geovmf/rng.hpp"

namespace geovmf {

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ArgError("learning_rate must be positive");
  }
  if (cfg.epochs == 0 || cfg.batch_size == 0) throw ArgError("epochs and batch_size must be positive");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) {
    throw ArgError("adam betas must lie in (0, 1)");
  }
  if (!(cfg.eps > 0.0)) throw ArgError("adam eps must be positive");
}

AdamState make_adam_state(const HeadParams& w) {
  return AdamState{zeros_like(w), zeros_like(w), 0};
}

namespace {

bool all_finite(const HeadParams& p) {
  bool ok = true;
  for_each_param(p, [&ok](const auto& arr) {
    if (!arr.allFinite()) ok = false;
  });
  return ok;
}

}  // namespace

bool adam_step(HeadParams& params, const HeadParams& grads, AdamState& state,
               const TrainConfig& cfg) {
  validate(cfg);
  if (!all_finite(grads)) return false;

  const std::int64_t t = state.t + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

  auto update = [&](auto& th, const auto& g, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    th.array() -= cfg.learning_rate * (m.array() / bc1) /
                  ((v.array() / bc2).sqrt() + cfg.eps);
  };
  update(params.w1, grads.w1, state.m.w1, state.v.w1);
  update(params.b1, grads.b1, state.m.b1, state.v.b1);
  update(params.w2, grads.w2, state.m.w2, state.v.w2);
  update(params.b2, grads.b2, state.m.b2, state.v.b2);
  update(params.w3, grads.w3, state.m.w3, state.v.w3);
  update(params.b3, grads.b3, state.m.b3, state.v.b3);
  update(params.w_out, grads.w_out, state.m.w_out, state.v.w_out);
  update(params.b_out, grads.b_out, state.m.b_out, state.v.b_out);
  state.t = t;
  return true;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ValMetrics {
  double mean_km;
  double median_km;
};

ValMetrics validation_metrics(const Dataset& val, const HeadParams& params) {
  if (val.records.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan};
  }
  std::vector<double> errs;
  errs.reserve(val.size());
  for (const auto& r : val.records) {
    const FeatureVector f = featurize(r.text, params.featurizer);
    const VmfMixture m = forward(f, params);
    const GeoPoint pred = point_estimate(m, PointRule::high_prob, 0);
    errs.push_back(haversine_km(pred, r.gold()));
  }
  const double mean = std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
  return {mean, median_of(std::move(errs))};
}

void accumulate(HeadParams& acc, const HeadParams& g) {
  acc.w1 += g.w1;
  acc.b1 += g.b1;
  acc.w2 += g.w2;
  acc.b2 += g.b2;
  acc.w3 += g.w3;
  acc.b3 += g.b3;
  acc.w_out += g.w_out;
  acc.b_out += g.b_out;
}

void scale(HeadParams& acc, double s) {
  for_each_param(acc, [s](auto& arr) { arr *= s; });
}

}  // namespace

std::pair<HeadParams, TrainHistory> train(const Dataset& train_set, const Dataset& val_set,
                                          const TrainConfig& cfg, const HeadDims& dims,
                                          const FeaturizerConfig& feat,
                                          const EpochCallback& on_epoch) {
  validate(cfg);
  if (train_set.records.empty()) throw ArgError("training set is empty");

  HeadParams params = init_head(cfg.seed, dims, feat);
  AdamState state = make_adam_state(params);
  TrainHistory history;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      Rng rng(derive_seed(cfg.seed, epoch));
      rng.shuffle(order);
    }

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto batch_n = static_cast<double>(end - start);

      HeadParams grad = zeros_like(params);
      double batch_nll = 0.0;
      double batch_weighted = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const GeoTextRecord& r = train_set.records[order[i]];
        const FeatureVector f = featurize(r.text, params.featurizer);
        const ForwardTrace trace = forward_trace(f, params);
        const Vec3 target = geo_to_cart(r.gold());
        batch_nll += trace_loss(trace, target, LossKind::mixture_nll);
        batch_weighted += trace_loss(trace, target, LossKind::weighted_component);
        accumulate(grad, backward(params, trace, target, cfg.loss));
      }
      // Jensen sanity: the weighted component loss upper-bounds the proper NLL
      if (batch_weighted < batch_nll - 1e-10 * std::max(1.0, std::abs(batch_nll))) {
        throw NumericError("loss ordering violated: weighted_component < mixture_nll on a batch");
      }
      scale(grad, 1.0 / batch_n);

      loss_sum += (cfg.loss == LossKind::mixture_nll) ? batch_nll : batch_weighted;
      loss_count += end - start;

      if (!adam_step(params, grad, state, cfg)) {
        ++history.skipped_batches;
        continue;
      }
      if (!all_finite(params)) {
        throw NumericError("parameters became non-finite during training");
      }
    }

    EpochStats stats;
    stats.mean_loss = loss_sum / static_cast<double>(loss_count);
    const ValMetrics vm = validation_metrics(val_set, params);
    stats.val_mean_km = vm.mean_km;
    stats.val_median_km = vm.median_km;
    history.epochs.push_back(stats);
    if (on_epoch) on_epoch(epoch, stats);
  }
  return {std::move(params), std::move(history)};
}

void write_history_tsv(const TrainHistory& h, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open history file for writing: " + path);
  char buf[160];
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    const EpochStats& e = h.epochs[i];
    std::snprintf(buf, sizeof(buf), "%zu\t%.17g\t%.17g\t%.17g\n", i + 1, e.mean_loss,
                  e.val_mean_km, e.val_median_km);
    out << buf;
  }
  if (!out) throw IoError("failed writing history file: " + path);
}

GradCheckReport grad_check(const HeadDims& dims, std::size_t n_cases, std::uint64_t seed,
                           double tol, LossKind loss) {
  GradCheckReport report;
  report.cases = n_cases;
  if (n_cases == 0) {
    report.pass = true;  // vacuous
    return report;
  }

  const double h = 1e-5;
  // Relative error with a floor: below the floor the finite-difference noise
  // (~1e-9 absolute) dominates and says nothing about the analytic gradient.
  const double floor = 1e-4;
  double max_rel = 0.0;

  FeaturizerConfig feat;
  feat.dim = dims.feature_dim;

  for (std::size_t cs = 0; cs < n_cases; ++cs) {
    const std::uint64_t case_seed = derive_seed(seed, cs + 1);
    Rng rng(case_seed);

    HeadParams params = init_head(case_seed, dims, feat);
    // break rho/kappa symmetry so the case is not a special point
    for (Eigen::Index i = 0; i < params.b_out.size(); ++i) {
      params.b_out[i] += rng.uniform(-0.5, 0.5);
    }

    FeatureVector f(dims.feature_dim);
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = rng.uniform(-1.0, 1.0);

    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 target{rr * std::cos(phi), rr * std::sin(phi), z};

    const ForwardTrace trace = forward_trace(f, params);
    const HeadParams analytic = backward(params, trace, target, loss);

    auto probe = [&](Eigen::MatrixXd& arr, const Eigen::MatrixXd& ga) {
      for (Eigen::Index r = 0; r < arr.rows(); ++r) {
        for (Eigen::Index c = 0; c < arr.cols(); ++c) {
          const double orig = arr(r, c);
          arr(r, c) = orig + h;
          const double up = trace_loss(forward_trace(f, params), target, loss);
          arr(r, c) = orig - h;
          const double dn = trace_loss(forward_trace(f, params), target, loss);
          arr(r, c) = orig;
          const double numeric = (up - dn) / (2.0 * h);
          const double a = ga(r, c);
          const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
          max_rel = std::max(max_rel, rel);
        }
      }
    };
    auto probe_vec = [&](Eigen::VectorXd& arr, const Eigen::VectorXd& ga) {
      for (Eigen::Index i = 0; i < arr.size(); ++i) {
        const double orig = arr[i];
        arr[i] = orig + h;
        const double up = trace_loss(forward_trace(f, params), target, loss);
        arr[i] = orig - h;
        const double dn = trace_loss(forward_trace(f, params), target, loss);
        arr[i] = orig;
        const double numeric = (up - dn) / (2.0 * h);
        const double a = ga[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        max_rel = std::max(max_rel, rel);
      }
    };
    probe(params.w1, analytic.w1);
    probe_vec(params.b1, analytic.b1);
    probe(params.w2, analytic.w2);
    probe_vec(params.b2, analytic.b2);
    probe(params.w3, analytic.w3);
    probe_vec(params.b3, analytic.b3);
    probe(params.w_out, analytic.w_out);
    probe_vec(params.b_out, analytic.b_out);
  }

  report.max_rel_err = max_rel;
  report.pass = max_rel < tol;
  return report;
}

}  // namespace geovmf
