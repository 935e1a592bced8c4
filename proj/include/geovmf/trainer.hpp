#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "geovmf/dataset.hpp"
#include "geovmf/head.hpp"

namespace geovmf {

struct TrainConfig {
  double learning_rate = 5e-5;
  std::uint32_t epochs = 5;
  std::uint32_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  LossKind loss = LossKind::mixture_nll;
  std::uint64_t seed = 42;
  bool shuffle = true;
};

void validate(const TrainConfig& cfg);

struct EpochStats {
  double mean_loss = 0.0;
  double val_mean_km = 0.0;
  double val_median_km = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::uint64_t skipped_batches = 0;  // non-finite gradient events
};

// Adam first/second moments share the parameter shapes.
struct AdamState {
  HeadParams m;
  HeadParams v;
  std::int64_t t = 0;
};

AdamState make_adam_state(const HeadParams& w);

// One bias-corrected Adam update. Returns false (and leaves params and t
// untouched) when the gradient contains a non-finite value.
bool adam_step(HeadParams& params, const HeadParams& grads, AdamState& state,
               const TrainConfig& cfg);

using EpochCallback = std::function<void(std::uint32_t epoch, const EpochStats&)>;

// Minibatch training of the selected loss. Deterministic given (seed, config,
// data): init, shuffle order and batch summation order are all fixed.
// Validation metrics are the highProb point-estimate errors in km.
std::pair<HeadParams, TrainHistory> train(const Dataset& train_set, const Dataset& val_set,
                                          const TrainConfig& cfg, const HeadDims& dims,
                                          const FeaturizerConfig& feat,
                                          const EpochCallback& on_epoch = nullptr);

// One line per epoch: epoch, mean_loss, val_mean_km, val_median_km.
void write_history_tsv(const TrainHistory& h, const std::string& path);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t cases = 0;
  bool pass = false;
};

// Central finite differences over every parameter of a small head against
// backward(). n_cases = 0 passes vacuously.
GradCheckReport grad_check(const HeadDims& dims, std::size_t n_cases, std::uint64_t seed,
                           double tol, LossKind loss);

}  // namespace geovmf
