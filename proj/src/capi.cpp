#include "geovmf.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "geovmf/dataset.hpp"
#include "geovmf/density.hpp"
#include "geovmf/errors.hpp"
#include "geovmf/eval.hpp"
#include "geovmf/fetch.hpp"
#include "geovmf/head.hpp"
#include "geovmf/mixture.hpp"
#include "geovmf/rng.hpp"
#include "geovmf/trainer.hpp"

namespace {

thread_local std::string g_last_error;

geovmf_status fail(geovmf_status code, const char* what) {
  g_last_error = what ? what : "";
  return code;
}

// Runs the body, translating exceptions into status codes.
template <typename Fn>
geovmf_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GEOVMF_OK;
  } catch (const geovmf::ArgError& e) {
    return fail(GEOVMF_E_ARG, e.what());
  } catch (const geovmf::DataError& e) {
    return fail(GEOVMF_E_DATA, e.what());
  } catch (const geovmf::IoError& e) {
    return fail(GEOVMF_E_IO, e.what());
  } catch (const geovmf::NumericError& e) {
    return fail(GEOVMF_E_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(GEOVMF_E_NUMERIC, "out of memory");
  } catch (const std::exception& e) {
    return fail(GEOVMF_E_DATA, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

geovmf::PointRule to_point_rule(int rule) {
  switch (rule) {
    case 0: return geovmf::PointRule::high_prob;
    case 1: return geovmf::PointRule::random_uniform;
    case 2: return geovmf::PointRule::random_weighted;
    default: throw geovmf::ArgError("point rule must be 0 (highProb), 1 (random) or 2 (weighted)");
  }
}

}  // namespace

struct geovmf_model {
  geovmf::HeadParams params;
};

struct geovmf_mixture {
  geovmf::VmfMixture mixture;
};

extern "C" {

const char* geovmf_version(void) { return "1.0.0"; }

const char* geovmf_last_error(void) { return g_last_error.c_str(); }

void geovmf_string_free(char* s) { delete[] s; }

geovmf_status geovmf_haversine_km(double lat1, double lon1, double lat2, double lon2,
                                  double* out_km) {
  if (!out_km) return fail(GEOVMF_E_ARG, "out_km is null");
  return guarded([&] { *out_km = geovmf::haversine_km({lat1, lon1}, {lat2, lon2}); });
}

geovmf_status geovmf_validate_corpus(const char* in_jsonl, const char* out_jsonl, int lenient,
                                     uint64_t* out_kept, uint64_t* out_skipped) {
  if (!in_jsonl) return fail(GEOVMF_E_ARG, "in_jsonl is null");
  return guarded([&] {
    geovmf::ParseStats stats;
    const geovmf::Dataset d = geovmf::parse_jsonl(
        in_jsonl, lenient ? geovmf::ParseMode::lenient : geovmf::ParseMode::strict, &stats);
    if (out_jsonl && *out_jsonl) geovmf::write_jsonl(d, out_jsonl);
    if (out_kept) *out_kept = stats.kept;
    if (out_skipped) *out_skipped = stats.skipped;
  });
}

geovmf_status geovmf_split_corpus(const char* in_jsonl, double f_train, double f_val,
                                  double f_test, uint64_t seed, const char* out_train,
                                  const char* out_val, const char* out_test) {
  if (!in_jsonl || !out_train || !out_val || !out_test) {
    return fail(GEOVMF_E_ARG, "split: null path");
  }
  return guarded([&] {
    const geovmf::Dataset d = geovmf::parse_jsonl(in_jsonl);
    const geovmf::SplitResult r = geovmf::split(d, {f_train, f_val, f_test}, seed);
    geovmf::write_jsonl(r.train, out_train);
    geovmf::write_jsonl(r.val, out_val);
    geovmf::write_jsonl(r.test, out_test);
  });
}

geovmf_status geovmf_fetch_articles(const char* endpoint, uint64_t limit, double rate_per_sec,
                                    const char* cursor_path, const char* out_jsonl,
                                    uint64_t* out_fetched, uint64_t* out_skipped,
                                    uint64_t* out_retries) {
  if (!endpoint || !out_jsonl) return fail(GEOVMF_E_ARG, "fetch: null endpoint or output path");
  return guarded([&] {
    geovmf::FetchOptions opts;
    opts.endpoint = endpoint;
    opts.limit = limit;
    opts.rate_per_sec = rate_per_sec;
    if (cursor_path) opts.cursor_path = cursor_path;
    geovmf::FetchStats stats;
    const geovmf::Dataset d = geovmf::fetch_geo_articles(opts, &stats);
    geovmf::write_jsonl(d, out_jsonl);
    if (out_fetched) *out_fetched = stats.fetched;
    if (out_skipped) *out_skipped = stats.skipped;
    if (out_retries) *out_retries = stats.retries;
  });
}

void geovmf_train_options_init(geovmf_train_options* opts) {
  if (!opts) return;
  opts->learning_rate = 5e-5;
  opts->epochs = 5;
  opts->batch_size = 32;
  opts->beta1 = 0.9;
  opts->beta2 = 0.999;
  opts->eps = 1e-8;
  opts->loss = 0;
  opts->seed = 42;
  opts->shuffle = 1;
  opts->feature_dim = 4096;
  opts->hidden_dim = 256;
  opts->components = 5;
  opts->ngram_min = 3;
  opts->ngram_max = 5;
  opts->lowercase = 1;
  opts->hash_seed = 0;
}

namespace {

geovmf::LossKind to_loss_kind(int loss) {
  switch (loss) {
    case 0: return geovmf::LossKind::mixture_nll;
    case 1: return geovmf::LossKind::weighted_component;
    default: throw geovmf::ArgError("loss must be 0 (mixture NLL) or 1 (weighted component)");
  }
}

}  // namespace

geovmf_status geovmf_train_file(const char* train_jsonl, const char* val_jsonl,
                                const geovmf_train_options* opts, const char* ckpt_out,
                                const char* history_tsv_out) {
  if (!train_jsonl || !opts || !ckpt_out) return fail(GEOVMF_E_ARG, "train: null argument");
  return guarded([&] {
    geovmf::TrainConfig cfg;
    cfg.learning_rate = opts->learning_rate;
    cfg.epochs = opts->epochs;
    cfg.batch_size = opts->batch_size;
    cfg.beta1 = opts->beta1;
    cfg.beta2 = opts->beta2;
    cfg.eps = opts->eps;
    cfg.loss = to_loss_kind(opts->loss);
    cfg.seed = opts->seed;
    cfg.shuffle = opts->shuffle != 0;

    geovmf::HeadDims dims{opts->feature_dim, opts->hidden_dim, opts->components};
    geovmf::FeaturizerConfig feat;
    feat.dim = opts->feature_dim;
    feat.ngram_min = opts->ngram_min;
    feat.ngram_max = opts->ngram_max;
    feat.lowercase = opts->lowercase != 0;
    feat.hash_seed = opts->hash_seed;

    const geovmf::Dataset train_set = geovmf::parse_jsonl(train_jsonl);
    geovmf::Dataset val_set;
    if (val_jsonl && *val_jsonl) val_set = geovmf::parse_jsonl(val_jsonl);

    auto [params, history] = geovmf::train(train_set, val_set, cfg, dims, feat);
    geovmf::save_head(params, ckpt_out);
    if (history_tsv_out && *history_tsv_out) geovmf::write_history_tsv(history, history_tsv_out);
  });
}

geovmf_status geovmf_grad_check(uint32_t feature_dim, uint32_t hidden_dim, uint32_t components,
                                uint32_t n_cases, uint64_t seed, double tol, int loss,
                                double* out_max_rel_err, int* out_pass) {
  return guarded([&] {
    const geovmf::HeadDims dims{feature_dim, hidden_dim, components};
    double max_rel = 0.0;
    bool pass = true;
    if (loss == 2) {
      const auto a = geovmf::grad_check(dims, n_cases, seed, tol, geovmf::LossKind::mixture_nll);
      const auto b = geovmf::grad_check(dims, n_cases, seed, tol, geovmf::LossKind::weighted_component);
      max_rel = std::max(a.max_rel_err, b.max_rel_err);
      pass = a.pass && b.pass;
    } else {
      const auto r = geovmf::grad_check(dims, n_cases, seed, tol, to_loss_kind(loss));
      max_rel = r.max_rel_err;
      pass = r.pass;
    }
    if (out_max_rel_err) *out_max_rel_err = max_rel;
    if (out_pass) *out_pass = pass ? 1 : 0;
  });
}

geovmf_status geovmf_model_load(const char* ckpt_path, geovmf_model** out) {
  if (!ckpt_path || !out) return fail(GEOVMF_E_ARG, "model_load: null argument");
  return guarded([&] { *out = new geovmf_model{geovmf::load_head(ckpt_path)}; });
}

void geovmf_model_free(geovmf_model* model) { delete model; }

geovmf_status geovmf_model_dims(const geovmf_model* model, uint32_t* feature_dim,
                                uint32_t* hidden_dim, uint32_t* components) {
  if (!model) return fail(GEOVMF_E_ARG, "model is null");
  if (feature_dim) *feature_dim = model->params.dims.feature_dim;
  if (hidden_dim) *hidden_dim = model->params.dims.hidden;
  if (components) *components = model->params.dims.components;
  g_last_error.clear();
  return GEOVMF_OK;
}

geovmf_status geovmf_model_predict(const geovmf_model* model, const char* text,
                                   geovmf_mixture** out) {
  if (!model || !text || !out) return fail(GEOVMF_E_ARG, "model_predict: null argument");
  return guarded([&] {
    const geovmf::FeatureVector f = geovmf::featurize(text, model->params.featurizer);
    *out = new geovmf_mixture{geovmf::forward(f, model->params)};
  });
}

geovmf_status geovmf_predict_file(const geovmf_model* model, const char* in_jsonl,
                                  const char* out_jsonl, int point_rule, uint64_t seed) {
  if (!model || !in_jsonl || !out_jsonl) return fail(GEOVMF_E_ARG, "predict_file: null argument");
  return guarded([&] {
    const geovmf::Dataset d = geovmf::parse_jsonl(in_jsonl);
    std::vector<std::pair<std::string, geovmf::VmfMixture>> preds;
    preds.reserve(d.size());
    for (const auto& r : d.records) {
      const geovmf::FeatureVector f = geovmf::featurize(r.text, model->params.featurizer);
      preds.emplace_back(r.id, geovmf::forward(f, model->params));
    }
    std::optional<geovmf::PointRule> rule;
    if (point_rule >= 0) rule = to_point_rule(point_rule);
    geovmf::write_predictions_jsonl(preds, out_jsonl, rule, seed);
  });
}

geovmf_status geovmf_mixture_create(const double* lat, const double* lon, const double* kappa,
                                    const double* rho, uint32_t k, geovmf_mixture** out) {
  if (!lat || !lon || !kappa || !rho || !out) {
    return fail(GEOVMF_E_ARG, "mixture_create: null argument");
  }
  return guarded([&] {
    geovmf::VmfMixture m;
    for (uint32_t i = 0; i < k; ++i) {
      m.components.push_back({geovmf::geo_to_cart({lat[i], lon[i]}), kappa[i]});
      m.rho.push_back(rho[i]);
    }
    geovmf::validate(m);
    *out = new geovmf_mixture{std::move(m)};
  });
}

void geovmf_mixture_free(geovmf_mixture* m) { delete m; }

geovmf_status geovmf_mixture_size(const geovmf_mixture* m, uint32_t* k) {
  if (!m || !k) return fail(GEOVMF_E_ARG, "mixture_size: null argument");
  *k = static_cast<uint32_t>(m->mixture.size());
  g_last_error.clear();
  return GEOVMF_OK;
}

geovmf_status geovmf_mixture_component(const geovmf_mixture* m, uint32_t k, double* lat,
                                       double* lon, double* kappa, double* rho) {
  if (!m) return fail(GEOVMF_E_ARG, "mixture is null");
  if (k >= m->mixture.size()) return fail(GEOVMF_E_ARG, "component index out of range");
  return guarded([&] {
    const geovmf::GeoPoint gp = geovmf::cart_to_geo(m->mixture.components[k].mu);
    if (lat) *lat = gp.lat_deg;
    if (lon) *lon = gp.lon_deg;
    if (kappa) *kappa = m->mixture.components[k].kappa;
    if (rho) *rho = m->mixture.rho[k];
  });
}

geovmf_status geovmf_mixture_log_density(const geovmf_mixture* m, double lat, double lon,
                                         double* out) {
  if (!m || !out) return fail(GEOVMF_E_ARG, "mixture_log_density: null argument");
  return guarded([&] {
    *out = geovmf::mixture_log_density(geovmf::geo_to_cart({lat, lon}), m->mixture);
  });
}

geovmf_status geovmf_mixture_point(const geovmf_mixture* m, int rule, uint64_t seed, double* lat,
                                   double* lon) {
  if (!m || !lat || !lon) return fail(GEOVMF_E_ARG, "mixture_point: null argument");
  return guarded([&] {
    const geovmf::GeoPoint p = geovmf::point_estimate(m->mixture, to_point_rule(rule), seed);
    *lat = p.lat_deg;
    *lon = p.lon_deg;
  });
}

geovmf_status geovmf_mixture_sample(const geovmf_mixture* m, uint64_t n, uint64_t seed,
                                    double* lats, double* lons) {
  if (!m || !lats || !lons) return fail(GEOVMF_E_ARG, "mixture_sample: null argument");
  return guarded([&] {
    const auto draws = geovmf::sample_mixture(m->mixture, n, seed);
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const geovmf::GeoPoint p = geovmf::cart_to_geo(draws[i]);
      lats[i] = p.lat_deg;
      lons[i] = p.lon_deg;
    }
  });
}

geovmf_status geovmf_mixture_contours(const geovmf_mixture* m, const double* levels,
                                      uint32_t n_levels, double coarse_res_deg,
                                      double fine_res_deg, int with_truth, double truth_lat,
                                      double truth_lon, char** out_geojson) {
  if (!m || !levels || n_levels == 0 || !out_geojson) {
    return fail(GEOVMF_E_ARG, "mixture_contours: null argument");
  }
  return guarded([&] {
    const std::vector<double> lv(levels, levels + n_levels);
    const geovmf::DensityGrid grid =
        geovmf::adaptive_density_grid(m->mixture, coarse_res_deg, fine_res_deg);
    const std::vector<double> thresholds = geovmf::hpd_thresholds(grid, lv);
    geovmf::ContourFeatures extras;
    for (const auto& c : m->mixture.components) {
      extras.predicted.push_back(geovmf::cart_to_geo(c.mu));
    }
    if (with_truth) extras.actual = geovmf::GeoPoint{truth_lat, truth_lon};
    *out_geojson = dup_string(geovmf::contours_geojson(grid, thresholds, lv, extras));
  });
}

geovmf_status geovmf_evaluate_files(const char* pred_jsonl, const char* gold_jsonl, int rule,
                                    int mode, uint64_t seed, uint32_t bootstrap_b,
                                    const char* label, char** out_json, char** out_table) {
  if (!pred_jsonl || !gold_jsonl) return fail(GEOVMF_E_ARG, "evaluate: null path");
  return guarded([&] {
    geovmf::AggRule agg;
    switch (rule) {
      case 0: agg = geovmf::AggRule::high_prob; break;
      case 1: agg = geovmf::AggRule::best; break;
      case 2: agg = geovmf::AggRule::random; break;
      default: throw geovmf::ArgError("rule must be 0 (highProb), 1 (best) or 2 (random)");
    }
    geovmf::EvalMode em;
    switch (mode) {
      case 0: em = geovmf::EvalMode::imputed; break;
      case 1: em = geovmf::EvalMode::complete_cases; break;
      default: throw geovmf::ArgError("mode must be 0 (imputed) or 1 (complete_cases)");
    }
    const geovmf::PredictionSet preds = geovmf::load_predictions_jsonl(pred_jsonl);
    const geovmf::Dataset gold = geovmf::parse_jsonl(gold_jsonl);
    const geovmf::EvalReport report =
        geovmf::evaluate(preds, gold, agg, em, seed, bootstrap_b, label ? label : "model");
    if (out_json) *out_json = dup_string(geovmf::report_to_json(report));
    if (out_table) *out_table = dup_string(geovmf::format_table({report}));
  });
}

}  // extern "C"
