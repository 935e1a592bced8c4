#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "geovmf/dataset.hpp"
#include "geovmf/mixture.hpp"

namespace geovmf {

struct Candidate {
  GeoPoint point;
  std::optional<double> score;
};

// Either the model's own mixture or an external geocoder's candidate list.
using Prediction = std::variant<VmfMixture, std::vector<Candidate>>;

// Keyed by record id. Ids absent from the map are MISSING.
using PredictionSet = std::unordered_map<std::string, Prediction>;

enum class AggRule { high_prob, best, random };
enum class EvalMode { imputed, complete_cases };

struct EvalReport {
  std::string label;
  AggRule rule = AggRule::high_prob;
  EvalMode mode = EvalMode::imputed;
  std::size_t n = 0;
  double mean_km = 0.0;
  double median_km = 0.0;
  double se_mean_km = 0.0;
  double se_median_km = 0.0;
  std::size_t missing_imputed = 0;
  std::size_t missing_dropped = 0;
  // highProb fell back to "first candidate" because scores were absent
  std::size_t degraded_score = 0;
};

// Collapses one prediction to a point. best needs the truth (oracle rule);
// random is a single seeded draw. For candidate lists without scores,
// highProb degrades to the first candidate and sets *degraded.
GeoPoint resolve(const Prediction& pred, const GeoPoint& truth, AggRule rule, std::uint64_t seed,
                 bool* degraded = nullptr);

// Scores predictions against gold coordinates. imputed mode scores MISSING
// ids at (0, 0); complete_cases drops them and reports the reduced n.
// Deterministic given (preds, gold, rule, mode, seed).
EvalReport evaluate(const PredictionSet& preds, const Dataset& gold, AggRule rule, EvalMode mode,
                    std::uint64_t seed, std::uint32_t bootstrap_b = 1000,
                    const std::string& label = "model");

enum class BootStat { mean, median };

// Nonparametric bootstrap standard error: B resamples with replacement, SE is
// the sample standard deviation of the statistic across resamples.
double bootstrap_se(const std::vector<double>& errors, BootStat stat, std::uint32_t B,
                    std::uint64_t seed);

// Aligned text table, one row group per report label: Mean/Median columns per
// rule, bootstrap SEs parenthesized beneath, kilometres at one decimal.
std::string format_table(const std::vector<EvalReport>& reports);

std::string report_to_json(const EvalReport& report);
std::string reports_to_json(const std::vector<EvalReport>& reports);

// Predictions JSONL. Mixture rows: {"id": str, "components": [{"lat", "lon",
// "kappa", "rho"}...]}. External rows: {"id": str, "candidates": [{"lat",
// "lon", "score"?}...]}. A row with neither key (or an empty list) is
// MISSING.
PredictionSet load_predictions_jsonl(const std::string& path);

// Serializer for the mixture flavor; adds a "point" field when rule is set.
void write_predictions_jsonl(const std::vector<std::pair<std::string, VmfMixture>>& preds,
                             const std::string& path,
                             std::optional<PointRule> point_rule = std::nullopt,
                             std::uint64_t seed = 0);

double median(std::vector<double> values);

const char* to_string(AggRule rule);
const char* to_string(EvalMode mode);

}  // namespace geovmf
