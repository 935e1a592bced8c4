#include "geovmf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "geovmf/errors.hpp"
#include "geovmf/features.hpp"
#include "geovmf/rng.hpp"

namespace geovmf {

using nlohmann::json;

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const char* to_string(AggRule rule) {
  switch (rule) {
    case AggRule::high_prob: return "highProb";
    case AggRule::best: return "best";
    case AggRule::random: return "random";
  }
  return "?";
}

const char* to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::imputed: return "imputed";
    case EvalMode::complete_cases: return "complete_cases";
  }
  return "?";
}

namespace {

GeoPoint resolve_candidates(const std::vector<Candidate>& cands, const GeoPoint& truth,
                            AggRule rule, std::uint64_t seed, bool* degraded) {
  if (cands.empty()) throw ArgError("resolve: empty candidate list");
  switch (rule) {
    case AggRule::high_prob: {
      const bool scored = std::all_of(cands.begin(), cands.end(),
                                      [](const Candidate& c) { return c.score.has_value(); });
      if (!scored) {
        if (degraded) *degraded = true;
        return cands.front().point;
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i < cands.size(); ++i) {
        if (*cands[i].score > *cands[best].score) best = i;
      }
      return cands[best].point;
    }
    case AggRule::best: {
      std::size_t best = 0;
      double best_km = haversine_km(cands[0].point, truth);
      for (std::size_t i = 1; i < cands.size(); ++i) {
        const double km = haversine_km(cands[i].point, truth);
        if (km < best_km) {
          best_km = km;
          best = i;
        }
      }
      return cands[best].point;
    }
    case AggRule::random: {
      Rng rng(seed);
      return cands[static_cast<std::size_t>(rng.uniform_u64(cands.size()))].point;
    }
  }
  throw ArgError("unknown aggregation rule");
}

GeoPoint resolve_mixture(const VmfMixture& m, const GeoPoint& truth, AggRule rule,
                         std::uint64_t seed) {
  switch (rule) {
    case AggRule::high_prob:
      return point_estimate(m, PointRule::high_prob, seed);
    case AggRule::random:
      return point_estimate(m, PointRule::random_uniform, seed);
    case AggRule::best: {
      validate(m);
      std::size_t best = 0;
      double best_km = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m.size(); ++k) {
        const double km = haversine_km(cart_to_geo(m.components[k].mu), truth);
        if (km < best_km) {
          best_km = km;
          best = k;
        }
      }
      return cart_to_geo(m.components[best].mu);
    }
  }
  throw ArgError("unknown aggregation rule");
}

}  // namespace

GeoPoint resolve(const Prediction& pred, const GeoPoint& truth, AggRule rule, std::uint64_t seed,
                 bool* degraded) {
  if (const auto* cands = std::get_if<std::vector<Candidate>>(&pred)) {
    return resolve_candidates(*cands, truth, rule, seed, degraded);
  }
  return resolve_mixture(std::get<VmfMixture>(pred), truth, rule, seed);
}

double bootstrap_se(const std::vector<double>& errors, BootStat stat, std::uint32_t B,
                    std::uint64_t seed) {
  if (errors.empty()) throw ArgError("bootstrap_se: empty error list");
  if (B < 100) throw ArgError("bootstrap_se: B must be >= 100");
  const std::size_t n = errors.size();
  Rng rng(seed);
  std::vector<double> stats(B);
  std::vector<double> resample(n);
  for (std::uint32_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      resample[i] = errors[static_cast<std::size_t>(rng.uniform_u64(n))];
    }
    if (stat == BootStat::mean) {
      stats[b] = std::accumulate(resample.begin(), resample.end(), 0.0) / static_cast<double>(n);
    } else {
      stats[b] = median(resample);
    }
  }
  const double mean = std::accumulate(stats.begin(), stats.end(), 0.0) / static_cast<double>(B);
  double ss = 0.0;
  for (double s : stats) ss += (s - mean) * (s - mean);
  return std::sqrt(ss / static_cast<double>(B - 1));
}

EvalReport evaluate(const PredictionSet& preds, const Dataset& gold, AggRule rule, EvalMode mode,
                    std::uint64_t seed, std::uint32_t bootstrap_b, const std::string& label) {
  if (gold.records.empty()) throw ArgError("evaluate: empty gold set");

  std::size_t matched = 0;
  for (const auto& r : gold.records) {
    if (preds.count(r.id)) ++matched;
  }
  if (matched == 0) {
    throw DataError("evaluate: no prediction id matches the gold set");
  }

  EvalReport report;
  report.label = label;
  report.rule = rule;
  report.mode = mode;

  std::vector<double> errors;
  errors.reserve(gold.size());
  for (const auto& r : gold.records) {
    const GeoPoint truth = r.gold();
    const auto it = preds.find(r.id);
    if (it == preds.end()) {
      if (mode == EvalMode::complete_cases) {
        ++report.missing_dropped;
        continue;
      }
      ++report.missing_imputed;
      errors.push_back(haversine_km(GeoPoint{0.0, 0.0}, truth));
      continue;
    }
    bool degraded = false;
    const std::uint64_t record_seed = derive_seed(seed, fnv1a64(r.id.data(), r.id.size()));
    const GeoPoint p = resolve(it->second, truth, rule, record_seed, &degraded);
    if (degraded) ++report.degraded_score;
    errors.push_back(haversine_km(p, truth));
  }

  report.n = errors.size();
  report.mean_km =
      std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  report.median_km = median(errors);
  report.se_mean_km = bootstrap_se(errors, BootStat::mean, bootstrap_b, derive_seed(seed, 101));
  report.se_median_km =
      bootstrap_se(errors, BootStat::median, bootstrap_b, derive_seed(seed, 102));
  return report;
}

// ---------------------------------------------------------------------------
// table formatting

namespace {

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string format_table(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw ArgError("format_table: no reports");

  struct Row {
    std::string label;
    std::size_t n;
    // per rule: mean/median and their SEs, if present
    std::optional<EvalReport> by_rule[3];
  };
  std::vector<Row> rows;
  for (const auto& rep : reports) {
    std::string label = rep.label;
    if (rep.mode == EvalMode::complete_cases) label += " Complete Cases";
    Row* row = nullptr;
    for (auto& r : rows) {
      if (r.label == label && r.n == rep.n) {
        row = &r;
        break;
      }
    }
    if (!row) {
      rows.push_back(Row{label, rep.n, {}});
      row = &rows.back();
    }
    row->by_rule[static_cast<int>(rep.rule)] = rep;
  }

  constexpr std::size_t kNum = 10;
  std::size_t label_w = 5;
  for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
  label_w += 2;

  std::ostringstream out;
  out << pad("Model", label_w) << pad("n", kNum);
  for (const char* rule : {"highProb", "best", "random"}) {
    out << pad(std::string(rule) + " Mean", kNum + 6) << pad(std::string(rule) + " Median", kNum + 6);
  }
  out << '\n';
  for (const auto& r : rows) {
    out << pad(r.label, label_w) << pad(std::to_string(r.n), kNum);
    std::string se_line = pad("", label_w) + pad("", kNum);
    for (int rule = 0; rule < 3; ++rule) {
      if (r.by_rule[rule]) {
        const EvalReport& rep = *r.by_rule[rule];
        out << pad(fixed1(rep.mean_km), kNum + 6) << pad(fixed1(rep.median_km), kNum + 6);
        se_line += pad("(" + fixed1(rep.se_mean_km) + ")", kNum + 6) +
                   pad("(" + fixed1(rep.se_median_km) + ")", kNum + 6);
      } else {
        out << pad("-", kNum + 6) << pad("-", kNum + 6);
        se_line += pad("", kNum + 6) + pad("", kNum + 6);
      }
    }
    out << '\n' << se_line << '\n';
  }
  return out.str();
}

namespace {

json report_json_obj(const EvalReport& r) {
  json j;
  j["label"] = r.label;
  j["rule"] = to_string(r.rule);
  j["mode"] = to_string(r.mode);
  j["n"] = r.n;
  j["mean_km"] = r.mean_km;
  j["median_km"] = r.median_km;
  j["se_mean_km"] = r.se_mean_km;
  j["se_median_km"] = r.se_median_km;
  j["missing_imputed"] = r.missing_imputed;
  j["missing_dropped"] = r.missing_dropped;
  j["degraded_score"] = r.degraded_score;
  return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report) { return report_json_obj(report).dump(2); }

std::string reports_to_json(const std::vector<EvalReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_json_obj(r));
  return arr.dump(2);
}

// ---------------------------------------------------------------------------
// prediction files

PredictionSet load_predictions_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prediction file: " + path);

  PredictionSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError(where + ": invalid JSON object");
    if (!j.contains("id") || !j["id"].is_string()) throw DataError(where + ": missing string 'id'");
    const std::string id = j["id"].get<std::string>();
    if (out.count(id)) throw DataError(where + ": duplicate id '" + id + "'");

    if (j.contains("components") && j["components"].is_array() && !j["components"].empty()) {
      VmfMixture m;
      for (const auto& c : j["components"]) {
        if (!c.is_object() || !c.contains("lat") || !c.contains("lon") || !c.contains("kappa") ||
            !c.contains("rho")) {
          throw DataError(where + ": component needs lat, lon, kappa, rho");
        }
        const GeoPoint gp{c["lat"].get<double>(), c["lon"].get<double>()};
        m.components.push_back({geo_to_cart(gp), c["kappa"].get<double>()});
        m.rho.push_back(c["rho"].get<double>());
      }
      try {
        validate(m);
      } catch (const ArgError& e) {
        throw DataError(where + ": " + e.what());
      }
      out.emplace(id, std::move(m));
    } else if (j.contains("candidates") && j["candidates"].is_array() &&
               !j["candidates"].empty()) {
      std::vector<Candidate> cands;
      for (const auto& c : j["candidates"]) {
        if (!c.is_object() || !c.contains("lat") || !c.contains("lon")) {
          throw DataError(where + ": candidate needs lat and lon");
        }
        Candidate cand;
        cand.point = {c["lat"].get<double>(), c["lon"].get<double>()};
        if (!geo_valid(cand.point)) throw DataError(where + ": candidate coordinates out of range");
        cand.point.lon_deg = wrap_lon_deg(cand.point.lon_deg);
        if (c.contains("score")) {
          if (!c["score"].is_number()) throw DataError(where + ": score must be numeric");
          cand.score = c["score"].get<double>();
        }
        cands.push_back(cand);
      }
      out.emplace(id, std::move(cands));
    }
    // neither key (or empty lists): MISSING, id intentionally not inserted
  }
  return out;
}

void write_predictions_jsonl(const std::vector<std::pair<std::string, VmfMixture>>& preds,
                             const std::string& path, std::optional<PointRule> point_rule,
                             std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open prediction file for writing: " + path);
  for (const auto& [id, m] : preds) {
    json comps = json::array();
    for (std::size_t k = 0; k < m.size(); ++k) {
      const GeoPoint gp = cart_to_geo(m.components[k].mu);
      comps.push_back({{"lat", gp.lat_deg},
                       {"lon", gp.lon_deg},
                       {"kappa", m.components[k].kappa},
                       {"rho", m.rho[k]}});
    }
    json j{{"id", id}, {"components", comps}};
    if (point_rule) {
      const std::uint64_t record_seed = derive_seed(seed, fnv1a64(id.data(), id.size()));
      const GeoPoint p = point_estimate(m, *point_rule, record_seed);
      j["point"] = {{"lat", p.lat_deg}, {"lon", p.lon_deg}};
    }
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing prediction file: " + path);
}

}  // namespace geovmf
