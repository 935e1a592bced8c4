#include "geovmf/dataset.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <unordered_set>

#include "geovmf/errors.hpp"
#include "geovmf/rng.hpp"

namespace geovmf {

using nlohmann::json;

namespace {

// Returns the record, or a reason string on rejection.
std::string parse_record_line(const std::string& line, GeoTextRecord& out) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) return "invalid JSON";
  if (!j.is_object()) return "not a JSON object";
  if (!j.contains("id") || !j["id"].is_string()) return "missing string field 'id'";
  if (!j.contains("text") || !j["text"].is_string()) return "missing string field 'text'";
  if (!j.contains("lat") || !j["lat"].is_number()) return "missing numeric field 'lat'";
  if (!j.contains("lon") || !j["lon"].is_number()) return "missing numeric field 'lon'";

  GeoTextRecord r;
  r.id = j["id"].get<std::string>();
  r.text = j["text"].get<std::string>();
  r.lat_deg = j["lat"].get<double>();
  r.lon_deg = j["lon"].get<double>();
  if (!geo_valid({r.lat_deg, r.lon_deg})) return "coordinates out of range";
  r.lon_deg = wrap_lon_deg(r.lon_deg);
  if (j.contains("title")) {
    if (!j["title"].is_string()) return "field 'title' must be a string";
    r.title = j["title"].get<std::string>();
  }
  out = std::move(r);
  return {};
}

}  // namespace

Dataset parse_jsonl(const std::string& path, ParseMode mode, ParseStats* stats) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);

  Dataset d;
  d.provenance = path;
  std::unordered_set<std::string> seen;
  ParseStats local;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    GeoTextRecord r;
    const std::string reason = parse_record_line(line, r);
    if (!reason.empty()) {
      if (mode == ParseMode::strict) {
        throw DataError(path + ":" + std::to_string(lineno) + ": " + reason);
      }
      ++local.skipped;
      continue;
    }
    if (!seen.insert(r.id).second) {
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate id '" + r.id + "'");
    }
    d.records.push_back(std::move(r));
    ++local.kept;
  }
  if (stats) *stats = local;
  return d;
}

void write_jsonl(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open corpus file for writing: " + path);
  for (const auto& r : d.records) {
    json j;
    j["id"] = r.id;
    j["text"] = r.text;
    j["lat"] = r.lat_deg;
    j["lon"] = r.lon_deg;
    if (r.title) j["title"] = *r.title;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing corpus file: " + path);
}

SplitResult split(const Dataset& d, const SplitFractions& f, std::uint64_t seed) {
  if (!(f.train > 0.0) || !(f.val > 0.0) || !(f.test > 0.0)) {
    throw ArgError("split fractions must all be positive");
  }
  if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw ArgError("split fractions must sum to 1");
  }
  const std::size_t n = d.size();
  if (n < 3) throw ArgError("dataset too small to split three ways");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  // The epsilon keeps integral f*n from landing one ulp below its value and
  // flooring a count away.
  const auto n_train = static_cast<std::size_t>(std::floor(f.train * static_cast<double>(n) + 1e-7));
  const auto n_val = static_cast<std::size_t>(std::floor(f.val * static_cast<double>(n) + 1e-7));
  if (n_train + n_val > n) throw ArgError("split fractions leave no test records");

  SplitResult out;
  out.train.provenance = d.provenance + " [train]";
  out.val.provenance = d.provenance + " [val]";
  out.test.provenance = d.provenance + " [test]";
  for (std::size_t i = 0; i < n; ++i) {
    const GeoTextRecord& r = d.records[order[i]];
    if (i < n_train) {
      out.train.records.push_back(r);
    } else if (i < n_train + n_val) {
      out.val.records.push_back(r);
    } else {
      out.test.records.push_back(r);
    }
  }
  return out;
}

}  // namespace geovmf
