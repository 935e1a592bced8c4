#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geovmf/sphere.hpp"

namespace geovmf {

// One text with its gold coordinates; the unit of training and evaluation.
struct GeoTextRecord {
  std::string id;
  std::string text;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  std::optional<std::string> title;

  GeoPoint gold() const { return {lat_deg, lon_deg}; }
};

struct Dataset {
  std::vector<GeoTextRecord> records;
  std::string provenance;

  std::size_t size() const { return records.size(); }
};

enum class ParseMode { strict, lenient };

struct ParseStats {
  std::size_t kept = 0;
  std::size_t skipped = 0;
};

// Corpus JSONL: {"id": str, "text": str, "lat": float, "lon": float,
// "title": str?} per line. In strict mode the first malformed line aborts
// with its line number; lenient mode skips and counts. Duplicate ids are an
// error in both modes.
Dataset parse_jsonl(const std::string& path, ParseMode mode = ParseMode::strict,
                    ParseStats* stats = nullptr);

void write_jsonl(const Dataset& d, const std::string& path);

struct SplitFractions {
  double train = 0.98;
  double val = 0.01;
  double test = 0.01;
};

struct SplitResult {
  Dataset train, val, test;
};

// Seeded shuffle, then contiguous cut. Train and val sizes are floored (with
// a tiny epsilon so integral products count exactly); the remainder goes to
// test.
SplitResult split(const Dataset& d, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace geovmf
