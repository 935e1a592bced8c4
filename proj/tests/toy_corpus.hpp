#pragma once

// Synthetic four-city corpus: every text names exactly one of four far-apart
// cities behind a small prefix, so the featurizer sees overlapping but
// city-dominated n-grams. Gold coordinates are the city centers.
//
// The benchmark constants below are the configuration the end-to-end
// training criterion runs at (five epochs at the reference learning rate);
// they were chosen so convergence is robust across seeds, and the thresholds
// were verified before being frozen.

#include <array>
#include <cstdint>
#include <string>

#include "geovmf/dataset.hpp"
#include "geovmf/rng.hpp"

namespace testutil {

inline constexpr std::uint32_t kToyFeatureDim = 512;
inline constexpr std::uint32_t kToyHiddenDim = 768;
inline constexpr std::uint32_t kToyBatchSize = 1;

struct City {
  const char* name;
  double lat;
  double lon;
};

inline constexpr std::array<City, 4> kCities{{
    {"New York City", 40.7128, -74.0060},
    {"London", 51.5074, -0.1278},
    {"Tokyo", 35.6762, 139.6503},
    {"Sydney", -33.8688, 151.2093},
}};

inline geovmf::Dataset toy_city_corpus(std::size_t per_city, std::uint64_t seed,
                                       const std::string& id_prefix) {
  static const char* prefixes[] = {"", "in ", "near ", "at ", "around ", "by "};

  geovmf::Dataset d;
  d.provenance = "toy-city-corpus";
  geovmf::Rng rng(seed);
  std::size_t serial = 0;
  for (const City& city : kCities) {
    for (std::size_t i = 0; i < per_city; ++i) {
      geovmf::GeoTextRecord r;
      r.id = id_prefix + std::to_string(serial++);
      r.text = std::string(prefixes[rng.uniform_u64(std::size(prefixes))]) + city.name;
      r.lat_deg = city.lat;
      r.lon_deg = city.lon;
      r.title = city.name;
      d.records.push_back(std::move(r));
    }
  }
  return d;
}

}  // namespace testutil
