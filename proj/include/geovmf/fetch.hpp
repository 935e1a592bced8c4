#pragma once

#include <cstdint>
#include <string>

#include "geovmf/dataset.hpp"

namespace geovmf {

struct FetchOptions {
  std::string endpoint;       // e.g. http://localhost:8080/articles
  std::uint64_t limit = 0;    // records to collect
  double rate_per_sec = 2.0;  // politeness cap on request rate
  std::string cursor_path;    // continuation token file; empty disables resume
  std::uint32_t batch_size = 50;
  int max_attempts = 3;       // per request, with exponential backoff
  int backoff_initial_ms = 250;
};

struct FetchStats {
  std::uint64_t fetched = 0;
  std::uint64_t skipped = 0;  // pages without coordinates, or repeated ids
  std::uint64_t retries = 0;
  std::uint64_t failed_requests = 0;  // gave up after max_attempts
};

// Pulls article extracts with coordinates from an HTTP endpoint speaking the
// article-extract shape (see README): GET <endpoint>?limit=N[&continue=TOKEN]
// returns {"pages": [{"id", "title"?, "extract", "lat"?, "lon"?}, ...],
// "continue": TOKEN?}. Pages without both coordinates are skipped. The
// continuation token is persisted to cursor_path after every batch, so an
// interrupted run resumes where it stopped.
Dataset fetch_geo_articles(const FetchOptions& opts, FetchStats* stats = nullptr);

}  // namespace geovmf
