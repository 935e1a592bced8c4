#include "geovmf/fetch.hpp"

#include <chrono>
#include <fstream>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <thread>
#include <unordered_set>

#include "geovmf/errors.hpp"

namespace geovmf {

using nlohmann::json;

namespace {

std::string url_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

std::string read_cursor(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) return {};
  std::string token;
  std::getline(in, token);
  return token;
}

void write_cursor(const std::string& path, const std::string& token) {
  if (path.empty()) return;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write cursor file: " + path);
  out << token << '\n';
}

}  // namespace

Dataset fetch_geo_articles(const FetchOptions& opts, FetchStats* stats) {
  FetchStats local;
  Dataset out;
  out.provenance = opts.endpoint;
  if (opts.limit == 0) {
    if (stats) *stats = local;
    return out;
  }
  if (!(opts.rate_per_sec > 0.0)) throw ArgError("rate_per_sec must be positive");
  if (opts.batch_size == 0 || opts.max_attempts < 1) {
    throw ArgError("batch_size and max_attempts must be positive");
  }

  const std::size_t scheme_end = opts.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ArgError("endpoint must be an http URL");
  const std::size_t path_start = opts.endpoint.find('/', scheme_end + 3);
  const std::string base =
      path_start == std::string::npos ? opts.endpoint : opts.endpoint.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : opts.endpoint.substr(path_start);

  httplib::Client client(base);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);

  std::string token = read_cursor(opts.cursor_path);
  std::unordered_set<std::string> seen;
  const auto interval =
      std::chrono::duration<double>(1.0 / opts.rate_per_sec);
  auto last_request = std::chrono::steady_clock::now() - std::chrono::hours(1);

  while (local.fetched < opts.limit) {
    const std::uint64_t want = std::min<std::uint64_t>(opts.batch_size, opts.limit - local.fetched);
    std::string url = path + "?limit=" + std::to_string(want);
    if (!token.empty()) url += "&continue=" + url_encode(token);

    httplib::Result res;
    bool ok = false;
    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
      if (attempt > 0) {
        ++local.retries;
        std::this_thread::sleep_for(
            std::chrono::milliseconds(opts.backoff_initial_ms << (attempt - 1)));
      }
      const auto since = std::chrono::steady_clock::now() - last_request;
      if (since < interval) {
        std::this_thread::sleep_for(interval - since);
      }
      last_request = std::chrono::steady_clock::now();
      res = client.Get(url);
      if (res && res->status >= 200 && res->status < 300) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      ++local.failed_requests;
      break;  // the cursor file still points at this batch, so a rerun resumes here
    }

    json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("pages") ||
        !body["pages"].is_array()) {
      throw DataError("endpoint returned an unexpected payload");
    }
    for (const auto& page : body["pages"]) {
      if (local.fetched >= opts.limit) break;
      if (!page.is_object() || !page.contains("id") || !page.contains("extract") ||
          !page["extract"].is_string()) {
        ++local.skipped;
        continue;
      }
      if (!page.contains("lat") || !page.contains("lon") || !page["lat"].is_number() ||
          !page["lon"].is_number()) {
        ++local.skipped;  // no primary coordinates
        continue;
      }
      GeoTextRecord r;
      r.id = page["id"].is_string() ? page["id"].get<std::string>()
                                    : std::to_string(page["id"].get<std::int64_t>());
      r.text = page["extract"].get<std::string>();
      r.lat_deg = page["lat"].get<double>();
      r.lon_deg = page["lon"].get<double>();
      if (!geo_valid({r.lat_deg, r.lon_deg}) || !seen.insert(r.id).second) {
        ++local.skipped;
        continue;
      }
      r.lon_deg = wrap_lon_deg(r.lon_deg);
      if (page.contains("title") && page["title"].is_string()) {
        r.title = page["title"].get<std::string>();
      }
      out.records.push_back(std::move(r));
      ++local.fetched;
    }

    if (body.contains("continue") && body["continue"].is_string() &&
        !body["continue"].get<std::string>().empty()) {
      token = body["continue"].get<std::string>();
      write_cursor(opts.cursor_path, token);
    } else {
      write_cursor(opts.cursor_path, "");
      break;  // no more pages
    }
  }

  if (stats) *stats = local;
  return out;
}

}  // namespace geovmf
