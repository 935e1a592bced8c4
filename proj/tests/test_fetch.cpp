#include <doctest.h>

#include <atomic>
#include <chrono>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <thread>

#include "geovmf/errors.hpp"
#include "geovmf/fetch.hpp"
#include "tmpdir.hpp"

using namespace geovmf;
using nlohmann::json;

namespace {

// In-process mock of the article-extract endpoint.
struct MockServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;
  std::atomic<int> hits{0};

  explicit MockServer(httplib::Server::Handler handler) {
    server.Get("/articles", [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      handler(req, res);
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockServer() {
    server.stop();
    thread.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port) + "/articles"; }
};

json page(const std::string& id, bool with_coords, double lat = 10.0, double lon = 20.0) {
  json p{{"id", id}, {"title", "t-" + id}, {"extract", "extract for " + id}};
  if (with_coords) {
    p["lat"] = lat;
    p["lon"] = lon;
  }
  return p;
}

}  // namespace

TEST_CASE("limit=0 makes no requests") {
  MockServer mock([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"pages": []})", "application/json");
  });
  FetchOptions opts;
  opts.endpoint = mock.endpoint();
  opts.limit = 0;
  FetchStats stats;
  const Dataset d = fetch_geo_articles(opts, &stats);
  CHECK(d.size() == 0);
  CHECK(stats.fetched == 0);
  CHECK(mock.hits == 0);
}

TEST_CASE("pages without coordinates are skipped") {
  MockServer mock([](const httplib::Request&, httplib::Response& res) {
    json body;
    body["pages"] = json::array({page("a", true, 48.85, 2.35), page("b", false),
                                 page("c", true, -33.9, 151.2)});
    res.set_content(body.dump(), "application/json");
  });
  FetchOptions opts;
  opts.endpoint = mock.endpoint();
  opts.limit = 10;
  opts.rate_per_sec = 1000.0;
  FetchStats stats;
  const Dataset d = fetch_geo_articles(opts, &stats);
  CHECK(d.size() == 2);
  CHECK(stats.fetched == 2);
  CHECK(stats.skipped == 1);
  CHECK(d.records[0].id == "a");
  CHECK(d.records[0].title.value() == "t-a");
  CHECK(d.records[1].lat_deg == doctest::Approx(-33.9));
}

TEST_CASE("a 500-then-200 page is retried and recorded") {
  std::atomic<int> calls{0};
  MockServer mock([&calls](const httplib::Request&, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 500;
      return;
    }
    json body;
    body["pages"] = json::array({page("a", true)});
    res.set_content(body.dump(), "application/json");
  });
  FetchOptions opts;
  opts.endpoint = mock.endpoint();
  opts.limit = 1;
  opts.rate_per_sec = 1000.0;
  opts.backoff_initial_ms = 5;
  FetchStats stats;
  const Dataset d = fetch_geo_articles(opts, &stats);
  CHECK(d.size() == 1);
  CHECK(stats.retries == 1);
  CHECK(stats.failed_requests == 0);
}

TEST_CASE("persistent failure gives up after max_attempts") {
  MockServer mock([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  FetchOptions opts;
  opts.endpoint = mock.endpoint();
  opts.limit = 5;
  opts.rate_per_sec = 1000.0;
  opts.max_attempts = 3;
  opts.backoff_initial_ms = 5;
  FetchStats stats;
  const Dataset d = fetch_geo_articles(opts, &stats);
  CHECK(d.size() == 0);
  CHECK(stats.retries == 2);
  CHECK(stats.failed_requests == 1);
  CHECK(mock.hits == 3);
}

TEST_CASE("pagination follows the continuation token and persists the cursor") {
  testutil::TempDir tmp;
  const std::string cursor = tmp.file("cursor.txt");
  MockServer mock([](const httplib::Request& req, httplib::Response& res) {
    json body;
    if (!req.has_param("continue")) {
      body["pages"] = json::array({page("p1", true), page("p2", true)});
      body["continue"] = "tok-2";
    } else if (req.get_param_value("continue") == "tok-2") {
      body["pages"] = json::array({page("p3", true)});
    } else {
      body["pages"] = json::array();
    }
    res.set_content(body.dump(), "application/json");
  });

  FetchOptions opts;
  opts.endpoint = mock.endpoint();
  opts.limit = 10;
  opts.rate_per_sec = 1000.0;
  opts.cursor_path = cursor;
  FetchStats stats;
  const Dataset d = fetch_geo_articles(opts, &stats);
  CHECK(d.size() == 3);
  CHECK(mock.hits == 2);
  // exhausted: cursor cleared so a rerun starts fresh
  CHECK(testutil::slurp(cursor) == "\n");
}

TEST_CASE("a batch-limit stop leaves a resumable cursor") {
  testutil::TempDir tmp;
  const std::string cursor = tmp.file("cursor.txt");
  MockServer mock([](const httplib::Request& req, httplib::Response& res) {
    json body;
    const std::string tok = req.has_param("continue") ? req.get_param_value("continue") : "";
    if (tok.empty()) {
      body["pages"] = json::array({page("p1", true), page("p2", true)});
      body["continue"] = "tok-2";
    } else {
      body["pages"] = json::array({page("p3", true), page("p4", true)});
      body["continue"] = "tok-3";
    }
    res.set_content(body.dump(), "application/json");
  });

  FetchOptions opts;
  opts.endpoint = mock.endpoint();
  opts.limit = 2;
  opts.rate_per_sec = 1000.0;
  opts.cursor_path = cursor;
  const Dataset first = fetch_geo_articles(opts);
  CHECK(first.size() == 2);
  CHECK(testutil::slurp(cursor) == "tok-2\n");

  // resume picks up where the cursor points
  const Dataset second = fetch_geo_articles(opts);
  CHECK(second.size() == 2);
  CHECK(second.records[0].id == "p3");
}

TEST_CASE("the request rate is capped") {
  MockServer mock([](const httplib::Request& req, httplib::Response& res) {
    json body;
    const std::string tok = req.has_param("continue") ? req.get_param_value("continue") : "0";
    body["pages"] = json::array({page("p" + tok, true)});
    body["continue"] = tok + "x";
    res.set_content(body.dump(), "application/json");
  });
  FetchOptions opts;
  opts.endpoint = mock.endpoint();
  opts.limit = 3;
  opts.batch_size = 1;
  opts.rate_per_sec = 20.0;  // at least 50 ms between requests
  const auto start = std::chrono::steady_clock::now();
  const Dataset d = fetch_geo_articles(opts);
  const auto elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(d.size() == 3);
  CHECK(mock.hits == 3);
  CHECK(elapsed >= 0.1);  // two enforced gaps
}

TEST_CASE("malformed payloads and bad endpoints are rejected") {
  MockServer mock([](const httplib::Request&, httplib::Response& res) {
    res.set_content("this is not json", "text/plain");
  });
  FetchOptions opts;
  opts.endpoint = mock.endpoint();
  opts.limit = 1;
  opts.rate_per_sec = 1000.0;
  CHECK_THROWS_AS(fetch_geo_articles(opts), DataError);

  FetchOptions bad;
  bad.endpoint = "not-a-url";
  bad.limit = 1;
  CHECK_THROWS_AS(fetch_geo_articles(bad), ArgError);
}
