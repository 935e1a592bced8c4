#include <doctest.h>

#include <set>
#include <string>

#include "geovmf/dataset.hpp"
#include "geovmf/errors.hpp"
#include "tmpdir.hpp"

using namespace geovmf;

namespace {

std::string record_line(const std::string& id, double lat, double lon,
                        const std::string& text = "some place") {
  return "{\"id\": \"" + id + "\", \"text\": \"" + text + "\", \"lat\": " + std::to_string(lat) +
         ", \"lon\": " + std::to_string(lon) + "}\n";
}

Dataset synthetic(std::size_t n) {
  Dataset d;
  d.provenance = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    GeoTextRecord r;
    r.id = "r" + std::to_string(i);
    r.text = "record number " + std::to_string(i);
    r.lat_deg = -60.0 + static_cast<double>(i % 120);
    r.lon_deg = -170.0 + static_cast<double>((7 * i) % 340);
    if (i % 3 == 0) r.title = "title " + std::to_string(i);
    d.records.push_back(std::move(r));
  }
  return d;
}

}  // namespace

TEST_CASE("parse_jsonl happy path") {
  testutil::TempDir tmp;
  const std::string path = tmp.write(
      "corpus.jsonl", record_line("a", 10, 20) + record_line("b", -5, 120, "with title") +
                          record_line("c", 48.85, 2.35));
  const Dataset d = parse_jsonl(path);
  CHECK(d.size() == 3);
  CHECK(d.records[0].id == "a");
  CHECK(d.records[2].lat_deg == doctest::Approx(48.85));
}

TEST_CASE("parse_jsonl strict mode cites the offending line") {
  testutil::TempDir tmp;
  const std::string path =
      tmp.write("bad.jsonl", record_line("a", 10, 20) + record_line("b", 95.0, 0.0));
  CHECK_THROWS_WITH_AS(parse_jsonl(path, ParseMode::strict), doctest::Contains(":2"), DataError);
}

TEST_CASE("parse_jsonl lenient mode skips and counts") {
  testutil::TempDir tmp;
  const std::string path = tmp.write("mixed.jsonl", record_line("a", 10, 20) +
                                                        record_line("b", 95.0, 0.0) +
                                                        "not json at all\n" +
                                                        record_line("c", 0, 0));
  ParseStats stats;
  const Dataset d = parse_jsonl(path, ParseMode::lenient, &stats);
  CHECK(d.size() == 2);
  CHECK(stats.kept == 2);
  CHECK(stats.skipped == 2);
}

TEST_CASE("parse_jsonl rejects duplicate ids naming the id") {
  testutil::TempDir tmp;
  const std::string path =
      tmp.write("dup.jsonl", record_line("x", 1, 2) + record_line("x", 3, 4));
  CHECK_THROWS_WITH_AS(parse_jsonl(path), doctest::Contains("'x'"), DataError);
  CHECK_THROWS_AS(parse_jsonl(tmp.file("nope.jsonl")), IoError);
}

TEST_CASE("jsonl round trip is the identity") {
  testutil::TempDir tmp;
  const Dataset d = synthetic(257);
  const std::string path = tmp.file("out.jsonl");
  write_jsonl(d, path);
  const Dataset back = parse_jsonl(path);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.records[i].id == d.records[i].id);
    CHECK(back.records[i].text == d.records[i].text);
    CHECK(back.records[i].lat_deg == d.records[i].lat_deg);
    CHECK(back.records[i].lon_deg == d.records[i].lon_deg);
    CHECK(back.records[i].title == d.records[i].title);
  }
}

TEST_CASE("split arithmetic on 100 records") {
  const Dataset d = synthetic(100);
  const SplitResult r = split(d, {0.98, 0.01, 0.01}, 7);
  CHECK(r.train.size() == 98);
  CHECK(r.val.size() == 1);
  CHECK(r.test.size() == 1);

  std::set<std::string> ids;
  for (const auto* part : {&r.train, &r.val, &r.test}) {
    for (const auto& rec : part->records) CHECK(ids.insert(rec.id).second);
  }
  CHECK(ids.size() == 100);  // disjoint and exhaustive
}

TEST_CASE("split accounting at the full corpus scale") {
  // 1,286,475 synthetic ids at the published proportions reproduce the
  // 1,260,746 / 12,864 / 12,865 partition sizes
  const std::size_t total = 1286475;
  Dataset d;
  d.records.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    d.records[i].id = std::to_string(i);
    d.records[i].lat_deg = 0.0;
    d.records[i].lon_deg = 0.0;
  }
  const SplitFractions f{1260746.0 / 1286475.0, 12864.0 / 1286475.0, 12865.0 / 1286475.0};
  const SplitResult r = split(d, f, 1);
  CHECK(r.train.size() == 1260746);
  CHECK(r.val.size() == 12864);
  CHECK(r.test.size() == 12865);
}

TEST_CASE("split is deterministic given the seed") {
  const Dataset d = synthetic(50);
  const SplitResult a = split(d, {0.6, 0.2, 0.2}, 99);
  const SplitResult b = split(d, {0.6, 0.2, 0.2}, 99);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train.records[i].id == b.train.records[i].id);
  }
  const SplitResult c = split(d, {0.6, 0.2, 0.2}, 100);
  bool all_same = a.train.size() == c.train.size();
  if (all_same) {
    all_same = true;
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      if (a.train.records[i].id != c.train.records[i].id) {
        all_same = false;
        break;
      }
    }
  }
  CHECK_FALSE(all_same);
}

TEST_CASE("split validates its inputs") {
  const Dataset d = synthetic(10);
  CHECK_THROWS_AS(split(d, {0.5, 0.2, 0.2}, 1), ArgError);   // sums to 0.9
  CHECK_THROWS_AS(split(d, {1.0, 0.0, 0.0}, 1), ArgError);   // zero fractions
  CHECK_THROWS_AS(split(synthetic(2), {0.4, 0.3, 0.3}, 1), ArgError);  // too small
}
