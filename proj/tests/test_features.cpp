#include <doctest.h>

#include <cmath>

#include "geovmf/errors.hpp"
#include "geovmf/features.hpp"
#include "tmpdir.hpp"

using namespace geovmf;

TEST_CASE("featurize is deterministic and unit-normalized") {
  FeaturizerConfig cfg;
  const FeatureVector a = featurize("Hanover Lutheran Church in Cape Girardeau", cfg);
  const FeatureVector b = featurize("Hanover Lutheran Church in Cape Girardeau", cfg);
  CHECK(a.size() == cfg.dim);
  CHECK((a - b).norm() == 0.0);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("empty text maps to the zero vector") {
  FeaturizerConfig cfg;
  CHECK(featurize("", cfg).norm() == 0.0);
}

TEST_CASE("near-duplicate texts are close; frozen regression value") {
  FeaturizerConfig cfg;
  const FeatureVector a = featurize("Cape Girardeau, Missouri", cfg);
  const FeatureVector b = featurize("Cape Girardeau Missouri", cfg);
  const double cosine = a.dot(b);
  CHECK(cosine > 0.8);
  CHECK(cosine == doctest::Approx(0.8295150620062528).epsilon(1e-12));
}

TEST_CASE("hash seed and config changes move the embedding") {
  FeaturizerConfig cfg;
  FeaturizerConfig seeded = cfg;
  seeded.hash_seed = 12345;
  const FeatureVector a = featurize("Springfield, Illinois", cfg);
  const FeatureVector b = featurize("Springfield, Illinois", seeded);
  CHECK((a - b).norm() > 0.1);
}

TEST_CASE("case folding and NFC normalization unify equivalent spellings") {
  FeaturizerConfig cfg;
  const FeatureVector lower = featurize("salamanperä strict nature reserve", cfg);
  const FeatureVector upper = featurize("SALAMANPERÄ STRICT NATURE RESERVE", cfg);
  CHECK((lower - upper).norm() == 0.0);

  // composed U+00E9 vs decomposed e + U+0301
  const FeatureVector composed = featurize("café de flore, paris", cfg);
  const FeatureVector decomposed = featurize("café de flore, paris", cfg);
  CHECK((composed - decomposed).norm() == 0.0);

  FeaturizerConfig keep_case = cfg;
  keep_case.lowercase = false;
  const FeatureVector cased = featurize("CAPE GIRARDEAU", keep_case);
  const FeatureVector uncased = featurize("cape girardeau", keep_case);
  CHECK((cased - uncased).norm() > 0.1);
}

TEST_CASE("featurizer config validation") {
  FeaturizerConfig cfg;
  cfg.dim = 1000;  // not a power of two
  CHECK_THROWS_AS(featurize("x", cfg), ArgError);
  cfg = {};
  cfg.ngram_min = 6;
  cfg.ngram_max = 3;
  CHECK_THROWS_AS(featurize("x", cfg), ArgError);
}

TEST_CASE("load_embeddings happy path") {
  testutil::TempDir tmp;
  const std::string path = tmp.write("emb.tsv",
                                     "id\tdim=8\n"
                                     "a\t1\t0\t0\t0\t0\t0\t0\t0\n"
                                     "b\t0\t1\t0\t0\t0\t0\t0\t0\n"
                                     "c\t0.5\t-0.25\t0\t0\t1e-3\t0\t0\t2\n");
  const auto map = load_embeddings(path);
  CHECK(map.size() == 3);
  CHECK(map.at("a").size() == 8);
  CHECK(map.at("c")[7] == doctest::Approx(2.0));
  CHECK(map.at("c")[4] == doctest::Approx(1e-3));
}

TEST_CASE("load_embeddings rejects malformed rows naming the line") {
  testutil::TempDir tmp;
  const std::string path = tmp.write("emb.tsv",
                                     "id\tdim=8\n"
                                     "a\t1\t0\t0\t0\t0\t0\t0\n");  // 7 values
  CHECK_THROWS_WITH_AS(load_embeddings(path),
                       doctest::Contains("line 2"), DataError);
}

TEST_CASE("load_embeddings rejects duplicate ids naming the id") {
  testutil::TempDir tmp;
  const std::string path = tmp.write("emb.tsv",
                                     "id\tdim=2\n"
                                     "a\t1\t0\n"
                                     "a\t0\t1\n");
  CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("'a'"), DataError);
}

TEST_CASE("load_embeddings rejects a bad header") {
  testutil::TempDir tmp;
  CHECK_THROWS_AS(load_embeddings(tmp.write("emb.tsv", "foo\tbar\n")), DataError);
  CHECK_THROWS_AS(load_embeddings(tmp.write("empty.tsv", "")), DataError);
  CHECK_THROWS_AS(load_embeddings(tmp.file("missing.tsv")), IoError);
}
