#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>

namespace geovmf {

using FeatureVector = Eigen::VectorXd;

// Hashed character n-gram featurizer. Stands in for a pretrained text encoder
// at desk scale; everything downstream of the feature vector is unchanged.
struct FeaturizerConfig {
  std::uint32_t dim = 4096;  // power of two so hashing can mask instead of mod
  std::uint32_t ngram_min = 3;
  std::uint32_t ngram_max = 5;
  bool lowercase = true;
  std::uint64_t hash_seed = 0;
};

void validate(const FeaturizerConfig& cfg);

// NFC normalization plus root-locale lowercasing (when configured). Exposed
// for tests; featurize applies it internally.
std::string normalize_text(std::string_view text, bool lowercase);

// Counts of hashed character n-grams (64-bit FNV-1a over the n-gram bytes,
// XOR hash_seed, masked into dim buckets), L2-normalized when nonzero.
// Deterministic in (text, cfg). Empty text maps to the zero vector.
FeatureVector featurize(std::string_view text, const FeaturizerConfig& cfg);

// Embedding file: UTF-8, first line "id<TAB>dim=D", then one row per record
// "id<TAB>v1<TAB>...<TAB>vD". Lets callers swap in externally computed text
// embeddings of any fixed dimension.
std::unordered_map<std::string, FeatureVector> load_embeddings(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t len);

}  // namespace geovmf
