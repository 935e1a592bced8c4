#include "geovmf/features.hpp"

#include <unicode/unorm2.h>
#include <unicode/ustring.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

#include "geovmf/errors.hpp"

namespace geovmf {

void validate(const FeaturizerConfig& cfg) {
  if (cfg.dim == 0 || (cfg.dim & (cfg.dim - 1)) != 0) {
    throw ArgError("featurizer dim must be a power of two, got " + std::to_string(cfg.dim));
  }
  if (cfg.ngram_min == 0 || cfg.ngram_min > cfg.ngram_max) {
    throw ArgError("featurizer ngram sizes must satisfy 1 <= ngram_min <= ngram_max");
  }
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::u16string utf8_to_u16(std::string_view s) {
  if (s.empty()) return {};
  std::u16string out(s.size() + 1, u'\0');
  UErrorCode ec = U_ZERO_ERROR;
  int32_t len = 0;
  // ill-formed byte sequences become U+FFFD rather than an error; corpora are
  // not always clean
  u_strFromUTF8WithSub(out.data(), static_cast<int32_t>(out.size()), &len, s.data(),
                       static_cast<int32_t>(s.size()), 0xFFFD, nullptr, &ec);
  if (U_FAILURE(ec)) throw DataError("text transcoding failed");
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::string u16_to_utf8(const std::u16string& s) {
  if (s.empty()) return {};
  std::string out(s.size() * 4, '\0');
  UErrorCode ec = U_ZERO_ERROR;
  int32_t len = 0;
  u_strToUTF8(out.data(), static_cast<int32_t>(out.size()), &len, s.data(),
              static_cast<int32_t>(s.size()), &ec);
  if (U_FAILURE(ec)) throw DataError("text transcoding failed");
  out.resize(static_cast<std::size_t>(len));
  return out;
}

}  // namespace

std::string normalize_text(std::string_view text, bool lowercase) {
  std::u16string u16 = utf8_to_u16(text);
  UErrorCode ec = U_ZERO_ERROR;
  const UNormalizer2* nfc = unorm2_getNFCInstance(&ec);
  if (U_FAILURE(ec)) throw DataError("NFC normalizer unavailable");

  int32_t need = unorm2_normalize(nfc, u16.data(), static_cast<int32_t>(u16.size()), nullptr,
                                  0, &ec);
  if (ec != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(ec)) throw DataError("NFC normalization failed");
  ec = U_ZERO_ERROR;
  std::u16string nfc_out(static_cast<std::size_t>(need), u'\0');
  unorm2_normalize(nfc, u16.data(), static_cast<int32_t>(u16.size()), nfc_out.data(), need, &ec);
  if (U_FAILURE(ec)) throw DataError("NFC normalization failed");

  if (lowercase) {
    ec = U_ZERO_ERROR;
    // root locale so the mapping does not depend on the host environment
    int32_t lneed = u_strToLower(nullptr, 0, nfc_out.data(), static_cast<int32_t>(nfc_out.size()),
                                 "", &ec);
    if (ec != U_BUFFER_OVERFLOW_ERROR && U_FAILURE(ec)) throw DataError("lowercasing failed");
    ec = U_ZERO_ERROR;
    std::u16string lower(static_cast<std::size_t>(lneed), u'\0');
    u_strToLower(lower.data(), lneed, nfc_out.data(), static_cast<int32_t>(nfc_out.size()), "",
                 &ec);
    if (U_FAILURE(ec)) throw DataError("lowercasing failed");
    nfc_out = std::move(lower);
  }
  return u16_to_utf8(nfc_out);
}

namespace {

// Byte offsets of UTF-8 codepoint starts, plus one past-the-end sentinel.
std::vector<std::size_t> codepoint_starts(std::string_view s) {
  std::vector<std::size_t> starts;
  starts.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  starts.push_back(s.size());
  return starts;
}

}  // namespace

FeatureVector featurize(std::string_view text, const FeaturizerConfig& cfg) {
  validate(cfg);
  FeatureVector v = FeatureVector::Zero(cfg.dim);
  const std::string norm = normalize_text(text, cfg.lowercase);
  if (norm.empty()) return v;

  const std::vector<std::size_t> starts = codepoint_starts(norm);
  const std::size_t n_cp = starts.size() - 1;
  const std::uint64_t mask = cfg.dim - 1;
  for (std::size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    if (n_cp < n) break;
    for (std::size_t i = 0; i + n <= n_cp; ++i) {
      const std::size_t lo = starts[i];
      const std::size_t hi = starts[i + n];
      const std::uint64_t h = fnv1a64(norm.data() + lo, hi - lo) ^ cfg.hash_seed;
      v[static_cast<Eigen::Index>(h & mask)] += 1.0;
    }
  }
  const double nrm = v.norm();
  if (nrm > 0.0) v /= nrm;
  return v;
}

std::unordered_map<std::string, FeatureVector> load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);

  auto split_tabs = [](const std::string& line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) {
        fields.emplace_back(line.data() + pos, line.size() - pos);
        break;
      }
      fields.emplace_back(line.data() + pos, tab - pos);
      pos = tab + 1;
    }
    return fields;
  };

  std::string line;
  if (!std::getline(in, line)) throw DataError("embedding file is empty: " + path);
  auto header = split_tabs(line);
  std::size_t dim = 0;
  if (header.size() == 2 && header[0] == "id" && header[1].starts_with("dim=")) {
    const auto ds = header[1].substr(4);
    auto [p, ec] = std::from_chars(ds.data(), ds.data() + ds.size(), dim);
    if (ec != std::errc{} || p != ds.data() + ds.size() || dim == 0) dim = 0;
  }
  if (dim == 0) throw DataError("embedding file line 1: expected header 'id<TAB>dim=D'");

  std::unordered_map<std::string, FeatureVector> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != dim + 1) {
      throw DataError("embedding file line " + std::to_string(lineno) + ": expected " +
                      std::to_string(dim) + " values, got " + std::to_string(fields.size() - 1));
    }
    std::string id(fields[0]);
    if (out.count(id)) {
      throw DataError("embedding file line " + std::to_string(lineno) + ": duplicate id '" + id +
                      "'");
    }
    FeatureVector vec(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      double val = 0.0;
      const auto f = fields[j + 1];
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), val);
      if (ec != std::errc{} || p != f.data() + f.size() || !std::isfinite(val)) {
        throw DataError("embedding file line " + std::to_string(lineno) +
                        ": malformed value in column " + std::to_string(j + 1));
      }
      vec[static_cast<Eigen::Index>(j)] = val;
    }
    out.emplace(std::move(id), std::move(vec));
  }
  return out;
}

}  // namespace geovmf
