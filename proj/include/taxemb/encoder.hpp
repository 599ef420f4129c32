#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "taxemb/common.hpp"
#include "taxemb/corpus.hpp"

namespace taxemb {

struct EncoderConfig {
  std::size_t dim = 64;
  std::size_t buckets = std::size_t{1} << 15;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless dim >= 2 and buckets >= dim.
  void validate() const;
};

struct JobVector {
  std::string id;
  Vector vec;

  bool operator==(const JobVector&) const = default;
};

/// Title, description, location and salary joined by single spaces; empty
/// fields are dropped rather than leaving doubled separators.
std::string concat_features(const JobRecord& job);

/// Lowercased maximal runs of ASCII alphanumerics.
std::vector<std::string> tokenize(std::string_view text);

/// Frozen text encoder: hashed TF-IDF over `buckets` dimensions followed by
/// a seeded +-1/sqrt(dim) random projection to `dim`, then L2 normalization.
///
/// Projection rows are regenerated from (seed, bucket) on demand, so the
/// encoder holds no mutable state and encode() is safe to call concurrently.
class TextEncoder {
 public:
  explicit TextEncoder(EncoderConfig config = {});

  const EncoderConfig& config() const { return config_; }
  std::size_t dim() const { return config_.dim; }

  /// Smoothed inverse document frequency, idf = ln((1 + N) / (1 + df)) + 1.
  /// Without fitting every bucket has weight 1 (plain term frequency).
  void fit_idf(std::span<const std::string> documents);
  bool fitted() const { return !idf_.empty(); }

  std::size_t bucket_of(std::string_view token) const;
  /// Sparse TF-IDF weights by bucket, before projection.
  std::unordered_map<std::size_t, double> hashed_weights(std::string_view text) const;
  /// Zero vector for text without tokens, unit L2 norm otherwise.
  Vector encode(std::string_view text) const;

 private:
  EncoderConfig config_;
  std::unordered_map<std::size_t, double> idf_;
  double default_idf_ = 1.0;
};

/// <a,b> / (|a||b| + 1e-12); 0 when either vector is all zeros.
/// Throws DimensionError on a length mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

inline constexpr double kCosineEps = 1e-12;

/// Tab-separated `id<TAB>f1<TAB>...<TAB>fq`. When expected_dim is 0 the
/// dimension is taken from the first line.
std::vector<JobVector> load_precomputed(const std::filesystem::path& path, std::size_t expected_dim = 0);
void save_precomputed(const std::filesystem::path& path, std::span<const JobVector> vectors);

}  // namespace taxemb
