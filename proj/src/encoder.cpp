#include "taxemb/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

#include "io_util.hpp"

namespace taxemb {

void EncoderConfig::validate() const {
  if (dim < 2) throw std::invalid_argument("encoder dim must be >= 2");
  if (buckets < dim) throw std::invalid_argument("encoder buckets must be >= dim");
}

std::string concat_features(const JobRecord& job) {
  std::string out;
  for (const std::string* field : {&job.title, &job.description, &job.location, &job.salary}) {
    const std::string_view v = trim(*field);
    if (v.empty()) continue;
    if (!out.empty()) out += ' ';
    out += v;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

TextEncoder::TextEncoder(EncoderConfig config) : config_(config) { config_.validate(); }

std::size_t TextEncoder::bucket_of(std::string_view token) const {
  std::uint64_t state = fnv1a64(token) ^ config_.seed;
  return static_cast<std::size_t>(splitmix64(state) % config_.buckets);
}

void TextEncoder::fit_idf(std::span<const std::string> documents) {
  std::unordered_map<std::size_t, std::size_t> df;
  for (const auto& doc : documents) {
    std::set<std::size_t> seen;
    for (const auto& tok : tokenize(doc)) seen.insert(bucket_of(tok));
    for (std::size_t b : seen) ++df[b];
  }
  const double n = static_cast<double>(documents.size());
  idf_.clear();
  for (const auto& [b, count] : df) {
    idf_[b] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
  }
  // Buckets never seen during fitting get the rarest-possible weight.
  default_idf_ = std::log(1.0 + n) + 1.0;
}

std::unordered_map<std::size_t, double> TextEncoder::hashed_weights(std::string_view text) const {
  std::unordered_map<std::size_t, double> w;
  for (const auto& tok : tokenize(text)) w[bucket_of(tok)] += 1.0;
  if (fitted()) {
    for (auto& [b, v] : w) {
      const auto it = idf_.find(b);
      v *= it == idf_.end() ? default_idf_ : it->second;
    }
  }
  return w;
}

Vector TextEncoder::encode(std::string_view text) const {
  const std::size_t q = config_.dim;
  Vector out(q, 0.0);
  const auto weights = hashed_weights(text);
  if (weights.empty()) return out;

  // Accumulate in bucket order so the floating-point sum is independent of
  // hash-map iteration order.
  std::vector<std::pair<std::size_t, double>> ordered(weights.begin(), weights.end());
  std::sort(ordered.begin(), ordered.end());
  const double scale = 1.0 / std::sqrt(static_cast<double>(q));
  for (const auto& [bucket, weight] : ordered) {
    std::uint64_t state = config_.seed * 0x2545f4914f6cdd1dULL + bucket;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < q; ++i) {
      if (i % 64 == 0) bits = splitmix64(state);
      out[i] += ((bits >> (i % 64)) & 1U) ? weight * scale : -weight * scale;
    }
  }
  const double norm = l2_norm(out);
  if (norm == 0.0) return Vector(q, 0.0);
  for (double& x : out) x /= norm;
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine: length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb) + kCosineEps);
}

std::vector<JobVector> load_precomputed(const std::filesystem::path& path, std::size_t expected_dim) {
  auto in = open_input(path);
  std::vector<JobVector> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = expected_dim;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(lineno) + ": ";
    const auto cols = split(line, '\t');
    if (cols.size() < 2 || cols[0].empty()) throw ParseError(ctx + "expected id followed by values");
    const std::size_t got = cols.size() - 1;
    if (dim == 0) dim = got;
    if (got != dim) {
      throw DimensionError(ctx + "dimension mismatch: expected " + std::to_string(dim) + " values, got " +
                           std::to_string(got));
    }
    JobVector jv{std::string(cols[0]), Vector(dim)};
    for (std::size_t i = 0; i < dim; ++i) {
      double v = 0.0;
      try {
        v = parse_double(cols[i + 1]);
      } catch (const ParseError& e) {
        throw ParseError(ctx + e.what());
      }
      if (!std::isfinite(v)) throw ValidationError(ctx + "non-finite value");
      jv.vec[i] = v;
    }
    if (!ids.insert(jv.id).second) throw ValidationError(ctx + "duplicate id '" + jv.id + "'");
    out.push_back(std::move(jv));
  }
  return out;
}

void save_precomputed(const std::filesystem::path& path, std::span<const JobVector> vectors) {
  auto out = open_output(path);
  for (const auto& jv : vectors) {
    out << jv.id;
    for (double v : jv.vec) out << '\t' << format_double(v);
    out << '\n';
  }
  finish_output(out, path);
}

}  // namespace taxemb
