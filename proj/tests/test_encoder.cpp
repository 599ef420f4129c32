#include <doctest.h>

#include <cmath>
#include <unordered_map>

#include "support.hpp"
#include "taxemb/encoder.hpp"

using namespace taxemb;

namespace {

// Cosine of the hashed term-frequency vectors in bucket space. The random
// projection approximately preserves it, which is what the ordering check
// relies on.
double bucket_cosine(const TextEncoder& enc, std::string_view a, std::string_view b) {
  const auto wa = enc.hashed_weights(a);
  const auto wb = enc.hashed_weights(b);
  double ab = 0, aa = 0, bb = 0;
  for (const auto& [k, v] : wa) {
    aa += v * v;
    if (auto it = wb.find(k); it != wb.end()) ab += v * it->second;
  }
  for (const auto& [k, v] : wb) bb += v * v;
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("concat_features") {
  JobRecord j;
  CHECK(concat_features(j) == "");
  j.title = "A";
  j.description = "B";
  CHECK(concat_features(j) == "A B");
  j = {"J1", "Crane Operator", "operate tower crane", "Denver", "61000", "S1", "C1"};
  CHECK(concat_features(j) == "Crane Operator operate tower crane Denver 61000");
  j.description.clear();
  CHECK(concat_features(j) == "Crane Operator Denver 61000");
}

TEST_CASE("tokenize") {
  CHECK(tokenize("Crane-Operator, 2nd shift!") == std::vector<std::string>{"crane", "operator", "2nd", "shift"});
  CHECK(tokenize("  ").empty());
}

TEST_CASE("encode basics") {
  const TextEncoder enc(EncoderConfig{16, 1024, 3});
  const Vector empty = enc.encode("");
  CHECK(empty.size() == 16);
  CHECK(l2_norm(empty) == 0.0);
  CHECK(l2_norm(enc.encode(" \t ")) == 0.0);

  const Vector v = enc.encode("tax accountant");
  CHECK(v.size() == 16);
  CHECK(std::abs(l2_norm(v) - 1.0) < 1e-9);
  CHECK(enc.encode("tax accountant") == v);
  CHECK(TextEncoder(EncoderConfig{16, 1024, 3}).encode("tax accountant") == v);
  CHECK(TextEncoder(EncoderConfig{16, 1024, 4}).encode("tax accountant") != v);
}

TEST_CASE("encoder config validation") {
  CHECK_THROWS_AS(TextEncoder(EncoderConfig{1, 1024, 0}), std::invalid_argument);
  CHECK_THROWS_AS(TextEncoder(EncoderConfig{64, 32, 0}), std::invalid_argument);
}

TEST_CASE("related texts encode closer than unrelated ones") {
  const TextEncoder enc(EncoderConfig{64, std::size_t{1} << 15, 0});
  const std::string a = "crane technician", b = "crane technician repair", c = "tax accountant";
  // Oracle in bucket space: shared tokens versus none.
  const double oracle_ab = bucket_cosine(enc, a, b);
  const double oracle_ac = bucket_cosine(enc, a, c);
  CHECK(oracle_ab == doctest::Approx(2.0 / std::sqrt(2.0 * 3.0)));
  CHECK(oracle_ac == 0.0);
  CHECK(cosine(enc.encode(a), enc.encode(b)) > cosine(enc.encode(a), enc.encode(c)));
}

TEST_CASE("idf fitting downweights common tokens") {
  TextEncoder enc(EncoderConfig{8, 256, 1});
  const std::vector<std::string> docs = {"common alpha", "common beta", "common gamma"};
  enc.fit_idf(docs);
  CHECK(enc.fitted());
  const auto w = enc.hashed_weights("common alpha");
  CHECK(w.at(enc.bucket_of("common")) < w.at(enc.bucket_of("alpha")));
  // Smoothed idf: ln((1+3)/(1+3)) + 1 = 1 and ln(4/2) + 1.
  CHECK(w.at(enc.bucket_of("common")) == doctest::Approx(1.0));
  CHECK(w.at(enc.bucket_of("alpha")) == doctest::Approx(std::log(2.0) + 1.0));
}

TEST_CASE("cosine") {
  CHECK(cosine(Vector{1, 0}, Vector{0, 1}) == 0.0);
  CHECK(cosine(Vector{1, 0}, Vector{std::sqrt(0.5), std::sqrt(0.5)}) == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK(cosine(Vector{0, 0}, Vector{1, 1}) == 0.0);
  CHECK_THROWS_AS(cosine(Vector{1, 0}, Vector{1, 0, 0}), DimensionError);

  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    Vector a = testing::random_vector(rng, 7), b = testing::random_vector(rng, 7);
    const double n = l2_norm(a);
    for (auto& x : a) x /= n;
    CHECK(std::abs(cosine(a, a) - 1.0) < 1e-9);
    CHECK(cosine(a, b) == cosine(b, a));
    Vector scaled = a;
    for (auto& x : scaled) x *= 4.25;
    CHECK(std::abs(cosine(scaled, b) - cosine(a, b)) < 1e-9);
  }
}

TEST_CASE("precomputed vectors") {
  testing::TempDir tmp("vectors");
  SUBCASE("empty file") {
    testing::write_text(tmp / "v.tsv", "");
    CHECK(load_precomputed(tmp / "v.tsv").empty());
  }
  SUBCASE("round trip is bitwise") {
    Rng rng(5);
    std::vector<JobVector> vs;
    for (int i = 0; i < 4; ++i) vs.push_back({"J" + std::to_string(i), testing::random_vector(rng, 6)});
    vs[0].vec[0] = 1.0 / 3.0;
    save_precomputed(tmp / "v.tsv", vs);
    CHECK(load_precomputed(tmp / "v.tsv", 6) == vs);
  }
  SUBCASE("short line") {
    testing::write_text(tmp / "v.tsv", "J1\t1\t2\t3\nJ2\t1\t2\n");
    CHECK_THROWS_AS(load_precomputed(tmp / "v.tsv"), DimensionError);
    CHECK_THROWS_AS(load_precomputed(tmp / "v.tsv", 4), DimensionError);
  }
  SUBCASE("non-finite value and duplicate id") {
    testing::write_text(tmp / "v.tsv", "J1\t1\tnan\n");
    CHECK_THROWS(load_precomputed(tmp / "v.tsv"));
    testing::write_text(tmp / "v.tsv", "J1\t1\t2\nJ1\t3\t4\n");
    CHECK_THROWS_AS(load_precomputed(tmp / "v.tsv"), ValidationError);
  }
}
