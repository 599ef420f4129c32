#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "taxemb/common.hpp"
#include "taxemb/corpus.hpp"

namespace testing {

inline std::filesystem::path fixture_dir() { return std::filesystem::path(TAXEMB_TEST_DATA) / "fixture"; }

/// Fresh scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("taxemb_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// S1 -> {C1, C2, C3}, S2 -> {C4, C5, C6}.
inline taxemb::Taxonomy two_by_three() {
  using namespace taxemb;
  std::vector<SocNode> socs = {{"S1", "s one"}, {"S2", "s two"}};
  std::vector<CaroteneNode> cars;
  for (int k = 1; k <= 6; ++k) {
    cars.push_back({"C" + std::to_string(k), k <= 3 ? "S1" : "S2", "c" + std::to_string(k)});
  }
  return Taxonomy(socs, cars);
}

inline taxemb::Vector random_vector(taxemb::Rng& rng, std::size_t q, double lo = -1.0, double hi = 1.0) {
  taxemb::Vector v(q);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace testing
