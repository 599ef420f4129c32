#pragma once

#include <array>
#include <compare>
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
#include "taxemb/encoder.hpp"

namespace taxemb {

enum class Relation { SocCar = 0, CarCar = 1, JobSoc = 2, JobCar = 3 };

inline constexpr std::array<Relation, 4> kAllRelations = {Relation::SocCar, Relation::CarCar,
                                                          Relation::JobSoc, Relation::JobCar};

/// "SocCar", "CarCar", "JobSoc", "JobCar".
std::string_view relation_name(Relation r);
/// Short kebab form used in file names: "soc-car", ...
std::string_view relation_slug(Relation r);
/// Accepts either spelling, case-insensitive.
Relation parse_relation(std::string_view text);

struct Triplet {
  Relation relation = Relation::SocCar;
  std::string anchor;
  std::string positive;
  std::string negative;

  auto operator<=>(const Triplet&) const = default;
};

enum class MiningMode { Soft, Hard };

MiningMode parse_mining_mode(std::string_view text);
std::string_view mining_mode_name(MiningMode mode);

struct MinerConfig {
  std::size_t n_neg = 1;
  MiningMode mode = MiningMode::Soft;
  std::uint64_t seed = 0;
};

struct MiningResult {
  std::vector<Triplet> triplets;
  /// Positive links skipped because no legal negative exists.
  std::size_t skipped_links = 0;
};

/// Everything needed to enumerate links and check triplet invariants.
/// Holds references; the referenced objects must outlive it.
class LinkContext {
 public:
  LinkContext(const Taxonomy& taxonomy, const SimilarityGraph& graph, std::span<const JobRecord> jobs);

  const Taxonomy& taxonomy() const { return taxonomy_; }
  const SimilarityGraph& graph() const { return graph_; }
  std::span<const JobRecord> jobs() const { return jobs_; }
  const JobRecord* find_job(std::string_view id) const;

  /// Throws ValidationError naming the violated invariant.
  void validate(const Triplet& t) const;

 private:
  const Taxonomy& taxonomy_;
  const SimilarityGraph& graph_;
  std::span<const JobRecord> jobs_;
  std::unordered_map<std::string, std::size_t> job_lookup_;
};

/// Negatives drawn uniformly without replacement from each link's complement.
MiningResult mine_soft(Relation relation, const LinkContext& ctx, const MinerConfig& config);

/// Negatives are the top-n_neg complement items by cosine between the
/// encoded query text and each candidate's encoded signature; ties go to the
/// lower id. The query is the SOC signature (SocCar), the anchor Carotene's
/// signature (CarCar) or the concatenated job text (JobSoc, JobCar).
MiningResult mine_hard(Relation relation, const LinkContext& ctx, const MinerConfig& config,
                       const TextEncoder& encoder);

/// Dispatches on config.mode; `encoder` is only used in hard mode.
MiningResult mine(Relation relation, const LinkContext& ctx, const MinerConfig& config,
                  const TextEncoder& encoder);

/// Tab-separated `relation<TAB>anchor<TAB>positive<TAB>negative`.
void save_triplets(const std::filesystem::path& path, std::span<const Triplet> triplets);
/// Parses and re-validates every triplet against `ctx`.
std::vector<Triplet> load_triplets(const std::filesystem::path& path, const LinkContext& ctx);

/// Triplet with ids resolved to row indices. For job relations the anchor
/// indexes the job table the store was resolved against.
struct IndexedTriplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;

  bool operator==(const IndexedTriplet&) const = default;
};

class TripletStore {
 public:
  TripletStore() = default;

  /// `job_ids` gives the row order of the job table used for job anchors.
  static TripletStore resolve(std::span<const Triplet> triplets, const Taxonomy& taxonomy,
                              std::span<const std::string> job_ids);

  std::vector<IndexedTriplet>& of(Relation r) { return by_relation_[static_cast<std::size_t>(r)]; }
  const std::vector<IndexedTriplet>& of(Relation r) const {
    return by_relation_[static_cast<std::size_t>(r)];
  }
  std::size_t size() const;

 private:
  std::array<std::vector<IndexedTriplet>, 4> by_relation_;
};

/// min(n_sample, store_size) distinct positions in [0, store_size), uniform.
std::vector<std::size_t> sample_positions(std::size_t store_size, std::size_t n_sample, Rng& rng);

/// Uniform sample without replacement; empty when the store is empty.
std::vector<IndexedTriplet> sample_batch(const TripletStore& store, Relation relation, std::size_t n_sample,
                                         Rng& rng);

}  // namespace taxemb
