#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "taxemb/corpus.hpp"

namespace taxemb {

/// Desk-scale synthetic corpus settings. Defaults give 5 SOCs x 4
/// Carotenes with 10 jobs each.
struct SynthConfig {
  std::size_t soc_count = 5;
  std::size_t carotene_count = 20;
  std::size_t jobs_per_carotene = 10;
  std::size_t min_branching = 4;
  std::size_t max_branching = 4;
  std::size_t sim_out_degree = 3;
  /// Topic words owned by each SOC and each Carotene.
  std::size_t vocab_per_node = 4;
  /// Words a Carotene signature borrows from each latent neighbour.
  std::size_t borrowed_tokens = 2;
  std::size_t title_tokens = 3;
  std::size_t description_tokens = 48;
  /// Probability that a job token is drawn off-topic.
  double noise_rate = 0.1;
  /// Share of on-topic job tokens taken from the parent SOC's vocabulary.
  double soc_token_rate = 0.5;
  std::array<double, 3> split = {0.6, 0.2, 0.2};
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SynthConfig& c);
void from_json(const nlohmann::json& j, SynthConfig& c);

enum class Split { Train = 0, Val = 1, Test = 2 };

Split parse_split(std::string_view text);
std::string_view split_name(Split s);

struct SynthCorpus {
  Taxonomy taxonomy;
  SimilarityGraph graph;
  std::vector<JobRecord> jobs;  // all jobs, id order
  std::array<std::vector<JobRecord>, 3> splits;

  const std::vector<JobRecord>& split(Split s) const { return splits[static_cast<std::size_t>(s)]; }
};

/// Deterministic in config.seed.
SynthCorpus generate(const SynthConfig& config);

/// Random partition with sizes round(N * r_train), round(N * r_val) and the
/// remainder; each part keeps id order.
std::array<std::vector<JobRecord>, 3> split_jobs(std::span<const JobRecord> jobs, const std::array<double, 3>& ratios,
                                                 std::uint64_t seed);

/// Pronounceable lowercase word, unique per index.
std::string synthetic_word(std::size_t index);

// File names used for a corpus directory.
inline constexpr const char* kTaxonomyFile = "taxonomy.json";
inline constexpr const char* kGraphFile = "graph.csv";
inline constexpr const char* kAllJobsFile = "jobs.jsonl";
std::string split_jobs_file(Split s);

void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus);

}  // namespace taxemb
