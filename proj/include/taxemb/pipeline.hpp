#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "taxemb/corpus.hpp"
#include "taxemb/encoder.hpp"
#include "taxemb/evaluator.hpp"
#include "taxemb/model.hpp"
#include "taxemb/synth.hpp"
#include "taxemb/trainer.hpp"
#include "taxemb/triplets.hpp"

namespace taxemb {

/// Every knob of a run. All component seeds are derived from `seed`.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  SynthConfig synth;
  EncoderConfig encoder;
  MiningMode mining_mode = MiningMode::Hard;
  /// n_neg per relation in kAllRelations order (SocCar, CarCar, JobSoc, JobCar).
  std::array<std::size_t, 4> n_neg = {200, 200, 15, 200};
  InitMode init = InitMode::Random;
  TrainConfig train;
  Decoding decoding = Decoding::Independent;
  /// Optional tab-separated job vectors used instead of the built-in encoder.
  std::string precomputed_vectors;

  /// Overwrites component seeds with values derived from `seed`.
  void derive_seeds();
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
/// Missing keys keep their current value, so a partial document layers on
/// top of the defaults.
void merge_json(ExperimentConfig& c, const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Parses "l3,l4" / "3,4" / "λ3" style lists into 1-based component indices.
std::vector<std::size_t> parse_components(std::string_view text);

/// A corpus directory as written by write_corpus().
struct CorpusData {
  Taxonomy taxonomy;
  SimilarityGraph graph;
  std::array<std::vector<JobRecord>, 3> splits;

  const std::vector<JobRecord>& split(Split s) const { return splits[static_cast<std::size_t>(s)]; }
};

CorpusData load_corpus_dir(const std::filesystem::path& dir);

/// Encoder with IDF fitted on all signatures plus the training split.
TextEncoder make_encoder(const ExperimentConfig& cfg, const CorpusData& data);

/// Job table for one split, from the encoder or from cfg.precomputed_vectors.
LabeledJobs job_table(const ExperimentConfig& cfg, const CorpusData& data, const TextEncoder& encoder, Split split);

std::string triplet_file(Relation r);
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kHistoryFile = "history.jsonl";

/// Loads whichever triplet files exist in `dir` (job anchors resolved
/// against the training split) into a store.
TripletStore load_triplet_dir(const std::filesystem::path& dir, const CorpusData& data);

/// Exclusive advisory lock on an output directory, released on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Record written next to a command's outputs.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  double wall_seconds = 0.0;

  /// manifest.<command>.json in `dir`, with FNV-1a digests of every file.
  void write(const std::filesystem::path& dir) const;
};

std::string file_digest(const std::filesystem::path& path);

struct MineSummary {
  std::map<Relation, std::size_t> counts;
  std::map<Relation, std::size_t> skipped;
};

// The cmd_* operations. Each writes into `out` and returns its manifest.
RunManifest cmd_synth(const ExperimentConfig& cfg, const std::filesystem::path& out);
RunManifest cmd_mine(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                     const std::vector<Relation>& relations, const std::filesystem::path& out,
                     MineSummary* summary = nullptr);
RunManifest cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                      const std::filesystem::path& triplet_dir, const std::filesystem::path& out,
                      TrainResult* result = nullptr);
RunManifest cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                     const std::filesystem::path& data_dir, const std::filesystem::path& triplet_dir, Split split,
                     const std::filesystem::path& out, MetricsReport* report = nullptr);
RunManifest cmd_ablate(const ExperimentConfig& cfg, const std::vector<std::size_t>& components,
                       const std::filesystem::path& data_dir, const std::filesystem::path& triplet_dir, Split split,
                       const std::filesystem::path& out, std::vector<AblationRow>* rows = nullptr);

enum class ExportKind { Embeddings, Projection };
ExportKind parse_export_kind(std::string_view text);

RunManifest cmd_export(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                       const std::filesystem::path& data_dir, ExportKind kind, const std::filesystem::path& out);

nlohmann::ordered_json to_json(const EpochRecord& rec);
nlohmann::ordered_json to_json(const AblationRow& row);

}  // namespace taxemb
