#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "taxemb/common.hpp"

namespace taxemb {

struct JobRecord {
  std::string id;
  std::string title;
  std::string description;
  std::string location;
  std::string salary;
  std::string soc;
  std::string carotene;

  bool operator==(const JobRecord&) const = default;
};

struct SocNode {
  std::string id;
  std::string signature;

  bool operator==(const SocNode&) const = default;
};

struct CaroteneNode {
  std::string id;
  std::string parent;
  std::string signature;

  bool operator==(const CaroteneNode&) const = default;
};

/// Two-level taxonomy. Nodes are stored in ascending id order, and that
/// order defines the row index of each node in every parameter matrix.
class Taxonomy {
 public:
  Taxonomy() = default;
  /// Validates and sorts. Throws ValidationError on duplicate ids, empty
  /// levels, or a Carotene whose parent is not a known SOC.
  Taxonomy(std::vector<SocNode> socs, std::vector<CaroteneNode> carotenes);

  std::size_t soc_count() const { return socs_.size(); }
  std::size_t carotene_count() const { return carotenes_.size(); }

  const std::vector<SocNode>& socs() const { return socs_; }
  const std::vector<CaroteneNode>& carotenes() const { return carotenes_; }

  std::optional<std::size_t> soc_index(std::string_view id) const;
  std::optional<std::size_t> carotene_index(std::string_view id) const;
  std::size_t require_soc(std::string_view id) const;
  std::size_t require_carotene(std::string_view id) const;

  std::size_t parent_of(std::size_t carotene) const { return parent_[carotene]; }
  /// Carotene indices under a SOC, ascending.
  const std::vector<std::size_t>& children_of(std::size_t soc) const { return children_[soc]; }
  bool is_child(std::size_t soc, std::size_t carotene) const { return parent_[carotene] == soc; }

  /// Hash of the SOC and Carotene id sequences; guards checkpoints against
  /// being loaded with a differently ordered taxonomy.
  std::uint64_t id_order_hash() const;

  bool operator==(const Taxonomy& other) const {
    return socs_ == other.socs_ && carotenes_ == other.carotenes_;
  }

 private:
  std::vector<SocNode> socs_;
  std::vector<CaroteneNode> carotenes_;
  std::vector<std::size_t> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::unordered_map<std::string, std::size_t> soc_lookup_;
  std::unordered_map<std::string, std::size_t> carotene_lookup_;
};

/// Directed Carotene -> Carotene edges, stored by Carotene index.
class SimilarityGraph {
 public:
  static constexpr std::size_t kMaxOutDegree = 5;

  SimilarityGraph() = default;
  /// Throws ValidationError on self-loops or out-degree above the cap.
  /// Duplicate edges collapse.
  SimilarityGraph(std::size_t node_count, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t node_count() const { return out_.size(); }
  std::size_t edge_count() const;
  const std::vector<std::size_t>& out_neighbors(std::size_t node) const { return out_[node]; }
  bool has_edge(std::size_t src, std::size_t dst) const;
  /// All edges ordered by (src, dst).
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  bool operator==(const SimilarityGraph&) const = default;

 private:
  std::vector<std::vector<std::size_t>> out_;
};

struct Dataset {
  std::vector<JobRecord> jobs;
  Taxonomy taxonomy;
  SimilarityGraph graph;
};

/// Carotene ids whose parent is `soc`. Throws ValidationError on an unknown id.
std::vector<std::string> children(const Taxonomy& taxonomy, std::string_view soc);

struct DegreeStats {
  std::size_t soc_count = 0;
  std::size_t carotene_count = 0;
  std::size_t min_branching = 0;
  std::size_t max_branching = 0;
  double avg_branching = 0.0;
  std::size_t edge_count = 0;
  /// out-degree -> number of Carotenes with that out-degree
  std::map<std::size_t, std::size_t> out_degree_histogram;
};

DegreeStats degree_stats(const Taxonomy& taxonomy, const SimilarityGraph& graph);

// Readers. Error messages carry "<source>:<line>:" prefixes.
Taxonomy read_taxonomy(std::istream& in, std::string_view source = "taxonomy");
std::vector<JobRecord> read_jobs(std::istream& in, const Taxonomy& taxonomy,
                                 std::string_view source = "jobs");
SimilarityGraph read_graph(std::istream& in, const Taxonomy& taxonomy,
                           std::string_view source = "graph");

Taxonomy load_taxonomy(const std::filesystem::path& path);
std::vector<JobRecord> load_jobs(const std::filesystem::path& path, const Taxonomy& taxonomy);
SimilarityGraph load_graph(const std::filesystem::path& path, const Taxonomy& taxonomy);
Dataset load_dataset(const std::filesystem::path& jobs_path, const std::filesystem::path& taxonomy_path,
                     const std::filesystem::path& graph_path);

void write_taxonomy(std::ostream& out, const Taxonomy& taxonomy);
void write_jobs(std::ostream& out, std::span<const JobRecord> jobs);
void write_graph(std::ostream& out, const SimilarityGraph& graph, const Taxonomy& taxonomy);

void save_taxonomy(const std::filesystem::path& path, const Taxonomy& taxonomy);
void save_jobs(const std::filesystem::path& path, std::span<const JobRecord> jobs);
void save_graph(const std::filesystem::path& path, const SimilarityGraph& graph, const Taxonomy& taxonomy);

}  // namespace taxemb
