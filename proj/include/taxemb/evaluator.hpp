#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "taxemb/common.hpp"
#include "taxemb/corpus.hpp"
#include "taxemb/model.hpp"
#include "taxemb/triplets.hpp"

namespace taxemb {

enum class Decoding {
  Independent,  // each head argmaxed on its own
  Constrained,  // Carotene argmax restricted to children of the predicted SOC
};

struct MetricsReport {
  std::size_t job_count = 0;
  double soc_accuracy = 0.0;
  double carotene_accuracy = 0.0;
  double carotene_macro_precision = 0.0;
  double carotene_macro_recall = 0.0;
  double hierarchy_consistency = 0.0;
  Decoding decoding = Decoding::Independent;
  /// Only relations with a non-empty triplet set appear.
  std::map<Relation, double> tra;
};

struct Prediction {
  std::size_t soc = 0;
  std::size_t carotene = 0;
};

/// First index of the maximum.
std::size_t argmax(std::span<const double> values);

Prediction predict(const ModelParams& params, const Taxonomy& taxonomy, std::span<const double> job_vec,
                   Decoding decoding = Decoding::Independent);

struct MacroScores {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
};

/// Macro averages run over classes present in `truth`; a class that is
/// never predicted has precision 0.
MacroScores classification_scores(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

/// Fills the classification fields. Throws std::invalid_argument on an
/// empty job set.
MetricsReport evaluate_classification(const ModelParams& params, const LabeledJobs& jobs,
                                      const Taxonomy& taxonomy, Decoding decoding = Decoding::Independent);

/// Fraction of triplets with cos(anchor, positive) > cos(anchor, negative);
/// ties count as failures. `jobs` supplies anchors for job relations.
/// Throws std::invalid_argument on an empty list.
double tra(const ModelParams& params, const LabeledJobs& jobs, Relation relation,
           std::span<const IndexedTriplet> triplets);

/// Adds TRA for every non-empty relation in `store` to `report`.
void add_tra(MetricsReport& report, const ModelParams& params, const LabeledJobs& jobs, const TripletStore& store);

nlohmann::ordered_json to_json(const MetricsReport& report);
void save_metrics(const std::filesystem::path& path, const MetricsReport& report);

/// Top-two principal-component scores of the mean-centred rows. Each
/// component's largest-magnitude entry is made positive.
struct Projection2D {
  Matrix coords;      // rows x 2
  Matrix components;  // 2 x cols
  Vector mean;
  Vector variances;   // eigenvalues of the two components
};

Projection2D pca_2d(const Matrix& rows);

struct ProjectedNode {
  std::string id;
  std::string level;  // "SOC" or "CAR"
  std::string parent;
  double x = 0.0;
  double y = 0.0;
};

/// Projects stacked SOC and Carotene embeddings (SOCs first).
/// Throws DimensionError when q < 2.
std::vector<ProjectedNode> project_embeddings(const ModelParams& params, const Taxonomy& taxonomy);
/// Tab-separated `id, level, parent, x, y`; SOC rows have an empty parent.
void export_projection(const std::filesystem::path& path, const ModelParams& params, const Taxonomy& taxonomy);

}  // namespace taxemb
