#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taxemb/common.hpp"
#include "taxemb/corpus.hpp"
#include "taxemb/encoder.hpp"
#include "taxemb/triplets.hpp"

namespace taxemb {

/// Trainable parameters. Label embeddings are stored one node per row;
/// the classifier heads map a q-dimensional job vector to logits through
/// `job_vec * head` (head is q x classes).
struct ModelParams {
  Matrix soc_emb;   // m x q
  Matrix car_emb;   // n x q
  Matrix soc_head;  // q x m
  Matrix car_head;  // q x n

  static ModelParams zeros(std::size_t m, std::size_t n, std::size_t q);
  ModelParams zeros_like() const { return zeros(m(), n(), q()); }

  std::size_t m() const { return soc_emb.rows(); }
  std::size_t n() const { return car_emb.rows(); }
  std::size_t q() const { return soc_emb.cols(); }

  std::array<Matrix*, 4> blocks() { return {&soc_emb, &car_emb, &soc_head, &car_head}; }
  std::array<const Matrix*, 4> blocks() const { return {&soc_emb, &car_emb, &soc_head, &car_head}; }
  static constexpr std::array<std::string_view, 4> kBlockNames = {"soc_emb", "car_emb", "soc_head", "car_head"};

  bool operator==(const ModelParams&) const = default;
};

/// Gradients share the parameter layout.
using Gradients = ModelParams;

enum class InitMode { Random, FromSignatureText };

InitMode parse_init_mode(std::string_view text);
std::string_view init_mode_name(InitMode mode);

inline constexpr double kInitRange = 0.05;

/// Random: every entry i.i.d. uniform in [-0.05, 0.05]. FromSignatureText:
/// embedding rows are the encoded signatures, heads random as above.
/// `encoder` is required (and its dim must equal q) in FromSignatureText mode.
ModelParams init_params(const Taxonomy& taxonomy, std::size_t q, InitMode mode, std::uint64_t seed,
                        const TextEncoder* encoder = nullptr);

/// lambda[0..5] weigh, in order: SOC cross-entropy, Carotene cross-entropy,
/// soc-car hinge, car-car hinge, job-soc hinge, job-car hinge.
struct LossWeights {
  std::array<double, 6> lambda = {0.3, 0.7, 0.3, 0.3, 0.3, 0.3};
  double margin = 0.4;

  void validate() const;
};

struct LossBreakdown {
  double l_soc = 0.0;
  double l_carotene = 0.0;
  double l_soc_car = 0.0;
  double l_car_car = 0.0;
  double l_job_soc = 0.0;
  double l_job_car = 0.0;
  double total = 0.0;
  /// Components with positive weight that had nothing to average over.
  std::size_t empty_components = 0;

  std::array<double, 6> components() const {
    return {l_soc, l_carotene, l_soc_car, l_car_car, l_job_soc, l_job_car};
  }
};

/// Job vectors with their label indices. Row i of `vectors` is job i.
struct LabeledJobs {
  std::vector<std::string> ids;
  Matrix vectors;
  std::vector<std::size_t> soc;
  std::vector<std::size_t> carotene;

  std::size_t size() const { return ids.size(); }
};

/// Encodes jobs and resolves their labels against `taxonomy`.
LabeledJobs encode_jobs(std::span<const JobRecord> jobs, const Taxonomy& taxonomy, const TextEncoder& encoder);

/// One optimization batch: job rows (into a LabeledJobs table) for the
/// classification terms and sampled triplets for each hinge term.
struct Batch {
  std::vector<std::size_t> jobs;
  std::array<std::vector<IndexedTriplet>, 4> triplets;

  std::vector<IndexedTriplet>& of(Relation r) { return triplets[static_cast<std::size_t>(r)]; }
  const std::vector<IndexedTriplet>& of(Relation r) const { return triplets[static_cast<std::size_t>(r)]; }
};

/// Max-subtracted softmax.
Vector softmax(std::span<const double> logits);
/// Logits `job_vec * head`.
Vector head_logits(const Matrix& head, std::span<const double> job_vec);
/// (SOC probabilities, Carotene probabilities).
std::pair<Vector, Vector> classify(const ModelParams& params, std::span<const double> job_vec);

inline constexpr double kLogEps = 1e-12;

/// -log(probs[true_index] + 1e-12).
double ce_loss(std::span<const double> probs, std::size_t true_index);

/// max(0, margin - cos(anchor, pos) + cos(anchor, neg)).
double margin_triplet_loss(std::span<const double> anchor, std::span<const double> pos,
                           std::span<const double> neg, double margin);

/// -log(exp<a,p> / (exp<a,p> + sum_i exp<a,n_i>)), evaluated with log-sum-exp.
double contrastive_loss_nomargin(std::span<const double> anchor, std::span<const double> pos,
                                 std::span<const Vector> negatives);

/// Mean of each component over the batch and the weighted total. A
/// component with nothing to average is 0 and counted in empty_components
/// when its weight is positive.
LossBreakdown total_loss(const ModelParams& params, const LabeledJobs& jobs, const Batch& batch,
                         const LossWeights& weights);

/// Analytic gradient of total_loss.total. Job vectors are constants. At a
/// hinge value of exactly zero the subgradient 0 is used.
Gradients grad_total_loss(const ModelParams& params, const LabeledJobs& jobs, const Batch& batch,
                          const LossWeights& weights);

/// Both in one pass; the trainer uses this.
std::pair<LossBreakdown, Gradients> loss_and_grad(const ModelParams& params, const LabeledJobs& jobs,
                                                  const Batch& batch, const LossWeights& weights);

/// Binary checkpoint: magic, m, n, q, taxonomy id-order hash, then the four
/// matrices as row-major little-endian float64.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, std::uint64_t id_order_hash);
/// Throws ValidationError if `expected_hash` is nonzero and does not match.
ModelParams load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash = 0);

}  // namespace taxemb
