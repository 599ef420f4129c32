#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "taxemb/common.hpp"
#include "taxemb/evaluator.hpp"
#include "taxemb/model.hpp"
#include "taxemb/triplets.hpp"

namespace taxemb {

struct TrainConfig {
  LossWeights weights;
  double learning_rate = 1e-3;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 100;
  std::size_t patience = 3;
  std::size_t n_sample = 64;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct TrainState {
  ModelParams params;
  ModelParams first_moment;
  ModelParams second_moment;
  std::uint64_t step = 0;
  double best_metric = -1.0;
  std::size_t epochs_since_improvement = 0;
  Rng rng;

  static TrainState start(ModelParams params, std::uint64_t seed);
};

/// One bias-corrected Adam update of every parameter block. Throws
/// TrainingError naming the block if a gradient entry is not finite; the
/// state is left untouched in that case.
void adam_step(TrainState& state, const Gradients& grad, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown train_loss;  // mean over the epoch's batches
  double val_soc_accuracy = 0.0;
  double val_carotene_accuracy = 0.0;
  double best_val_carotene_accuracy = 0.0;
  std::map<Relation, double> tra;
  double seconds = 0.0;
};

struct TrainResult {
  TrainState state;          // final optimizer state
  ModelParams best_params;   // highest validation Carotene accuracy, earliest on ties
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  std::vector<EpochRecord> history;
};

/// Mini-batch Adam over shuffled training jobs. Every batch draws a fresh
/// sample of n_sample triplets for each relation with a positive weight.
/// Stops after max_epochs or once `patience` consecutive epochs fail to
/// improve validation Carotene accuracy.
TrainResult train(const ModelParams& initial, const LabeledJobs& train_jobs, const LabeledJobs& val_jobs,
                  const TripletStore& store, const Taxonomy& taxonomy, const TrainConfig& config);

struct AblationRow {
  std::string label;  // "full" or "-l3" style
  TrainConfig config;
  MetricsReport metrics;
  std::size_t epochs_run = 0;
};

/// Trains the base config and one variant per listed component (1-based
/// lambda index) with that weight set to zero. Classification metrics come
/// from `eval_jobs`; TRA from the store with `train_jobs` as job anchors.
std::vector<AblationRow> run_ablation(const TrainConfig& base, std::span<const std::size_t> zero_components,
                                      const ModelParams& initial, const LabeledJobs& train_jobs,
                                      const LabeledJobs& val_jobs, const LabeledJobs& eval_jobs,
                                      const TripletStore& store, const Taxonomy& taxonomy);

}  // namespace taxemb
