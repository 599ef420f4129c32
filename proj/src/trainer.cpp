#include "taxemb/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace taxemb {

void TrainConfig::validate() const {
  weights.validate();
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (n_sample < 1) throw std::invalid_argument("n_sample must be >= 1");
}

TrainState TrainState::start(ModelParams params, std::uint64_t seed) {
  TrainState s;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  s.params = std::move(params);
  s.rng = Rng(seed);
  return s;
}

void adam_step(TrainState& state, const Gradients& grad, const TrainConfig& config) {
  const auto g_blocks = grad.blocks();
  const auto p_blocks = state.params.blocks();
  for (std::size_t b = 0; b < 4; ++b) {
    if (g_blocks[b]->rows() != p_blocks[b]->rows() || g_blocks[b]->cols() != p_blocks[b]->cols()) {
      throw DimensionError("gradient block '" + std::string(ModelParams::kBlockNames[b]) + "' has the wrong shape");
    }
    for (double v : g_blocks[b]->values()) {
      if (!std::isfinite(v)) {
        throw TrainingError("non-finite gradient in parameter block '" +
                            std::string(ModelParams::kBlockNames[b]) + "' at step " +
                            std::to_string(state.step + 1));
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  const auto m_blocks = state.first_moment.blocks();
  const auto v_blocks = state.second_moment.blocks();
  for (std::size_t b = 0; b < 4; ++b) {
    auto& theta = p_blocks[b]->values();
    auto& m = m_blocks[b]->values();
    auto& v = v_blocks[b]->values();
    const auto& g = g_blocks[b]->values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
  }
}

TrainResult train(const ModelParams& initial, const LabeledJobs& train_jobs, const LabeledJobs& val_jobs,
                  const TripletStore& store, const Taxonomy& taxonomy, const TrainConfig& config) {
  config.validate();
  TrainResult result{TrainState::start(initial, config.seed), initial, 0, {}};
  if (config.max_epochs == 0) return result;
  if (train_jobs.size() == 0) throw TrainingError("training split is empty");
  if (val_jobs.size() == 0) throw TrainingError("validation split is empty");
  for (Relation r : kAllRelations) {
    if (config.weights.lambda[2 + static_cast<std::size_t>(r)] > 0.0 && store.of(r).empty()) {
      throw TrainingError("missing " + std::string(relation_name(r)) + " triplets for an active loss weight");
    }
  }

  TrainState& state = result.state;
  std::vector<std::size_t> order(train_jobs.size());
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    state.rng.shuffle(order);

    EpochRecord rec;
    rec.epoch = epoch;
    std::array<double, 6> comp_sum{};
    double total_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      Batch batch;
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.jobs.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
      for (Relation r : kAllRelations) {
        if (config.weights.lambda[2 + static_cast<std::size_t>(r)] > 0.0) {
          batch.of(r) = sample_batch(store, r, config.n_sample, state.rng);
        }
      }
      auto [loss, grad] = loss_and_grad(state.params, train_jobs, batch, config.weights);
      if (!std::isfinite(loss.total)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      }
      adam_step(state, grad, config);
      const auto comps = loss.components();
      for (std::size_t i = 0; i < 6; ++i) comp_sum[i] += comps[i];
      total_sum += loss.total;
      rec.train_loss.empty_components += loss.empty_components;
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    rec.train_loss.l_soc = comp_sum[0] * inv;
    rec.train_loss.l_carotene = comp_sum[1] * inv;
    rec.train_loss.l_soc_car = comp_sum[2] * inv;
    rec.train_loss.l_car_car = comp_sum[3] * inv;
    rec.train_loss.l_job_soc = comp_sum[4] * inv;
    rec.train_loss.l_job_car = comp_sum[5] * inv;
    rec.train_loss.total = total_sum * inv;

    const MetricsReport val = evaluate_classification(state.params, val_jobs, taxonomy);
    rec.val_soc_accuracy = val.soc_accuracy;
    rec.val_carotene_accuracy = val.carotene_accuracy;
    for (Relation r : {Relation::SocCar, Relation::CarCar}) {
      if (!store.of(r).empty()) rec.tra[r] = tra(state.params, train_jobs, r, store.of(r));
    }
    if (val.carotene_accuracy > state.best_metric) {
      state.best_metric = val.carotene_accuracy;
      state.epochs_since_improvement = 0;
      result.best_params = state.params;
      result.best_epoch = epoch;
    } else {
      ++state.epochs_since_improvement;
    }
    rec.best_val_carotene_accuracy = state.best_metric;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.push_back(std::move(rec));
    if (state.epochs_since_improvement >= config.patience) break;
  }
  return result;
}

std::vector<AblationRow> run_ablation(const TrainConfig& base, std::span<const std::size_t> zero_components,
                                      const ModelParams& initial, const LabeledJobs& train_jobs,
                                      const LabeledJobs& val_jobs, const LabeledJobs& eval_jobs,
                                      const TripletStore& store, const Taxonomy& taxonomy) {
  std::vector<std::pair<std::string, TrainConfig>> variants = {{"full", base}};
  for (std::size_t c : zero_components) {
    if (c < 1 || c > 6) throw std::invalid_argument("ablation component must be in 1..6");
    TrainConfig cfg = base;
    cfg.weights.lambda[c - 1] = 0.0;
    variants.emplace_back("-l" + std::to_string(c), cfg);
  }
  std::vector<AblationRow> rows;
  for (auto& [label, cfg] : variants) {
    const TrainResult tr = train(initial, train_jobs, val_jobs, store, taxonomy, cfg);
    AblationRow row{label, cfg, evaluate_classification(tr.best_params, eval_jobs, taxonomy), tr.history.size()};
    add_tra(row.metrics, tr.best_params, train_jobs, store);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace taxemb
