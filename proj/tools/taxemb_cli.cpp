// taxemb: generate -> mine -> train -> evaluate -> ablate -> export.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taxemb/pipeline.hpp"

namespace fs = std::filesystem;
using namespace taxemb;

namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int fail(std::string_view kind, const std::string& message) {
  std::cerr << "error: " << kind << ": " << one_line(message) << '\n';
  return 1;
}

struct TrainOverrides {
  std::optional<double> lr;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> n_sample;
  std::optional<double> margin;
  std::optional<std::string> lambda;
  std::optional<std::string> init;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--epochs", epochs, "Maximum epochs");
    cmd->add_option("--batch-size", batch_size, "Jobs per batch");
    cmd->add_option("--patience", patience, "Early-stopping patience (epochs)");
    cmd->add_option("--n-sample", n_sample, "Triplets sampled per relation per batch");
    cmd->add_option("--margin", margin, "Hinge margin");
    cmd->add_option("--lambda", lambda, "Six comma-separated loss weights");
    cmd->add_option("--init", init, "random | text");
  }

  void apply(ExperimentConfig& cfg) const {
    if (lr) cfg.train.learning_rate = *lr;
    if (epochs) cfg.train.max_epochs = *epochs;
    if (batch_size) cfg.train.batch_size = *batch_size;
    if (patience) cfg.train.patience = *patience;
    if (n_sample) cfg.train.n_sample = *n_sample;
    if (margin) cfg.train.weights.margin = *margin;
    if (init) cfg.init = parse_init_mode(*init);
    if (lambda) {
      const auto parts = split(*lambda, ',');
      if (parts.size() != 6) throw ParseError("--lambda needs exactly six values");
      for (std::size_t i = 0; i < 6; ++i) cfg.train.weights.lambda[i] = parse_double(parts[i]);
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint job / SOC / Carotene embedding trainer"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::size_t> dim;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Root seed for every random choice");
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--q", dim, "Embedding dimension");

  std::string data_dir, triplet_dir, checkpoint, split_text = "val", mode, relation_text = "all", zero_text, kind;
  std::optional<std::size_t> n_neg;
  bool constrained = false;
  TrainOverrides overrides;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  std::optional<double> noise;
  synth->add_option("--noise", noise, "Off-topic token rate");

  auto* mine_cmd = app.add_subcommand("mine", "Mine triplets from a corpus");
  mine_cmd->add_option("--data", data_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  mine_cmd->add_option("--relation", relation_text, "soc-car | car-car | job-soc | job-car | all (comma list ok)");
  mine_cmd->add_option("--mode", mode, "soft | hard");
  mine_cmd->add_option("--n-neg", n_neg, "Negatives per positive link");

  auto* train_cmd = app.add_subcommand("train", "Train embeddings and heads");
  train_cmd->add_option("--data", data_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--triplets", triplet_dir, "Directory of triplet files")->required()->check(CLI::ExistingDirectory);
  overrides.add_to(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--triplets", triplet_dir, "Triplet directory for TRA");
  eval_cmd->add_option("--split", split_text, "train | val | test");
  eval_cmd->add_flag("--constrained", constrained, "Restrict the Carotene argmax to children of the predicted SOC");

  auto* ablate_cmd = app.add_subcommand("ablate", "Retrain with loss components zeroed");
  ablate_cmd->add_option("--data", data_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--triplets", triplet_dir, "Directory of triplet files")->required()->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--zero", zero_text, "Components to zero, e.g. l3,l4");
  ablate_cmd->add_option("--split", split_text, "train | val | test");
  overrides.add_to(ablate_cmd);

  auto* export_cmd = app.add_subcommand("export", "Export embeddings or a 2-D projection");
  export_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--data", data_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--kind", kind, "embeddings | projection")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_experiment_config(config_path);
    if (seed) cfg.seed = *seed;
    if (dim) cfg.encoder.dim = *dim;
    const fs::path out(out_dir);

    if (synth->parsed()) {
      if (noise) cfg.synth.noise_rate = *noise;
      cmd_synth(cfg, out);
      std::cout << "wrote corpus to " << out.string() << '\n';
    } else if (mine_cmd->parsed()) {
      if (!mode.empty()) cfg.mining_mode = parse_mining_mode(mode);
      std::vector<Relation> relations;
      for (std::string_view part : split(relation_text, ',')) {
        if (trim(part) == "all") {
          relations.assign(kAllRelations.begin(), kAllRelations.end());
        } else {
          relations.push_back(parse_relation(part));
        }
      }
      if (n_neg) {
        for (Relation r : relations) cfg.n_neg[static_cast<std::size_t>(r)] = *n_neg;
      }
      MineSummary summary;
      cmd_mine(cfg, data_dir, relations, out, &summary);
      for (const auto& [r, count] : summary.counts) {
        std::cout << relation_name(r) << '\t' << count << " triplets\t" << summary.skipped[r] << " skipped links\n";
      }
    } else if (train_cmd->parsed()) {
      overrides.apply(cfg);
      TrainResult result;
      cmd_train(cfg, data_dir, triplet_dir, out, &result);
      std::cout << "epochs " << result.history.size() << ", best epoch " << result.best_epoch
                << ", best val carotene accuracy " << result.state.best_metric << '\n';
    } else if (eval_cmd->parsed()) {
      if (constrained) cfg.decoding = Decoding::Constrained;
      MetricsReport rep;
      cmd_eval(cfg, checkpoint, data_dir, triplet_dir, parse_split(split_text), out, &rep);
      std::cout << to_json(rep).dump(2) << '\n';
    } else if (ablate_cmd->parsed()) {
      overrides.apply(cfg);
      std::vector<AblationRow> rows;
      cmd_ablate(cfg, parse_components(zero_text), data_dir, triplet_dir, parse_split(split_text), out, &rows);
      for (const auto& r : rows) {
        std::cout << r.label << "\tacc_soc=" << r.metrics.soc_accuracy << "\tacc_car=" << r.metrics.carotene_accuracy;
        for (const auto& [rel, v] : r.metrics.tra) std::cout << "\ttra_" << relation_slug(rel) << '=' << v;
        std::cout << '\n';
      }
    } else if (export_cmd->parsed()) {
      cmd_export(cfg, checkpoint, data_dir, parse_export_kind(kind), out);
      std::cout << "wrote " << kind << " to " << out.string() << '\n';
    }
  } catch (const ParseError& e) {
    return fail("parse", e.what());
  } catch (const ValidationError& e) {
    return fail("validation", e.what());
  } catch (const DimensionError& e) {
    return fail("dimension", e.what());
  } catch (const TrainingError& e) {
    return fail("training", e.what());
  } catch (const std::invalid_argument& e) {
    return fail("config", e.what());
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
  return 0;
}
