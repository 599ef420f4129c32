#include "taxemb/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cctype>
#include <chrono>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "io_util.hpp"

namespace taxemb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<double, 6> kAblationBestLambda = {0.3, 0.7, 0.3, 0.3, 0.3, 0.3};
constexpr std::array<double, 6> kTuningBestLambda = {0.3, 0.5, 0.3, 0.3, 0.3, 0.3};

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string decoding_name(Decoding d) { return d == Decoding::Independent ? "independent" : "constrained"; }

Decoding parse_decoding(std::string_view text) {
  const std::string t = lower(text);
  if (t == "independent") return Decoding::Independent;
  if (t == "constrained") return Decoding::Constrained;
  throw ParseError("unknown decoding '" + std::string(text) + "'");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

RunManifest begin_manifest(const char* command, const ExperimentConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.config = to_json(cfg);
  m.seed = cfg.seed;
  return m;
}

void add_corpus_inputs(RunManifest& m, const fs::path& data_dir) {
  m.inputs.push_back(data_dir / kTaxonomyFile);
  m.inputs.push_back(data_dir / kGraphFile);
  for (Split s : {Split::Train, Split::Val, Split::Test}) m.inputs.push_back(data_dir / split_jobs_file(s));
}

void add_triplet_inputs(RunManifest& m, const fs::path& dir) {
  for (Relation r : kAllRelations) {
    if (fs::exists(dir / triplet_file(r))) m.inputs.push_back(dir / triplet_file(r));
  }
}

ExperimentConfig resolved(ExperimentConfig cfg) {
  cfg.derive_seeds();
  cfg.validate();
  return cfg;
}

// Parameters for the current split tables: checkpoint + hash check.
ModelParams load_params(const fs::path& checkpoint, const CorpusData& data, const ExperimentConfig& cfg) {
  ModelParams p = load_checkpoint(checkpoint, data.taxonomy.id_order_hash());
  if (p.q() != cfg.encoder.dim) {
    throw DimensionError("checkpoint has q=" + std::to_string(p.q()) + " but encoder.dim=" +
                         std::to_string(cfg.encoder.dim));
  }
  return p;
}

}  // namespace

void ExperimentConfig::derive_seeds() {
  synth.seed = derive_seed(seed, "synth");
  encoder.seed = derive_seed(seed, "encoder");
  train.seed = derive_seed(seed, "train");
}

void ExperimentConfig::validate() const {
  synth.validate();
  encoder.validate();
  train.validate();
  for (std::size_t k : n_neg) {
    if (k < 1) throw std::invalid_argument("n_neg must be >= 1");
  }
}

json to_json(const ExperimentConfig& c) {
  json train = {{"lambda", c.train.weights.lambda},
                {"margin", c.train.weights.margin},
                {"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"patience", c.train.patience},
                {"n_sample", c.train.n_sample},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"adam_eps", c.train.adam_eps},
                {"init", init_mode_name(c.init)}};
  json n_neg = json::object();
  for (Relation r : kAllRelations) n_neg[std::string(relation_slug(r))] = c.n_neg[static_cast<std::size_t>(r)];
  return json{{"seed", c.seed},
              {"synth", c.synth},
              {"encoder", {{"dim", c.encoder.dim}, {"buckets", c.encoder.buckets}}},
              {"mining", {{"mode", mining_mode_name(c.mining_mode)}, {"n_neg", n_neg}}},
              {"train", train},
              {"eval", {{"decoding", decoding_name(c.decoding)}}},
              {"precomputed_vectors", c.precomputed_vectors}};
}

void merge_json(ExperimentConfig& c, const json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  const auto get = [](const json& obj, const char* key, auto& field) {
    if (obj.contains(key)) obj.at(key).get_to(field);
  };
  try {
    get(j, "seed", c.seed);
    get(j, "precomputed_vectors", c.precomputed_vectors);
    if (j.contains("synth")) {
      from_json(j.at("synth"), c.synth);
    }
    if (j.contains("encoder")) {
      get(j["encoder"], "dim", c.encoder.dim);
      get(j["encoder"], "buckets", c.encoder.buckets);
    }
    if (j.contains("mining")) {
      const json& mj = j["mining"];
      if (mj.contains("mode")) c.mining_mode = parse_mining_mode(mj["mode"].get<std::string>());
      if (mj.contains("n_neg")) {
        const json& nj = mj["n_neg"];
        if (nj.is_number()) {
          c.n_neg.fill(nj.get<std::size_t>());
        } else {
          for (auto it = nj.begin(); it != nj.end(); ++it) {
            c.n_neg[static_cast<std::size_t>(parse_relation(it.key()))] = it.value().get<std::size_t>();
          }
        }
      }
    }
    if (j.contains("train")) {
      const json& tj = j["train"];
      if (tj.contains("lambda_preset")) {
        const std::string preset = tj["lambda_preset"].get<std::string>();
        if (preset == "ablation-best") {
          c.train.weights.lambda = kAblationBestLambda;
        } else if (preset == "tuning-best") {
          c.train.weights.lambda = kTuningBestLambda;
        } else {
          throw ParseError("unknown lambda_preset '" + preset + "'");
        }
      }
      get(tj, "lambda", c.train.weights.lambda);
      get(tj, "margin", c.train.weights.margin);
      get(tj, "learning_rate", c.train.learning_rate);
      get(tj, "batch_size", c.train.batch_size);
      get(tj, "max_epochs", c.train.max_epochs);
      get(tj, "patience", c.train.patience);
      get(tj, "n_sample", c.train.n_sample);
      get(tj, "beta1", c.train.beta1);
      get(tj, "beta2", c.train.beta2);
      get(tj, "adam_eps", c.train.adam_eps);
      if (tj.contains("init")) c.init = parse_init_mode(tj["init"].get<std::string>());
    }
    if (j.contains("eval") && j["eval"].contains("decoding")) {
      c.decoding = parse_decoding(j["eval"]["decoding"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  auto in = open_input(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  merge_json(c, j);
  return c;
}

std::vector<std::size_t> parse_components(std::string_view text) {
  std::vector<std::size_t> out;
  for (std::string_view part : split(text, ',')) {
    std::string t = lower(trim(part));
    if (t.empty()) continue;
    for (std::string_view prefix : {"lambda", "\xce\xbb", "l", "-"}) {  // "\xce\xbb" is the UTF-8 lambda
      if (t.rfind(prefix, 0) == 0) t = t.substr(prefix.size());
    }
    if (t.size() != 1 || t[0] < '1' || t[0] > '6') {
      throw ParseError("unknown loss component '" + std::string(part) + "' (expected l1..l6)");
    }
    out.push_back(static_cast<std::size_t>(t[0] - '0'));
  }
  return out;
}

CorpusData load_corpus_dir(const fs::path& dir) {
  CorpusData d;
  d.taxonomy = load_taxonomy(dir / kTaxonomyFile);
  d.graph = load_graph(dir / kGraphFile, d.taxonomy);
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    d.splits[static_cast<std::size_t>(s)] = load_jobs(dir / split_jobs_file(s), d.taxonomy);
  }
  return d;
}

TextEncoder make_encoder(const ExperimentConfig& cfg, const CorpusData& data) {
  TextEncoder enc(cfg.encoder);
  std::vector<std::string> docs;
  for (const auto& s : data.taxonomy.socs()) docs.push_back(s.signature);
  for (const auto& c : data.taxonomy.carotenes()) docs.push_back(c.signature);
  for (const auto& j : data.split(Split::Train)) docs.push_back(concat_features(j));
  enc.fit_idf(docs);
  return enc;
}

LabeledJobs job_table(const ExperimentConfig& cfg, const CorpusData& data, const TextEncoder& encoder, Split split) {
  const auto& jobs = data.split(split);
  if (cfg.precomputed_vectors.empty()) return encode_jobs(jobs, data.taxonomy, encoder);

  const auto vecs = load_precomputed(cfg.precomputed_vectors, cfg.encoder.dim);
  std::unordered_map<std::string, const Vector*> by_id;
  for (const auto& jv : vecs) by_id.emplace(jv.id, &jv.vec);
  LabeledJobs out;
  out.vectors = Matrix(jobs.size(), cfg.encoder.dim);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto it = by_id.find(jobs[i].id);
    if (it == by_id.end()) {
      throw ValidationError(cfg.precomputed_vectors + ": no vector for job '" + jobs[i].id + "'");
    }
    out.ids.push_back(jobs[i].id);
    out.soc.push_back(data.taxonomy.require_soc(jobs[i].soc));
    out.carotene.push_back(data.taxonomy.require_carotene(jobs[i].carotene));
    std::ranges::copy(*it->second, out.vectors.row(i).begin());
  }
  return out;
}

std::string triplet_file(Relation r) { return "triplets." + std::string(relation_slug(r)) + ".tsv"; }

TripletStore load_triplet_dir(const fs::path& dir, const CorpusData& data) {
  const auto& train = data.split(Split::Train);
  const LinkContext ctx(data.taxonomy, data.graph, train);
  std::vector<Triplet> all;
  for (Relation r : kAllRelations) {
    const fs::path p = dir / triplet_file(r);
    if (!fs::exists(p)) continue;
    auto part = load_triplets(p, ctx);
    for (const auto& t : part) {
      if (t.relation != r) throw ValidationError(p.string() + ": holds a " + std::string(relation_name(t.relation)) + " triplet");
    }
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  std::vector<std::string> ids;
  for (const auto& j : train) ids.push_back(j.id);
  return TripletStore::resolve(all, data.taxonomy, ids);
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".taxemb.lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw Error("output directory '" + dir.string() + "' is locked by another run (" + path_.string() + ")");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string file_digest(const fs::path& path) {
  auto in = open_input(path, std::ios::in | std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return "fnv1a64:" + hex64(fnv1a64(ss.str()));
}

void RunManifest::write(const fs::path& dir) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  const auto files = [](const std::vector<fs::path>& paths) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : paths) arr.push_back({{"path", p.string()}, {"digest", file_digest(p)}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  j["wall_seconds"] = wall_seconds;
  const fs::path path = dir / ("manifest." + command + ".json");
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  finish_output(out, path);
}

RunManifest cmd_synth(const ExperimentConfig& config, const fs::path& out) {
  const Stopwatch clock;
  const ExperimentConfig cfg = resolved(config);
  OutputLock lock(out);
  RunManifest m = begin_manifest("synth", cfg);
  const SynthCorpus corpus = generate(cfg.synth);
  write_corpus(out, corpus);
  m.outputs = {out / kTaxonomyFile, out / kGraphFile, out / kAllJobsFile};
  for (Split s : {Split::Train, Split::Val, Split::Test}) m.outputs.push_back(out / split_jobs_file(s));
  m.wall_seconds = clock.seconds();
  m.write(out);
  return m;
}

RunManifest cmd_mine(const ExperimentConfig& config, const fs::path& data_dir, const std::vector<Relation>& relations,
                     const fs::path& out, MineSummary* summary) {
  const Stopwatch clock;
  const ExperimentConfig cfg = resolved(config);
  const CorpusData data = load_corpus_dir(data_dir);
  OutputLock lock(out);
  RunManifest m = begin_manifest("mine", cfg);
  add_corpus_inputs(m, data_dir);
  const TextEncoder encoder = make_encoder(cfg, data);
  const LinkContext ctx(data.taxonomy, data.graph, data.split(Split::Train));
  for (Relation r : relations) {
    MinerConfig mc;
    mc.mode = cfg.mining_mode;
    mc.n_neg = cfg.n_neg[static_cast<std::size_t>(r)];
    mc.seed = derive_seed(cfg.seed, "mine." + std::string(relation_slug(r)));
    const MiningResult res = mine(r, ctx, mc, encoder);
    const fs::path path = out / triplet_file(r);
    save_triplets(path, res.triplets);
    m.outputs.push_back(path);
    if (summary != nullptr) {
      summary->counts[r] = res.triplets.size();
      summary->skipped[r] = res.skipped_links;
    }
  }
  m.wall_seconds = clock.seconds();
  m.write(out);
  return m;
}

RunManifest cmd_train(const ExperimentConfig& config, const fs::path& data_dir, const fs::path& triplet_dir,
                      const fs::path& out, TrainResult* result) {
  const Stopwatch clock;
  const ExperimentConfig cfg = resolved(config);
  const CorpusData data = load_corpus_dir(data_dir);
  OutputLock lock(out);
  RunManifest m = begin_manifest("train", cfg);
  add_corpus_inputs(m, data_dir);
  add_triplet_inputs(m, triplet_dir);
  if (!cfg.precomputed_vectors.empty()) m.inputs.emplace_back(cfg.precomputed_vectors);

  const TextEncoder encoder = make_encoder(cfg, data);
  const LabeledJobs train_jobs = job_table(cfg, data, encoder, Split::Train);
  const LabeledJobs val_jobs = job_table(cfg, data, encoder, Split::Val);
  const TripletStore store = load_triplet_dir(triplet_dir, data);
  const ModelParams init =
      init_params(data.taxonomy, cfg.encoder.dim, cfg.init, derive_seed(cfg.seed, "init"), &encoder);
  TrainResult tr = train(init, train_jobs, val_jobs, store, data.taxonomy, cfg.train);

  save_checkpoint(out / kCheckpointFile, tr.best_params, data.taxonomy.id_order_hash());
  {
    auto hist = open_output(out / kHistoryFile);
    for (const auto& rec : tr.history) hist << to_json(rec).dump() << '\n';
    finish_output(hist, out / kHistoryFile);
  }
  MetricsReport val = evaluate_classification(tr.best_params, val_jobs, data.taxonomy, cfg.decoding);
  add_tra(val, tr.best_params, train_jobs, store);
  save_metrics(out / "metrics.val.json", val);
  m.outputs = {out / kCheckpointFile, out / kHistoryFile, out / "metrics.val.json"};
  if (result != nullptr) *result = std::move(tr);
  m.wall_seconds = clock.seconds();
  m.write(out);
  return m;
}

RunManifest cmd_eval(const ExperimentConfig& config, const fs::path& checkpoint, const fs::path& data_dir,
                     const fs::path& triplet_dir, Split split, const fs::path& out, MetricsReport* report) {
  const Stopwatch clock;
  const ExperimentConfig cfg = resolved(config);
  const CorpusData data = load_corpus_dir(data_dir);
  OutputLock lock(out);
  RunManifest m = begin_manifest("eval", cfg);
  add_corpus_inputs(m, data_dir);
  m.inputs.push_back(checkpoint);
  const ModelParams params = load_params(checkpoint, data, cfg);
  const TextEncoder encoder = make_encoder(cfg, data);
  const LabeledJobs jobs = job_table(cfg, data, encoder, split);
  MetricsReport rep = evaluate_classification(params, jobs, data.taxonomy, cfg.decoding);
  if (!triplet_dir.empty()) {
    add_triplet_inputs(m, triplet_dir);
    const LabeledJobs train_jobs = split == Split::Train ? jobs : job_table(cfg, data, encoder, Split::Train);
    add_tra(rep, params, train_jobs, load_triplet_dir(triplet_dir, data));
  }
  const fs::path path = out / ("metrics." + std::string(split_name(split)) + ".json");
  save_metrics(path, rep);
  m.outputs = {path};
  if (report != nullptr) *report = rep;
  m.wall_seconds = clock.seconds();
  m.write(out);
  return m;
}

RunManifest cmd_ablate(const ExperimentConfig& config, const std::vector<std::size_t>& components,
                       const fs::path& data_dir, const fs::path& triplet_dir, Split split, const fs::path& out,
                       std::vector<AblationRow>* rows_out) {
  const Stopwatch clock;
  const ExperimentConfig cfg = resolved(config);
  const CorpusData data = load_corpus_dir(data_dir);
  OutputLock lock(out);
  RunManifest m = begin_manifest("ablate", cfg);
  add_corpus_inputs(m, data_dir);
  add_triplet_inputs(m, triplet_dir);
  const TextEncoder encoder = make_encoder(cfg, data);
  const LabeledJobs train_jobs = job_table(cfg, data, encoder, Split::Train);
  const LabeledJobs val_jobs = job_table(cfg, data, encoder, Split::Val);
  const LabeledJobs eval_jobs = job_table(cfg, data, encoder, split);
  const TripletStore store = load_triplet_dir(triplet_dir, data);
  const ModelParams init =
      init_params(data.taxonomy, cfg.encoder.dim, cfg.init, derive_seed(cfg.seed, "init"), &encoder);
  auto rows = run_ablation(cfg.train, components, init, train_jobs, val_jobs, eval_jobs, store, data.taxonomy);

  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : rows) doc.push_back(to_json(r));
  const fs::path json_path = out / "ablation.json";
  {
    auto f = open_output(json_path);
    f << doc.dump(2) << '\n';
    finish_output(f, json_path);
  }
  const fs::path tsv_path = out / "ablation.tsv";
  {
    auto f = open_output(tsv_path);
    f << "label\tl1\tl2\tl3\tl4\tl5\tl6\tacc_soc\tacc_car\ttra_soc_car\ttra_car_car\n";
    for (const auto& r : rows) {
      f << r.label;
      for (double l : r.config.weights.lambda) f << '\t' << format_double(l);
      const auto tra_of = [&](Relation rel) {
        const auto it = r.metrics.tra.find(rel);
        return it == r.metrics.tra.end() ? std::string("-") : format_double(it->second);
      };
      f << '\t' << format_double(r.metrics.soc_accuracy) << '\t' << format_double(r.metrics.carotene_accuracy)
        << '\t' << tra_of(Relation::SocCar) << '\t' << tra_of(Relation::CarCar) << '\n';
    }
    finish_output(f, tsv_path);
  }
  m.outputs = {json_path, tsv_path};
  if (rows_out != nullptr) *rows_out = std::move(rows);
  m.wall_seconds = clock.seconds();
  m.write(out);
  return m;
}

ExportKind parse_export_kind(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "embeddings") return ExportKind::Embeddings;
  if (t == "projection") return ExportKind::Projection;
  throw ParseError("unknown export kind '" + std::string(text) + "'");
}

RunManifest cmd_export(const ExperimentConfig& config, const fs::path& checkpoint, const fs::path& data_dir,
                       ExportKind kind, const fs::path& out) {
  const Stopwatch clock;
  const ExperimentConfig cfg = resolved(config);
  const Taxonomy taxonomy = load_taxonomy(data_dir / kTaxonomyFile);
  OutputLock lock(out);
  RunManifest m = begin_manifest("export", cfg);
  m.inputs = {data_dir / kTaxonomyFile, checkpoint};
  const ModelParams params = load_checkpoint(checkpoint, taxonomy.id_order_hash());
  if (kind == ExportKind::Projection) {
    export_projection(out / "projection.tsv", params, taxonomy);
    m.outputs = {out / "projection.tsv"};
  } else {
    std::vector<JobVector> socs, cars;
    for (std::size_t s = 0; s < params.m(); ++s) {
      const auto row = params.soc_emb.row(s);
      socs.push_back({taxonomy.socs()[s].id, Vector(row.begin(), row.end())});
    }
    for (std::size_t k = 0; k < params.n(); ++k) {
      const auto row = params.car_emb.row(k);
      cars.push_back({taxonomy.carotenes()[k].id, Vector(row.begin(), row.end())});
    }
    save_precomputed(out / "soc_embeddings.tsv", socs);
    save_precomputed(out / "carotene_embeddings.tsv", cars);
    m.outputs = {out / "soc_embeddings.tsv", out / "carotene_embeddings.tsv"};
  }
  m.wall_seconds = clock.seconds();
  m.write(out);
  return m;
}

nlohmann::ordered_json to_json(const EpochRecord& rec) {
  nlohmann::ordered_json j;
  j["epoch"] = rec.epoch;
  j["loss"] = {{"soc", rec.train_loss.l_soc},           {"carotene", rec.train_loss.l_carotene},
               {"soc_car", rec.train_loss.l_soc_car},   {"car_car", rec.train_loss.l_car_car},
               {"job_soc", rec.train_loss.l_job_soc},   {"job_car", rec.train_loss.l_job_car},
               {"total", rec.train_loss.total}};
  j["val_soc_accuracy"] = rec.val_soc_accuracy;
  j["val_carotene_accuracy"] = rec.val_carotene_accuracy;
  j["best_val_carotene_accuracy"] = rec.best_val_carotene_accuracy;
  j["tra"] = nlohmann::ordered_json::object();
  for (const auto& [r, v] : rec.tra) j["tra"][std::string(relation_slug(r))] = v;
  j["seconds"] = rec.seconds;
  return j;
}

nlohmann::ordered_json to_json(const AblationRow& row) {
  nlohmann::ordered_json j;
  j["label"] = row.label;
  j["lambda"] = row.config.weights.lambda;
  j["margin"] = row.config.weights.margin;
  j["epochs_run"] = row.epochs_run;
  j["metrics"] = to_json(row.metrics);
  return j;
}

}  // namespace taxemb
