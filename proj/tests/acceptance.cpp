// Prints one PASS/FAIL line per acceptance criterion. Exits nonzero if any
// selected criterion fails. Usage: acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "support.hpp"
#include "taxemb/pipeline.hpp"

using namespace taxemb;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Outcome documentation_only() {
  return {true,
          "documented: proprietary-scale figures (SOC 0.948, Carotene 0.893) are not reproduced; criteria 2-10 "
          "substitute property checks"};
}

Outcome gradient_correctness() {
  const Timer t;
  Rng rng(20240601);
  std::size_t accepted = 0, rejected = 0;
  double worst = 0.0;
  while (accepted < 20) {
    const auto I = oracle::random_instance(rng, 3, 6, 5, 3, 2);
    LossWeights w;
    for (auto& l : w.lambda) l = rng.uniform(0.1, 1.0);
    // Central differences are invalid within one step of a hinge kink.
    if (oracle::min_hinge_distance(I.params, I.jobs, I.batch, w.margin) < 1e-3) {
      ++rejected;
      continue;
    }
    const Gradients g = grad_total_loss(I.params, I.jobs, I.batch, w);
    worst = std::max(worst, oracle::check_gradient(I.params, I.jobs, I.batch, w, g).max_rel_error);
    ++accepted;
  }
  const double secs = t.seconds();
  return {worst < 1e-4 && secs < 10.0,
          fmt("%zu instances (%zu near-kink rejected), max rel error %.2e, %.2fs", accepted, rejected, worst, secs)};
}

Outcome loss_closed_forms() {
  const double ce = ce_loss(Vector(4, 0.25), 0);
  const double hinge = margin_triplet_loss(Vector{0.3, -1.2, 2.0}, Vector{1, 1, 0}, Vector{1, 1, 0}, 0.4);
  const Vector a{1, 0};
  const double con = contrastive_loss_nomargin(a, Vector{0.4, 1}, std::vector<Vector>{{0.4, -1}});
  const bool ok = std::abs(ce - std::log(4.0)) <= 1e-9 && std::abs(hinge - 0.4) <= 1e-12 &&
                  std::abs(con - std::log(2.0)) <= 1e-9;
  return {ok, fmt("ce %.12f, hinge %.12f, contrastive %.12f", ce, hinge, con)};
}

Outcome tra_oracle() {
  const Timer t;
  Rng rng(99);
  const auto I = oracle::random_instance(rng, 8, 40, 16, 200, 2500);
  std::size_t total = 0;
  bool equal = true;
  for (Relation r : kAllRelations) {
    const auto& ts = I.batch.of(r);
    total += ts.size();
    equal = equal && tra(I.params, I.jobs, r, ts) == oracle::brute_tra(I.params, I.jobs, r, ts);
  }
  const double secs = t.seconds();
  return {equal && secs < 5.0, fmt("%zu triplets, exact match %s, %.2fs", total, equal ? "yes" : "no", secs)};
}

std::string pad(std::size_t i) {
  const std::string s = std::to_string(i);
  return std::string(3 - s.size(), '0') + s;
}

Outcome hard_miner_optimality() {
  const Timer t;
  // S0 and S1 own one Carotene each; S2 owns 49. Each of S0 and S1 therefore
  // has 50 candidate negatives. Repeated signatures force exact ties.
  const std::vector<std::string> words = {"crane", "pipe", "weld", "audit", "ledger", "tax",
                                          "nurse", "ward", "code", "deploy", "truck", "route"};
  Rng rng(5);
  const auto sig = [&] {
    std::string s;
    for (int i = 0; i < 4; ++i) s += words[rng.below(words.size())] + " ";
    return s;
  };
  std::vector<SocNode> socs = {{"S0", "crane pipe weld audit"}, {"S1", "nurse ward code route"}, {"S2", "misc"}};
  std::vector<CaroteneNode> cars = {{"C000", "S0", sig()}, {"C001", "S1", sig()}};
  std::string repeated;
  for (std::size_t i = 2; i < 51; ++i) {
    if (i % 7 == 0 && !repeated.empty()) {
      cars.push_back({"C" + pad(i), "S2", repeated});
    } else {
      cars.push_back({"C" + pad(i), "S2", sig()});
      if (i % 7 == 1) repeated = cars.back().signature;
    }
  }
  const Taxonomy tax(socs, cars);
  const SimilarityGraph graph(tax.carotene_count(), std::vector<std::pair<std::size_t, std::size_t>>{});
  const LinkContext ctx(tax, graph, std::span<const JobRecord>{});
  TextEncoder enc(EncoderConfig{32, 512, 3});
  std::vector<std::string> docs;
  for (const auto& c : tax.carotenes()) docs.push_back(c.signature);
  enc.fit_idf(docs);

  const std::size_t n_neg = 10;
  const MiningResult got = mine_hard(Relation::SocCar, ctx, MinerConfig{n_neg, MiningMode::Hard, 0}, enc);
  std::map<std::string, std::set<std::string>> emitted;
  for (const auto& tr : got.triplets) emitted[tr.anchor].insert(tr.negative);

  bool ok = true;
  std::size_t ties = 0, anchors = 0;
  for (std::size_t s = 0; s < 2; ++s) {
    const Vector q = enc.encode(tax.socs()[s].signature);
    std::vector<std::pair<double, std::string>> all;
    for (std::size_t k = 0; k < tax.carotene_count(); ++k) {
      if (tax.is_child(s, k)) continue;
      all.emplace_back(cosine(q, enc.encode(tax.carotenes()[k].signature)), tax.carotenes()[k].id);
    }
    if (all.size() != 50) ok = false;
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::set<std::string> expect;
    for (std::size_t i = 0; i < n_neg; ++i) expect.insert(all[i].second);
    for (std::size_t i = 1; i < all.size(); ++i) ties += all[i].first == all[i - 1].first;
    ok = ok && emitted[tax.socs()[s].id] == expect;
    ++anchors;
  }
  const double secs = t.seconds();
  return {ok && ties > 0 && secs < 5.0,
          fmt("%zu anchors x 50 candidates, top-%zu sets match %s, %zu tied pairs, %.2fs", anchors, n_neg,
              ok ? "yes" : "no", ties, secs)};
}

/// Desk-scale fixture: 5 SOCs x 4 Carotenes x 10 jobs, noise 0.1, q 32.
ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.seed = 1;
  c.synth.noise_rate = 0.1;
  c.encoder.dim = 32;
  c.train.max_epochs = 50;
  c.train.patience = 3;
  c.train.learning_rate = 0.01;
  c.train.weights.margin = 0.4;
  return c;
}

struct DeskRun {
  testing::TempDir dir{"accept"};
  bool ready = false;
};

DeskRun& desk() {
  static DeskRun run;
  if (!run.ready) {
    const ExperimentConfig cfg = desk_config();
    cmd_synth(cfg, run.dir / "data");
    cmd_mine(cfg, run.dir / "data", {kAllRelations.begin(), kAllRelations.end()}, run.dir / "trip");
    run.ready = true;
  }
  return run;
}

double tra_of(const MetricsReport& r, Relation rel) {
  const auto it = r.tra.find(rel);
  return it == r.tra.end() ? -1.0 : it->second;
}

Outcome desk_convergence() {
  DeskRun& d = desk();
  const ExperimentConfig cfg = desk_config();
  const Timer t;
  TrainResult tr;
  cmd_train(cfg, d.dir / "data", d.dir / "trip", d.dir / "run", &tr);
  const double secs = t.seconds();
  MetricsReport rep;
  cmd_eval(cfg, d.dir / "run" / kCheckpointFile, d.dir / "data", d.dir / "trip", Split::Val, d.dir / "eval", &rep);
  const double sc = tra_of(rep, Relation::SocCar), cc = tra_of(rep, Relation::CarCar);
  const bool ok = rep.soc_accuracy >= 0.95 && rep.carotene_accuracy >= 0.90 && sc >= 0.98 && cc >= 0.95 &&
                  tr.history.size() <= 50 && secs < 60.0;
  return {ok, fmt("val SOC %.3f, Carotene %.3f, TRA soc-car %.3f, car-car %.3f; %zu epochs, %.1fs", rep.soc_accuracy,
                  rep.carotene_accuracy, sc, cc, tr.history.size(), secs)};
}

Outcome ablation_directionality() {
  DeskRun& d = desk();
  std::vector<AblationRow> rows;
  cmd_ablate(desk_config(), {1, 2, 3, 4}, d.dir / "data", d.dir / "trip", Split::Val, d.dir / "abl", &rows);
  const MetricsReport& full = rows.at(0).metrics;
  const double d1 = full.soc_accuracy - rows.at(1).metrics.soc_accuracy;
  const double d2 = full.carotene_accuracy - rows.at(2).metrics.carotene_accuracy;
  const double d3 = tra_of(full, Relation::SocCar) - tra_of(rows.at(3).metrics, Relation::SocCar);
  const double d4 = tra_of(full, Relation::CarCar) - tra_of(rows.at(4).metrics, Relation::CarCar);
  const bool ok1 = d1 >= 0.3, ok2 = d2 >= 0.5, ok3 = d3 >= 0.1, ok4 = d4 >= 0.1;
  return {ok1 && ok2 && ok3 && ok4,
          fmt("drops: l1 SOC %.3f [%s], l2 Carotene %.3f [%s], l3 TRA soc-car %.3f [%s], l4 TRA car-car %.3f [%s]",
              d1, ok1 ? "ok" : "short", d2, ok2 ? "ok" : "short", d3, ok3 ? "ok" : "short", d4,
              ok4 ? "ok" : "short")};
}

Outcome determinism() {
  testing::TempDir tmp("determinism");
  ExperimentConfig cfg = desk_config();
  cfg.seed = 7;
  cfg.train.max_epochs = 5;
  const std::vector<Relation> rels(kAllRelations.begin(), kAllRelations.end());
  for (const char* run : {"a", "b"}) {
    const auto root = tmp / run;
    cmd_synth(cfg, root / "data");
    cmd_mine(cfg, root / "data", rels, root / "trip");
    cmd_train(cfg, root / "data", root / "trip", root / "run");
    cmd_eval(cfg, root / "run" / kCheckpointFile, root / "data", root / "trip", Split::Test, root / "eval");
  }
  std::vector<std::string> files;
  for (Relation r : kAllRelations) files.push_back("trip/" + triplet_file(r));
  files.push_back(std::string("run/") + kCheckpointFile);
  files.push_back("eval/metrics.test.json");
  std::size_t same = 0;
  for (const auto& f : files) {
    const std::string a = testing::slurp(tmp / ("a/" + f)), b = testing::slurp(tmp / ("b/" + f));
    same += !a.empty() && a == b;
  }
  return {same == files.size(), fmt("%zu/%zu artifacts byte-identical", same, files.size())};
}

Outcome hinge_scale_invariance() {
  Rng rng(37);
  double worst = 0.0;
  bool tra_same = true;
  for (int trial = 0; trial < 5; ++trial) {
    const auto I = oracle::random_instance(rng, 3, 6, 5, 4, 6);
    const LossWeights w;
    const auto base = total_loss(I.params, I.jobs, I.batch, w).components();
    std::map<Relation, double> base_tra;
    for (Relation r : kAllRelations) base_tra[r] = tra(I.params, I.jobs, r, I.batch.of(r));
    for (int which = 0; which < 2; ++which) {
      const std::size_t rows = which == 0 ? I.params.m() : I.params.n();
      for (std::size_t row = 0; row < rows; ++row) {
        ModelParams P = I.params;
        for (auto& v : (which == 0 ? P.soc_emb : P.car_emb).row(row)) v *= 3.7;
        const auto comp = total_loss(P, I.jobs, I.batch, w).components();
        for (std::size_t k = 2; k < 6; ++k) worst = std::max(worst, std::abs(comp[k] - base[k]));
        for (Relation r : kAllRelations) tra_same = tra_same && tra(P, I.jobs, r, I.batch.of(r)) == base_tra[r];
      }
    }
  }
  return {worst <= 1e-9 && tra_same,
          fmt("max hinge change %.2e, TRA unchanged %s", worst, tra_same ? "yes" : "no")};
}

Outcome pca_oracle() {
  Rng rng(10);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix X(10, 5);
    for (auto& v : X.values()) v = rng.uniform(-2, 2);
    const Projection2D p = pca_2d(X);
    const Eigen::MatrixXd ref = oracle::pca_scores(X);
    for (Eigen::Index i = 0; i < 10; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        worst = std::max(worst, std::abs(p.coords(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) - ref(i, c)));
      }
    }
  }
  return {worst <= 1e-8, fmt("20 random 10x5 inputs, max coordinate error %.2e", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"large-scale results documented, not reproduced", documentation_only},
      {"gradient correctness", gradient_correctness},
      {"loss closed forms", loss_closed_forms},
      {"TRA oracle equivalence", tra_oracle},
      {"hard-miner optimality", hard_miner_optimality},
      {"desk-scale convergence", desk_convergence},
      {"ablation directionality", ablation_directionality},
      {"determinism", determinism},
      {"hinge scale invariance", hinge_scale_invariance},
      {"PCA export oracle", pca_oracle},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s' (expected 1..%zu)\n", argv[i], criteria.size());
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(n));
  }
  if (selected.empty()) {
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(i);
  }
  int failures = 0;
  for (std::size_t n : selected) {
    const auto& [name, fn] = criteria[n - 1];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu %s: %s (%s)\n", n, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
