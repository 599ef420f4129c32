#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "support.hpp"
#include "taxemb/evaluator.hpp"

using namespace taxemb;

namespace {

LabeledJobs random_jobs(Rng& rng, const Taxonomy& t, std::size_t count, std::size_t q) {
  LabeledJobs J;
  J.vectors = Matrix(count, q);
  for (std::size_t j = 0; j < count; ++j) {
    J.ids.push_back("J" + std::to_string(j));
    for (auto& v : J.vectors.row(j)) v = rng.uniform(-1, 1);
    const std::size_t c = rng.below(t.carotene_count());
    J.carotene.push_back(c);
    J.soc.push_back(t.parent_of(c));
  }
  return J;
}

}  // namespace

TEST_CASE("argmax returns the first maximum") {
  CHECK(argmax(Vector{0.1, 0.5, 0.5, 0.2}) == 1);
  CHECK(argmax(Vector{3.0}) == 0);
}

TEST_CASE("classification scores on a known confusion matrix") {
  // Rows are truth, columns prediction: [[1, 1], [0, 2]].
  const std::vector<std::size_t> truth = {0, 0, 1, 1};
  const std::vector<std::size_t> pred = {0, 1, 1, 1};
  const MacroScores s = classification_scores(truth, pred);
  CHECK(s.accuracy == doctest::Approx(0.75));
  CHECK(s.macro_precision == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(s.macro_recall == doctest::Approx(0.75));
}

TEST_CASE("a class that is never predicted has precision zero") {
  const std::vector<std::size_t> truth = {0, 1};
  const std::vector<std::size_t> pred = {1, 1};
  const MacroScores s = classification_scores(truth, pred);
  CHECK(s.macro_precision == doctest::Approx(0.25));
  CHECK(s.macro_recall == doctest::Approx(0.5));
}

TEST_CASE("triplet ranking accuracy") {
  ModelParams P = ModelParams::zeros(1, 4, 2);
  P.soc_emb(0, 0) = 1;
  P.car_emb(0, 0) = 1;
  P.car_emb(1, 1) = 1;
  P.car_emb(2, 0) = P.car_emb(2, 1) = 1;
  P.car_emb(3, 0) = -1;
  const LabeledJobs none;
  const std::vector<IndexedTriplet> ts = {{0, 0, 1}, {0, 2, 0}, {0, 2, 3}};
  CHECK(tra(P, none, Relation::SocCar, ts) == doctest::Approx(2.0 / 3.0));
  CHECK(tra(P, none, Relation::SocCar, ts) == oracle::brute_tra(P, none, Relation::SocCar, ts));
  const std::vector<IndexedTriplet> tie = {{0, 1, 1}};
  CHECK(tra(P, none, Relation::SocCar, tie) == 0.0);
  CHECK_THROWS_AS(tra(P, none, Relation::SocCar, std::vector<IndexedTriplet>{}), std::invalid_argument);
}

TEST_CASE("TRA agrees with a per-triplet loop on random data") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto I = oracle::random_instance(rng, 3, 7, 4, 5, 20);
    for (Relation r : kAllRelations) {
      CHECK(tra(I.params, I.jobs, r, I.batch.of(r)) == oracle::brute_tra(I.params, I.jobs, r, I.batch.of(r)));
    }
  }
}

TEST_CASE("evaluation of classification heads") {
  const Taxonomy t = testing::two_by_three();
  Rng rng(5);
  SUBCASE("constrained decoding is always hierarchy consistent") {
    for (int trial = 0; trial < 5; ++trial) {
      ModelParams P = init_params(t, 6, InitMode::Random, 100 + trial);
      const LabeledJobs J = random_jobs(rng, t, 30, 6);
      const MetricsReport con = evaluate_classification(P, J, t, Decoding::Constrained);
      CHECK(con.hierarchy_consistency == 1.0);
      CHECK(con.decoding == Decoding::Constrained);
      CHECK(con.job_count == 30);
      const MetricsReport ind = evaluate_classification(P, J, t);
      CHECK(ind.hierarchy_consistency <= 1.0);
      CHECK(ind.soc_accuracy == con.soc_accuracy);
    }
  }
  SUBCASE("perfect heads") {
    // One-hot job vectors with identity heads predict every label exactly.
    ModelParams P = ModelParams::zeros(2, 6, 6);
    for (std::size_t k = 0; k < 6; ++k) {
      P.car_head(k, k) = 5.0;
      P.soc_head(k, t.parent_of(k)) = 5.0;
    }
    LabeledJobs J;
    J.vectors = Matrix(6, 6);
    for (std::size_t k = 0; k < 6; ++k) {
      J.ids.push_back("J" + std::to_string(k));
      J.vectors(k, k) = 1.0;
      J.carotene.push_back(k);
      J.soc.push_back(t.parent_of(k));
    }
    const MetricsReport r = evaluate_classification(P, J, t);
    CHECK(r.soc_accuracy == 1.0);
    CHECK(r.carotene_accuracy == 1.0);
    CHECK(r.carotene_macro_precision == 1.0);
    CHECK(r.carotene_macro_recall == 1.0);
    CHECK(r.hierarchy_consistency == 1.0);
    const auto j = to_json(r);
    CHECK(j["meta"]["tra_ties"] == "incorrect");
    CHECK(j.contains("tra"));
  }
  SUBCASE("empty job set") {
    CHECK_THROWS_AS(evaluate_classification(ModelParams::zeros(2, 6, 3), LabeledJobs{}, t), std::invalid_argument);
  }
}

TEST_CASE("principal component projection") {
  Rng rng(31);
  SUBCASE("matches a dense eigensolver") {
    for (int trial = 0; trial < 5; ++trial) {
      Matrix X(12, 5);
      for (auto& v : X.values()) v = rng.uniform(-1, 1);
      const Projection2D p = pca_2d(X);
      const Eigen::MatrixXd ref = oracle::pca_scores(X);
      for (std::size_t i = 0; i < 12; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
          CHECK(std::abs(p.coords(i, c) - ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c))) < 1e-9);
        }
      }
      CHECK(p.variances[0] >= p.variances[1]);
    }
  }
  SUBCASE("identical rows project to the origin") {
    Matrix X(4, 3);
    for (std::size_t i = 0; i < 4; ++i) {
      X(i, 0) = 0.5;
      X(i, 1) = -2;
      X(i, 2) = 7;
    }
    const Projection2D p = pca_2d(X);
    for (double v : p.coords.values()) CHECK(std::abs(v) < 1e-12);
  }
  SUBCASE("rows in a plane are reconstructed exactly") {
    Vector u{1, 2, 0, -1, 0.5}, w{0, 1, -1, 2, 1};
    Matrix X(10, 5);
    for (std::size_t i = 0; i < 10; ++i) {
      const double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
      for (std::size_t k = 0; k < 5; ++k) X(i, k) = 4.0 + a * u[k] + b * w[k];
    }
    const Projection2D p = pca_2d(X);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t k = 0; k < 5; ++k) {
        const double rec = p.mean[k] + p.coords(i, 0) * p.components(0, k) + p.coords(i, 1) * p.components(1, k);
        CHECK(std::abs(rec - X(i, k)) < 1e-9);
      }
    }
  }
  SUBCASE("one-dimensional input is rejected") {
    CHECK_THROWS_AS(pca_2d(Matrix(3, 1)), DimensionError);
  }
}

TEST_CASE("projection export") {
  const Taxonomy t = testing::two_by_three();
  const ModelParams P = init_params(t, 4, InitMode::Random, 2);
  const auto nodes = project_embeddings(P, t);
  REQUIRE(nodes.size() == 8);
  CHECK(nodes[0].level == "SOC");
  CHECK(nodes[0].parent.empty());
  CHECK(nodes[2].level == "CAR");
  CHECK(nodes[2].parent == "S1");
  testing::TempDir tmp("proj");
  export_projection(tmp / "p.tsv", P, t);
  const std::string text = testing::slurp(tmp / "p.tsv");
  CHECK(std::count(text.begin(), text.end(), '\n') >= 8);
  CHECK_THROWS_AS(project_embeddings(ModelParams::zeros(1, 6, 4), t), DimensionError);
}
