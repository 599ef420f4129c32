#include "taxemb/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "io_util.hpp"
#include "taxemb/linalg.hpp"

namespace taxemb {

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Prediction predict(const ModelParams& params, const Taxonomy& taxonomy, std::span<const double> job_vec,
                   Decoding decoding) {
  const auto [soc_probs, car_probs] = classify(params, job_vec);
  Prediction p;
  p.soc = argmax(soc_probs);
  if (decoding == Decoding::Constrained && !taxonomy.children_of(p.soc).empty()) {
    const auto& kids = taxonomy.children_of(p.soc);
    p.carotene = kids.front();
    for (std::size_t k : kids) {
      if (car_probs[k] > car_probs[p.carotene]) p.carotene = k;
    }
  } else {
    p.carotene = argmax(car_probs);
  }
  return p;
}

MacroScores classification_scores(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) throw DimensionError("truth and prediction lengths differ");
  if (truth.empty()) throw std::invalid_argument("classification_scores on an empty set");
  std::map<std::size_t, std::size_t> true_count, pred_count, hit_count;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++true_count[truth[i]];
    ++pred_count[predicted[i]];
    if (truth[i] == predicted[i]) {
      ++correct;
      ++hit_count[truth[i]];
    }
  }
  MacroScores s;
  s.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  for (const auto& [cls, n_true] : true_count) {
    const double hits = static_cast<double>(hit_count[cls]);
    const auto pc = pred_count.find(cls);
    s.macro_precision += pc == pred_count.end() ? 0.0 : hits / static_cast<double>(pc->second);
    s.macro_recall += hits / static_cast<double>(n_true);
  }
  s.macro_precision /= static_cast<double>(true_count.size());
  s.macro_recall /= static_cast<double>(true_count.size());
  return s;
}

MetricsReport evaluate_classification(const ModelParams& params, const LabeledJobs& jobs,
                                      const Taxonomy& taxonomy, Decoding decoding) {
  if (jobs.size() == 0) throw std::invalid_argument("evaluate_classification: no jobs");
  std::vector<std::size_t> soc_pred, car_pred;
  std::size_t consistent = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Prediction p = predict(params, taxonomy, jobs.vectors.row(i), decoding);
    soc_pred.push_back(p.soc);
    car_pred.push_back(p.carotene);
    consistent += taxonomy.parent_of(p.carotene) == p.soc;
  }
  MetricsReport r;
  r.job_count = jobs.size();
  r.decoding = decoding;
  r.soc_accuracy = classification_scores(jobs.soc, soc_pred).accuracy;
  const MacroScores car = classification_scores(jobs.carotene, car_pred);
  r.carotene_accuracy = car.accuracy;
  r.carotene_macro_precision = car.macro_precision;
  r.carotene_macro_recall = car.macro_recall;
  r.hierarchy_consistency = static_cast<double>(consistent) / static_cast<double>(jobs.size());
  return r;
}

double tra(const ModelParams& params, const LabeledJobs& jobs, Relation relation,
           std::span<const IndexedTriplet> triplets) {
  if (triplets.empty()) throw std::invalid_argument("tra: empty triplet list");
  const Matrix* anchor = nullptr;
  const Matrix* target = nullptr;
  switch (relation) {
    case Relation::SocCar: anchor = &params.soc_emb; target = &params.car_emb; break;
    case Relation::CarCar: anchor = &params.car_emb; target = &params.car_emb; break;
    case Relation::JobSoc: anchor = &jobs.vectors; target = &params.soc_emb; break;
    case Relation::JobCar: anchor = &jobs.vectors; target = &params.car_emb; break;
  }
  std::size_t ordered = 0;
  for (const auto& t : triplets) {
    if (t.anchor >= anchor->rows() || t.positive >= target->rows() || t.negative >= target->rows()) {
      throw DimensionError("tra: triplet index out of range");
    }
    const auto a = anchor->row(t.anchor);
    ordered += cosine(a, target->row(t.positive)) > cosine(a, target->row(t.negative));
  }
  return static_cast<double>(ordered) / static_cast<double>(triplets.size());
}

void add_tra(MetricsReport& report, const ModelParams& params, const LabeledJobs& jobs, const TripletStore& store) {
  for (Relation r : kAllRelations) {
    if (!store.of(r).empty()) report.tra[r] = tra(params, jobs, r, store.of(r));
  }
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["job_count"] = report.job_count;
  j["soc_accuracy"] = report.soc_accuracy;
  j["carotene_accuracy"] = report.carotene_accuracy;
  j["carotene_macro_precision"] = report.carotene_macro_precision;
  j["carotene_macro_recall"] = report.carotene_macro_recall;
  j["hierarchy_consistency"] = report.hierarchy_consistency;
  j["tra"] = nlohmann::ordered_json::object();
  for (const auto& [r, v] : report.tra) j["tra"][std::string(relation_slug(r))] = v;
  j["meta"] = {{"decoding", report.decoding == Decoding::Independent ? "independent" : "constrained"},
               {"precision_recall_averaging", "macro"},
               {"tra_ties", "incorrect"}};
  return j;
}

void save_metrics(const std::filesystem::path& path, const MetricsReport& report) {
  auto out = open_output(path);
  out << to_json(report).dump(2) << '\n';
  finish_output(out, path);
}

Projection2D pca_2d(const Matrix& rows) {
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  if (d < 2) throw DimensionError("projection needs at least 2 dimensions");
  Projection2D out{Matrix(n, 2), Matrix(2, d), Vector(d, 0.0), Vector(2, 0.0)};
  if (n == 0) return out;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) out.mean[k] += rows(i, k);
  }
  for (double& v : out.mean) v /= static_cast<double>(n);
  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) centered(i, k) = rows(i, k) - out.mean[k];
  }
  Matrix cov(d, d);
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += centered(i, a) * centered(i, b);
      cov(a, b) = cov(b, a) = s / denom;
    }
  }
  const SymmetricEigen eig = symmetric_eigen(cov);
  for (std::size_t c = 0; c < 2; ++c) {
    std::size_t lead = 0;
    for (std::size_t k = 1; k < d; ++k) {
      if (std::abs(eig.vectors(k, c)) > std::abs(eig.vectors(lead, c))) lead = k;
    }
    const double sign = eig.vectors(lead, c) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < d; ++k) out.components(c, k) = sign * eig.vectors(k, c);
    out.variances[c] = eig.values[c];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 2; ++c) out.coords(i, c) = dot(centered.row(i), out.components.row(c));
  }
  return out;
}

std::vector<ProjectedNode> project_embeddings(const ModelParams& params, const Taxonomy& taxonomy) {
  const std::size_t m = params.m();
  const std::size_t n = params.n();
  if (m != taxonomy.soc_count() || n != taxonomy.carotene_count()) {
    throw DimensionError("parameters do not match the taxonomy");
  }
  Matrix stacked(m + n, params.q());
  for (std::size_t s = 0; s < m; ++s) std::ranges::copy(params.soc_emb.row(s), stacked.row(s).begin());
  for (std::size_t k = 0; k < n; ++k) std::ranges::copy(params.car_emb.row(k), stacked.row(m + k).begin());
  const Projection2D proj = pca_2d(stacked);
  std::vector<ProjectedNode> out;
  for (std::size_t s = 0; s < m; ++s) {
    out.push_back({taxonomy.socs()[s].id, "SOC", "", proj.coords(s, 0), proj.coords(s, 1)});
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& c = taxonomy.carotenes()[k];
    out.push_back({c.id, "CAR", c.parent, proj.coords(m + k, 0), proj.coords(m + k, 1)});
  }
  return out;
}

void export_projection(const std::filesystem::path& path, const ModelParams& params, const Taxonomy& taxonomy) {
  const auto nodes = project_embeddings(params, taxonomy);
  auto out = open_output(path);
  for (const auto& p : nodes) {
    out << p.id << '\t' << p.level << '\t' << p.parent << '\t' << format_double(p.x) << '\t'
        << format_double(p.y) << '\n';
  }
  finish_output(out, path);
}

}  // namespace taxemb
