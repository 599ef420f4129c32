#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "taxemb/pipeline.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace taxemb;

namespace {

std::vector<std::vector<double>> to_rows(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
  return out;
}

py::dict metrics_dict(const MetricsReport& rep) {
  return py::module_::import("json").attr("loads")(to_json(rep).dump());
}

ExperimentConfig config_from(const py::object& overrides) {
  ExperimentConfig cfg;
  if (!overrides.is_none()) {
    const std::string text = py::str(py::module_::import("json").attr("dumps")(overrides));
    merge_json(cfg, nlohmann::json::parse(text));
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Joint job / SOC / Carotene embedding engine";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def("cosine", [](const Vector& a, const Vector& b) { return cosine(a, b); }, py::arg("a"), py::arg("b"));
  m.def("softmax", [](const Vector& z) { return softmax(z); }, py::arg("logits"));
  m.def("ce_loss", [](const Vector& p, std::size_t i) { return ce_loss(p, i); }, py::arg("probs"),
        py::arg("true_index"));
  m.def("margin_triplet_loss",
        [](const Vector& a, const Vector& p, const Vector& n, double margin) {
          return margin_triplet_loss(a, p, n, margin);
        },
        py::arg("anchor"), py::arg("positive"), py::arg("negative"), py::arg("margin") = 0.4);
  m.def("contrastive_loss_nomargin",
        [](const Vector& a, const Vector& p, const std::vector<Vector>& negs) {
          return contrastive_loss_nomargin(a, p, negs);
        },
        py::arg("anchor"), py::arg("positive"), py::arg("negatives"));
  m.def("tokenize", &tokenize, py::arg("text"));

  py::class_<TextEncoder>(m, "TextEncoder")
      .def(py::init([](std::size_t dim, std::size_t buckets, std::uint64_t seed) {
             return TextEncoder(EncoderConfig{dim, buckets, seed});
           }),
           py::arg("dim") = 64, py::arg("buckets") = std::size_t{1} << 15, py::arg("seed") = 0)
      .def("fit_idf", [](TextEncoder& e, const std::vector<std::string>& docs) { e.fit_idf(docs); })
      .def("encode", &TextEncoder::encode, py::arg("text"))
      .def_property_readonly("dim", &TextEncoder::dim);

  m.def("generate_corpus",
        [](const std::string& out_dir, const py::object& config) {
          cmd_synth(config_from(config), out_dir);
        },
        py::arg("out_dir"), py::arg("config") = py::none(),
        "Write a synthetic corpus (taxonomy.json, graph.csv, jobs.*.jsonl) into out_dir.");

  m.def("load_taxonomy_stats",
        [](const std::string& dir) {
          const CorpusData d = load_corpus_dir(dir);
          const DegreeStats st = degree_stats(d.taxonomy, d.graph);
          py::dict out;
          out["m"] = st.soc_count;
          out["n"] = st.carotene_count;
          out["min_branching"] = st.min_branching;
          out["max_branching"] = st.max_branching;
          out["avg_branching"] = st.avg_branching;
          out["edges"] = st.edge_count;
          out["out_degree_histogram"] = st.out_degree_histogram;
          std::vector<std::size_t> sizes;
          for (const auto& s : d.splits) sizes.push_back(s.size());
          out["split_sizes"] = sizes;
          return out;
        },
        py::arg("data_dir"));

  m.def("mine",
        [](const std::string& data_dir, const std::string& out_dir, const std::vector<std::string>& relations,
           const py::object& config) {
          std::vector<Relation> rels;
          for (const auto& r : relations) rels.push_back(parse_relation(r));
          if (rels.empty()) rels.assign(kAllRelations.begin(), kAllRelations.end());
          MineSummary summary;
          cmd_mine(config_from(config), data_dir, rels, out_dir, &summary);
          py::dict counts;
          for (const auto& [r, c] : summary.counts) counts[py::str(std::string(relation_slug(r)))] = c;
          return counts;
        },
        py::arg("data_dir"), py::arg("out_dir"), py::arg("relations") = std::vector<std::string>{},
        py::arg("config") = py::none());

  m.def("train",
        [](const std::string& data_dir, const std::string& triplet_dir, const std::string& out_dir,
           const py::object& config) {
          TrainResult tr;
          cmd_train(config_from(config), data_dir, triplet_dir, out_dir, &tr);
          py::dict out;
          out["epochs"] = tr.history.size();
          out["best_epoch"] = tr.best_epoch;
          out["best_val_carotene_accuracy"] = tr.state.best_metric;
          return out;
        },
        py::arg("data_dir"), py::arg("triplet_dir"), py::arg("out_dir"), py::arg("config") = py::none());

  m.def("evaluate",
        [](const std::string& checkpoint, const std::string& data_dir, const std::string& triplet_dir,
           const std::string& split, const std::string& out_dir, const py::object& config) {
          MetricsReport rep;
          cmd_eval(config_from(config), checkpoint, data_dir, triplet_dir, parse_split(split), out_dir, &rep);
          return metrics_dict(rep);
        },
        py::arg("checkpoint"), py::arg("data_dir"), py::arg("triplet_dir") = "", py::arg("split") = "val",
        py::arg("out_dir") = ".", py::arg("config") = py::none());

  m.def("load_checkpoint",
        [](const std::string& path) {
          const ModelParams p = load_checkpoint(path);
          py::dict out;
          out["soc_emb"] = to_rows(p.soc_emb);
          out["car_emb"] = to_rows(p.car_emb);
          out["soc_head"] = to_rows(p.soc_head);
          out["car_head"] = to_rows(p.car_head);
          return out;
        },
        py::arg("path"));

  m.def("pca_2d",
        [](const std::vector<std::vector<double>>& rows) {
          const std::size_t cols = rows.empty() ? 0 : rows.front().size();
          Matrix mat(rows.size(), cols);
          for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) throw DimensionError("ragged input rows");
            std::copy(rows[i].begin(), rows[i].end(), mat.row(i).begin());
          }
          return to_rows(pca_2d(mat).coords);
        },
        py::arg("rows"));

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
