#include "taxemb/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "io_util.hpp"

namespace taxemb {

using nlohmann::json;

namespace {

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

// Accepts a string, a number (cast to text), or null/absent (empty).
std::string text_field(const json& obj, const char* key, std::string_view ctx) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number()) return format_double(it->get<double>());
  throw ParseError(std::string(ctx) + "field '" + key + "' must be text");
}

std::string required_id(const json& obj, const char* key, std::string_view ctx) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw ParseError(std::string(ctx) + "missing or empty '" + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

Taxonomy::Taxonomy(std::vector<SocNode> socs, std::vector<CaroteneNode> carotenes)
    : socs_(std::move(socs)), carotenes_(std::move(carotenes)) {
  if (socs_.empty()) throw ValidationError("taxonomy has no SOCs");
  if (carotenes_.empty()) throw ValidationError("taxonomy has no Carotenes");
  std::sort(socs_.begin(), socs_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(carotenes_.begin(), carotenes_.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });

  for (std::size_t i = 0; i < socs_.size(); ++i) {
    if (socs_[i].id.empty()) throw ValidationError("empty SOC id");
    if (!soc_lookup_.emplace(socs_[i].id, i).second) {
      throw ValidationError("duplicate SOC id '" + socs_[i].id + "'");
    }
  }
  children_.resize(socs_.size());
  parent_.resize(carotenes_.size());
  for (std::size_t k = 0; k < carotenes_.size(); ++k) {
    const auto& c = carotenes_[k];
    if (c.id.empty()) throw ValidationError("empty Carotene id");
    if (!carotene_lookup_.emplace(c.id, k).second) {
      throw ValidationError("Carotene '" + c.id + "' listed more than once (multiple parents)");
    }
    if (c.parent.empty()) throw ValidationError("Carotene '" + c.id + "' has no parent SOC");
    const auto p = soc_lookup_.find(c.parent);
    if (p == soc_lookup_.end()) {
      throw ValidationError("Carotene '" + c.id + "' references unknown SOC '" + c.parent + "'");
    }
    parent_[k] = p->second;
    children_[p->second].push_back(k);
  }
}

std::optional<std::size_t> Taxonomy::soc_index(std::string_view id) const {
  const auto it = soc_lookup_.find(std::string(id));
  if (it == soc_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Taxonomy::carotene_index(std::string_view id) const {
  const auto it = carotene_lookup_.find(std::string(id));
  if (it == carotene_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t Taxonomy::require_soc(std::string_view id) const {
  if (auto i = soc_index(id)) return *i;
  throw ValidationError("unknown SOC id '" + std::string(id) + "'");
}

std::size_t Taxonomy::require_carotene(std::string_view id) const {
  if (auto i = carotene_index(id)) return *i;
  throw ValidationError("unknown Carotene id '" + std::string(id) + "'");
}

std::uint64_t Taxonomy::id_order_hash() const {
  std::uint64_t h = fnv1a64("socs\n");
  for (const auto& s : socs_) h = fnv1a64(s.id + "\n", h);
  h = fnv1a64("carotenes\n", h);
  for (const auto& c : carotenes_) h = fnv1a64(c.id + "\t" + c.parent + "\n", h);
  return h;
}

SimilarityGraph::SimilarityGraph(std::size_t node_count,
                                 std::span<const std::pair<std::size_t, std::size_t>> edges)
    : out_(node_count) {
  for (const auto& [src, dst] : edges) {
    if (src >= node_count || dst >= node_count) {
      throw ValidationError("similarity edge endpoint out of range");
    }
    if (src == dst) throw ValidationError("similarity graph self-loop");
    auto& nbrs = out_[src];
    const auto pos = std::lower_bound(nbrs.begin(), nbrs.end(), dst);
    if (pos != nbrs.end() && *pos == dst) continue;
    if (nbrs.size() >= kMaxOutDegree) {
      throw ValidationError("similarity graph out-degree exceeds " + std::to_string(kMaxOutDegree));
    }
    nbrs.insert(pos, dst);
  }
}

std::size_t SimilarityGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& nbrs : out_) total += nbrs.size();
  return total;
}

bool SimilarityGraph::has_edge(std::size_t src, std::size_t dst) const {
  const auto& nbrs = out_[src];
  return std::binary_search(nbrs.begin(), nbrs.end(), dst);
}

std::vector<std::pair<std::size_t, std::size_t>> SimilarityGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t s = 0; s < out_.size(); ++s) {
    for (std::size_t d : out_[s]) all.emplace_back(s, d);
  }
  return all;
}

std::vector<std::string> children(const Taxonomy& taxonomy, std::string_view soc) {
  std::vector<std::string> ids;
  for (std::size_t k : taxonomy.children_of(taxonomy.require_soc(soc))) {
    ids.push_back(taxonomy.carotenes()[k].id);
  }
  return ids;
}

DegreeStats degree_stats(const Taxonomy& taxonomy, const SimilarityGraph& graph) {
  DegreeStats st;
  st.soc_count = taxonomy.soc_count();
  st.carotene_count = taxonomy.carotene_count();
  st.min_branching = taxonomy.carotene_count();
  for (std::size_t s = 0; s < taxonomy.soc_count(); ++s) {
    const std::size_t b = taxonomy.children_of(s).size();
    st.min_branching = std::min(st.min_branching, b);
    st.max_branching = std::max(st.max_branching, b);
  }
  st.avg_branching = static_cast<double>(st.carotene_count) / static_cast<double>(st.soc_count);
  for (std::size_t k = 0; k < graph.node_count(); ++k) {
    ++st.out_degree_histogram[graph.out_neighbors(k).size()];
  }
  st.edge_count = graph.edge_count();
  return st;
}

Taxonomy read_taxonomy(std::istream& in, std::string_view source) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(source) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("socs") || !doc.contains("carotenes") ||
      !doc["socs"].is_array() || !doc["carotenes"].is_array()) {
    throw ParseError(std::string(source) + ": expected object with 'socs' and 'carotenes' arrays");
  }
  std::vector<SocNode> socs;
  std::size_t i = 0;
  for (const auto& e : doc["socs"]) {
    const std::string ctx = std::string(source) + ": socs[" + std::to_string(i++) + "]: ";
    if (!e.is_object()) throw ParseError(ctx + "expected object");
    socs.push_back({required_id(e, "id", ctx), text_field(e, "signature", ctx)});
  }
  std::vector<CaroteneNode> cars;
  i = 0;
  for (const auto& e : doc["carotenes"]) {
    const std::string ctx = std::string(source) + ": carotenes[" + std::to_string(i++) + "]: ";
    if (!e.is_object()) throw ParseError(ctx + "expected object");
    CaroteneNode node;
    node.id = required_id(e, "id", ctx);
    const auto p = e.find("parent");
    if (p == e.end() || p->is_null() || (p->is_array() && p->empty())) {
      throw ValidationError(ctx + "Carotene '" + node.id + "' has no parent SOC");
    }
    if (p->is_array()) {
      if (p->size() > 1) {
        throw ValidationError(ctx + "Carotene '" + node.id + "' has multiple parents");
      }
      if (!(*p)[0].is_string()) throw ParseError(ctx + "parent must be a SOC id");
      node.parent = (*p)[0].get<std::string>();
    } else if (p->is_string()) {
      node.parent = p->get<std::string>();
    } else {
      throw ParseError(ctx + "parent must be a SOC id");
    }
    node.signature = text_field(e, "signature", ctx);
    cars.push_back(std::move(node));
  }
  try {
    return Taxonomy(std::move(socs), std::move(cars));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
}

std::vector<JobRecord> read_jobs(std::istream& in, const Taxonomy& taxonomy, std::string_view source) {
  std::vector<JobRecord> jobs;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string ctx = where(source, lineno);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(ctx + e.what());
    }
    if (!obj.is_object()) throw ParseError(ctx + "expected a JSON object");
    JobRecord job;
    job.id = required_id(obj, "id", ctx);
    job.title = text_field(obj, "title", ctx);
    job.description = text_field(obj, "description", ctx);
    job.location = text_field(obj, "location", ctx);
    job.salary = text_field(obj, "salary", ctx);
    job.soc = required_id(obj, "soc", ctx);
    job.carotene = required_id(obj, "carotene", ctx);
    const auto s = taxonomy.soc_index(job.soc);
    if (!s) throw ValidationError(ctx + "unknown SOC id '" + job.soc + "'");
    const auto c = taxonomy.carotene_index(job.carotene);
    if (!c) throw ValidationError(ctx + "unknown Carotene id '" + job.carotene + "'");
    if (taxonomy.parent_of(*c) != *s) {
      throw ValidationError(ctx + "label inconsistency: Carotene '" + job.carotene +
                            "' is not a child of SOC '" + job.soc + "'");
    }
    if (!seen.insert(job.id).second) throw ValidationError(ctx + "duplicate job id '" + job.id + "'");
    jobs.push_back(std::move(job));
  }
  return jobs;
}

SimilarityGraph read_graph(std::istream& in, const Taxonomy& taxonomy, std::string_view source) {
  const std::size_t n = taxonomy.carotene_count();
  std::vector<std::vector<std::size_t>> out(n);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const std::string ctx = where(source, lineno);
    const auto cols = split(body, ',');
    // A third column (edge weight) is tolerated and ignored.
    if (cols.size() < 2 || cols.size() > 3) throw ParseError(ctx + "expected 'src,dst'");
    const std::string src_id(trim(cols[0]));
    const std::string dst_id(trim(cols[1]));
    const auto src = taxonomy.carotene_index(src_id);
    const auto dst = taxonomy.carotene_index(dst_id);
    if (!src) throw ValidationError(ctx + "unknown Carotene id '" + src_id + "'");
    if (!dst) throw ValidationError(ctx + "unknown Carotene id '" + dst_id + "'");
    if (*src == *dst) throw ValidationError(ctx + "self-loop on '" + src_id + "'");
    auto& nbrs = out[*src];
    if (std::find(nbrs.begin(), nbrs.end(), *dst) != nbrs.end()) continue;
    if (nbrs.size() >= SimilarityGraph::kMaxOutDegree) {
      throw ValidationError(ctx + "out-degree of '" + src_id + "' exceeds " +
                            std::to_string(SimilarityGraph::kMaxOutDegree));
    }
    nbrs.push_back(*dst);
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t d : out[s]) edges.emplace_back(s, d);
  }
  return SimilarityGraph(n, edges);
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_taxonomy(in, path.string());
}

std::vector<JobRecord> load_jobs(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  auto in = open_input(path);
  return read_jobs(in, taxonomy, path.string());
}

SimilarityGraph load_graph(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  auto in = open_input(path);
  return read_graph(in, taxonomy, path.string());
}

Dataset load_dataset(const std::filesystem::path& jobs_path, const std::filesystem::path& taxonomy_path,
                     const std::filesystem::path& graph_path) {
  Dataset ds;
  ds.taxonomy = load_taxonomy(taxonomy_path);
  ds.jobs = load_jobs(jobs_path, ds.taxonomy);
  ds.graph = load_graph(graph_path, ds.taxonomy);
  return ds;
}

void write_taxonomy(std::ostream& out, const Taxonomy& taxonomy) {
  json doc;
  doc["socs"] = json::array();
  for (const auto& s : taxonomy.socs()) {
    doc["socs"].push_back({{"id", s.id}, {"signature", s.signature}});
  }
  doc["carotenes"] = json::array();
  for (const auto& c : taxonomy.carotenes()) {
    doc["carotenes"].push_back({{"id", c.id}, {"parent", c.parent}, {"signature", c.signature}});
  }
  out << doc.dump(2) << '\n';
}

void write_jobs(std::ostream& out, std::span<const JobRecord> jobs) {
  for (const auto& j : jobs) {
    // ordered_json keeps the key order stable and human-friendly
    nlohmann::ordered_json obj;
    obj["id"] = j.id;
    obj["title"] = j.title;
    obj["description"] = j.description;
    obj["location"] = j.location;
    obj["salary"] = j.salary;
    obj["soc"] = j.soc;
    obj["carotene"] = j.carotene;
    out << obj.dump() << '\n';
  }
}

void write_graph(std::ostream& out, const SimilarityGraph& graph, const Taxonomy& taxonomy) {
  for (const auto& [s, d] : graph.edges()) {
    out << taxonomy.carotenes()[s].id << ',' << taxonomy.carotenes()[d].id << '\n';
  }
}

void save_taxonomy(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  auto out = open_output(path);
  write_taxonomy(out, taxonomy);
  finish_output(out, path);
}

void save_jobs(const std::filesystem::path& path, std::span<const JobRecord> jobs) {
  auto out = open_output(path);
  write_jobs(out, jobs);
  finish_output(out, path);
}

void save_graph(const std::filesystem::path& path, const SimilarityGraph& graph, const Taxonomy& taxonomy) {
  auto out = open_output(path);
  write_graph(out, graph, taxonomy);
  finish_output(out, path);
}

}  // namespace taxemb
