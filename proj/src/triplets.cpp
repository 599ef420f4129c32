#include "taxemb/triplets.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "io_util.hpp"

namespace taxemb {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// One positive link together with the candidate negatives for it.
struct Link {
  std::string anchor;
  std::string positive;
  std::vector<std::size_t> complement;  // ascending node indices
  std::string query_text;               // hard mode only
};

bool negatives_are_socs(Relation r) { return r == Relation::JobSoc; }

std::vector<Link> enumerate_links(Relation relation, const LinkContext& ctx, bool want_query) {
  const Taxonomy& tax = ctx.taxonomy();
  const std::size_t m = tax.soc_count();
  const std::size_t n = tax.carotene_count();
  std::vector<Link> links;
  switch (relation) {
    case Relation::SocCar:
      for (std::size_t s = 0; s < m; ++s) {
        std::vector<std::size_t> comp;
        for (std::size_t k = 0; k < n; ++k) {
          if (!tax.is_child(s, k)) comp.push_back(k);
        }
        for (std::size_t c : tax.children_of(s)) {
          links.push_back({tax.socs()[s].id, tax.carotenes()[c].id, comp,
                           want_query ? tax.socs()[s].signature : std::string()});
        }
      }
      break;
    case Relation::CarCar:
      for (const auto& [p, q] : ctx.graph().edges()) {
        std::vector<std::size_t> comp;
        for (std::size_t r = 0; r < n; ++r) {
          if (r != p && !ctx.graph().has_edge(p, r)) comp.push_back(r);
        }
        links.push_back({tax.carotenes()[p].id, tax.carotenes()[q].id, std::move(comp),
                         want_query ? tax.carotenes()[p].signature : std::string()});
      }
      break;
    case Relation::JobSoc:
      for (const auto& job : ctx.jobs()) {
        const std::size_t label = tax.require_soc(job.soc);
        std::vector<std::size_t> comp;
        for (std::size_t s = 0; s < m; ++s) {
          if (s != label) comp.push_back(s);
        }
        links.push_back({job.id, job.soc, std::move(comp), want_query ? concat_features(job) : std::string()});
      }
      break;
    case Relation::JobCar:
      for (const auto& job : ctx.jobs()) {
        const std::size_t label = tax.require_carotene(job.carotene);
        std::vector<std::size_t> comp;
        for (std::size_t k = 0; k < n; ++k) {
          if (k != label) comp.push_back(k);
        }
        links.push_back(
            {job.id, job.carotene, std::move(comp), want_query ? concat_features(job) : std::string()});
      }
      break;
  }
  return links;
}

const std::string& node_id(const Taxonomy& tax, Relation r, std::size_t idx) {
  return negatives_are_socs(r) ? tax.socs()[idx].id : tax.carotenes()[idx].id;
}

}  // namespace

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::SocCar: return "SocCar";
    case Relation::CarCar: return "CarCar";
    case Relation::JobSoc: return "JobSoc";
    case Relation::JobCar: return "JobCar";
  }
  return "?";
}

std::string_view relation_slug(Relation r) {
  switch (r) {
    case Relation::SocCar: return "soc-car";
    case Relation::CarCar: return "car-car";
    case Relation::JobSoc: return "job-soc";
    case Relation::JobCar: return "job-car";
  }
  return "?";
}

Relation parse_relation(std::string_view text) {
  const std::string t = lower(trim(text));
  for (Relation r : kAllRelations) {
    if (t == lower(relation_name(r)) || t == relation_slug(r)) return r;
  }
  throw ParseError("unknown relation '" + std::string(text) + "'");
}

MiningMode parse_mining_mode(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "soft") return MiningMode::Soft;
  if (t == "hard") return MiningMode::Hard;
  throw ParseError("unknown mining mode '" + std::string(text) + "'");
}

std::string_view mining_mode_name(MiningMode mode) { return mode == MiningMode::Soft ? "soft" : "hard"; }

LinkContext::LinkContext(const Taxonomy& taxonomy, const SimilarityGraph& graph,
                         std::span<const JobRecord> jobs)
    : taxonomy_(taxonomy), graph_(graph), jobs_(jobs) {
  for (std::size_t i = 0; i < jobs_.size(); ++i) job_lookup_.emplace(jobs_[i].id, i);
}

const JobRecord* LinkContext::find_job(std::string_view id) const {
  const auto it = job_lookup_.find(std::string(id));
  return it == job_lookup_.end() ? nullptr : &jobs_[it->second];
}

void LinkContext::validate(const Triplet& t) const {
  const std::string name(relation_name(t.relation));
  const auto fail = [&](const std::string& why) {
    throw ValidationError(name + " triplet (" + t.anchor + ", " + t.positive + ", " + t.negative + "): " + why);
  };
  const Taxonomy& tax = taxonomy_;
  switch (t.relation) {
    case Relation::SocCar: {
      const auto s = tax.soc_index(t.anchor);
      const auto p = tax.carotene_index(t.positive);
      const auto n = tax.carotene_index(t.negative);
      if (!s || !p || !n) fail("unknown id");
      if (!tax.is_child(*s, *p)) fail("positive is not a child of the anchor SOC");
      if (tax.is_child(*s, *n)) fail("negative is a child of the anchor SOC");
      return;
    }
    case Relation::CarCar: {
      const auto a = tax.carotene_index(t.anchor);
      const auto p = tax.carotene_index(t.positive);
      const auto n = tax.carotene_index(t.negative);
      if (!a || !p || !n) fail("unknown id");
      if (!graph_.has_edge(*a, *p)) fail("(anchor, positive) is not a similarity edge");
      if (*n == *a) fail("negative equals anchor");
      if (graph_.has_edge(*a, *n)) fail("(anchor, negative) is a similarity edge");
      return;
    }
    case Relation::JobSoc:
    case Relation::JobCar: {
      const JobRecord* job = find_job(t.anchor);
      if (job == nullptr) fail("unknown job id");
      const bool soc = t.relation == Relation::JobSoc;
      const std::string& label = soc ? job->soc : job->carotene;
      const bool known = soc ? tax.soc_index(t.negative).has_value() : tax.carotene_index(t.negative).has_value();
      if (!known) fail("unknown negative id");
      if (t.positive != label) fail("positive is not the job's label");
      if (t.negative == t.positive) fail("negative equals positive");
      return;
    }
  }
}

MiningResult mine_soft(Relation relation, const LinkContext& ctx, const MinerConfig& config) {
  if (config.n_neg < 1) throw std::invalid_argument("n_neg must be >= 1");
  MiningResult result;
  const std::string tag(relation_name(relation));
  for (Link& link : enumerate_links(relation, ctx, false)) {
    if (link.complement.empty()) {
      ++result.skipped_links;
      continue;
    }
    // Seed per link so the draw does not depend on enumeration order.
    Rng rng(derive_seed(config.seed, tag + "\x1f" + link.anchor + "\x1f" + link.positive));
    auto& pool = link.complement;
    const std::size_t k = std::min(config.n_neg, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      result.triplets.push_back({relation, link.anchor, link.positive, node_id(ctx.taxonomy(), relation, pool[i])});
    }
  }
  std::sort(result.triplets.begin(), result.triplets.end());
  return result;
}

MiningResult mine_hard(Relation relation, const LinkContext& ctx, const MinerConfig& config,
                       const TextEncoder& encoder) {
  if (config.n_neg < 1) throw std::invalid_argument("n_neg must be >= 1");
  const Taxonomy& tax = ctx.taxonomy();
  std::vector<Vector> candidates;
  if (negatives_are_socs(relation)) {
    for (const auto& s : tax.socs()) candidates.push_back(encoder.encode(s.signature));
  } else {
    for (const auto& c : tax.carotenes()) candidates.push_back(encoder.encode(c.signature));
  }

  MiningResult result;
  std::vector<std::pair<double, std::size_t>> scored;
  for (const Link& link : enumerate_links(relation, ctx, true)) {
    if (link.complement.empty()) {
      ++result.skipped_links;
      continue;
    }
    const Vector query = encoder.encode(link.query_text);
    scored.clear();
    for (std::size_t idx : link.complement) scored.emplace_back(cosine(query, candidates[idx]), idx);
    const std::size_t k = std::min(config.n_neg, scored.size());
    // Index order is id order, so the index breaks ties toward the lower id.
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    for (std::size_t i = 0; i < k; ++i) {
      result.triplets.push_back({relation, link.anchor, link.positive, node_id(tax, relation, scored[i].second)});
    }
  }
  std::sort(result.triplets.begin(), result.triplets.end());
  return result;
}

MiningResult mine(Relation relation, const LinkContext& ctx, const MinerConfig& config,
                  const TextEncoder& encoder) {
  return config.mode == MiningMode::Soft ? mine_soft(relation, ctx, config)
                                         : mine_hard(relation, ctx, config, encoder);
}

void save_triplets(const std::filesystem::path& path, std::span<const Triplet> triplets) {
  auto out = open_output(path);
  for (const auto& t : triplets) {
    out << relation_name(t.relation) << '\t' << t.anchor << '\t' << t.positive << '\t' << t.negative << '\n';
  }
  finish_output(out, path);
}

std::vector<Triplet> load_triplets(const std::filesystem::path& path, const LinkContext& ctx) {
  auto in = open_input(path);
  std::vector<Triplet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    const auto cols = split(line, '\t');
    if (cols.size() != 4) throw ParseError(where + "expected 4 tab-separated fields");
    Triplet t;
    try {
      t.relation = parse_relation(cols[0]);
    } catch (const ParseError& e) {
      throw ParseError(where + e.what());
    }
    t.anchor = std::string(cols[1]);
    t.positive = std::string(cols[2]);
    t.negative = std::string(cols[3]);
    try {
      ctx.validate(t);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

TripletStore TripletStore::resolve(std::span<const Triplet> triplets, const Taxonomy& taxonomy,
                                   std::span<const std::string> job_ids) {
  std::unordered_map<std::string, std::size_t> jobs;
  for (std::size_t i = 0; i < job_ids.size(); ++i) jobs.emplace(job_ids[i], i);
  const auto job_row = [&](const std::string& id) {
    const auto it = jobs.find(id);
    if (it == jobs.end()) throw ValidationError("triplet references job '" + id + "' outside the job table");
    return it->second;
  };
  TripletStore store;
  for (const auto& t : triplets) {
    IndexedTriplet it;
    switch (t.relation) {
      case Relation::SocCar:
        it = {taxonomy.require_soc(t.anchor), taxonomy.require_carotene(t.positive),
              taxonomy.require_carotene(t.negative)};
        break;
      case Relation::CarCar:
        it = {taxonomy.require_carotene(t.anchor), taxonomy.require_carotene(t.positive),
              taxonomy.require_carotene(t.negative)};
        break;
      case Relation::JobSoc:
        it = {job_row(t.anchor), taxonomy.require_soc(t.positive), taxonomy.require_soc(t.negative)};
        break;
      case Relation::JobCar:
        it = {job_row(t.anchor), taxonomy.require_carotene(t.positive), taxonomy.require_carotene(t.negative)};
        break;
    }
    store.of(t.relation).push_back(it);
  }
  return store;
}

std::size_t TripletStore::size() const {
  std::size_t total = 0;
  for (const auto& v : by_relation_) total += v.size();
  return total;
}

std::vector<std::size_t> sample_positions(std::size_t store_size, std::size_t n_sample, Rng& rng) {
  std::vector<std::size_t> picked;
  if (n_sample >= store_size) {
    picked.resize(store_size);
    for (std::size_t i = 0; i < store_size; ++i) picked[i] = i;
    return picked;
  }
  // Floyd's algorithm: k draws, each position equally likely.
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = store_size - n_sample; j < store_size; ++j) {
    const std::size_t t = rng.below(j + 1);
    const std::size_t pick = seen.contains(t) ? j : t;
    seen.insert(pick);
    picked.push_back(pick);
  }
  return picked;
}

std::vector<IndexedTriplet> sample_batch(const TripletStore& store, Relation relation, std::size_t n_sample,
                                         Rng& rng) {
  const auto& all = store.of(relation);
  std::vector<IndexedTriplet> out;
  for (std::size_t pos : sample_positions(all.size(), n_sample, rng)) out.push_back(all[pos]);
  return out;
}

}  // namespace taxemb
