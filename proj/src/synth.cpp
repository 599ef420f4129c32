#include "taxemb/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace taxemb {

namespace {

std::string padded_id(char prefix, std::size_t i, std::size_t count) {
  const std::size_t width = std::to_string(count).size();
  std::string digits = std::to_string(i + 1);
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

constexpr const char* kCities[] = {"austin", "boston", "chicago", "denver", "seattle", "atlanta"};

}  // namespace

void SynthConfig::validate() const {
  if (soc_count < 1) throw std::invalid_argument("soc_count must be >= 1");
  if (carotene_count < 1) throw std::invalid_argument("carotene_count must be >= 1");
  if (min_branching > max_branching) throw std::invalid_argument("min_branching exceeds max_branching");
  if (soc_count * min_branching > carotene_count || soc_count * max_branching < carotene_count) {
    throw std::invalid_argument("infeasible branching: " + std::to_string(soc_count) + " SOCs with " +
                                std::to_string(min_branching) + ".." + std::to_string(max_branching) +
                                " children cannot cover " + std::to_string(carotene_count) + " Carotenes");
  }
  if (sim_out_degree > SimilarityGraph::kMaxOutDegree) throw std::invalid_argument("sim_out_degree must be <= 5");
  if (sim_out_degree >= carotene_count && sim_out_degree > 0) {
    throw std::invalid_argument("sim_out_degree must be below carotene_count");
  }
  if (vocab_per_node < 1) throw std::invalid_argument("vocab_per_node must be >= 1");
  if (borrowed_tokens > vocab_per_node) throw std::invalid_argument("borrowed_tokens exceeds vocab_per_node");
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw std::invalid_argument("noise_rate must lie in [0, 1]");
  if (!(soc_token_rate >= 0.0 && soc_token_rate <= 1.0)) throw std::invalid_argument("soc_token_rate must lie in [0, 1]");
  double sum = 0.0;
  for (double r : split) {
    if (!(r >= 0.0)) throw std::invalid_argument("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
}

void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"soc_count", c.soc_count},
                     {"carotene_count", c.carotene_count},
                     {"jobs_per_carotene", c.jobs_per_carotene},
                     {"min_branching", c.min_branching},
                     {"max_branching", c.max_branching},
                     {"sim_out_degree", c.sim_out_degree},
                     {"vocab_per_node", c.vocab_per_node},
                     {"borrowed_tokens", c.borrowed_tokens},
                     {"title_tokens", c.title_tokens},
                     {"description_tokens", c.description_tokens},
                     {"noise_rate", c.noise_rate},
                     {"soc_token_rate", c.soc_token_rate},
                     {"split", c.split},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SynthConfig& c) {
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("soc_count", c.soc_count);
  get("carotene_count", c.carotene_count);
  get("jobs_per_carotene", c.jobs_per_carotene);
  get("min_branching", c.min_branching);
  get("max_branching", c.max_branching);
  get("sim_out_degree", c.sim_out_degree);
  get("vocab_per_node", c.vocab_per_node);
  get("borrowed_tokens", c.borrowed_tokens);
  get("title_tokens", c.title_tokens);
  get("description_tokens", c.description_tokens);
  get("noise_rate", c.noise_rate);
  get("soc_token_rate", c.soc_token_rate);
  get("split", c.split);
  get("seed", c.seed);
}

Split parse_split(std::string_view text) {
  std::string t(trim(text));
  for (char& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "train") return Split::Train;
  if (t == "val" || t == "validation") return Split::Val;
  if (t == "test") return Split::Test;
  throw ParseError("unknown split '" + std::string(text) + "'");
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::string split_jobs_file(Split s) { return "jobs." + std::string(split_name(s)) + ".jsonl"; }

std::string synthetic_word(std::size_t index) {
  static constexpr char kConsonants[] = "bdfgklmnprstvz";
  static constexpr char kVowels[] = "aeiou";
  constexpr std::size_t kSyllables = (sizeof kConsonants - 1) * (sizeof kVowels - 1);
  std::string word;
  // Three syllables minimum; more as the index grows.
  std::size_t v = index;
  for (int i = 0; i < 3 || v > 0; ++i) {
    const std::size_t syl = v % kSyllables;
    v /= kSyllables;
    word += kConsonants[syl / (sizeof kVowels - 1)];
    word += kVowels[syl % (sizeof kVowels - 1)];
  }
  return word;
}

std::array<std::vector<JobRecord>, 3> split_jobs(std::span<const JobRecord> jobs, const std::array<double, 3>& ratios,
                                                 std::uint64_t seed) {
  const std::size_t n = jobs.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[0]));
  const auto n_val = std::min(n - std::min(n, n_train),
                              static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios[1])));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::array<std::vector<std::size_t>, 3> picks;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t part = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
    picks[part].push_back(order[i]);
  }
  std::array<std::vector<JobRecord>, 3> out;
  for (std::size_t p = 0; p < 3; ++p) {
    std::sort(picks[p].begin(), picks[p].end());
    for (std::size_t i : picks[p]) out[p].push_back(jobs[i]);
  }
  return out;
}

SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  const std::size_t m = config.soc_count;
  const std::size_t n = config.carotene_count;
  Rng rng(derive_seed(config.seed, "synth"));

  // Children per SOC: everyone gets the minimum, the rest is handed out at random.
  std::vector<std::size_t> branching(m, config.min_branching);
  for (std::size_t left = n - m * config.min_branching; left > 0; --left) {
    std::vector<std::size_t> open;
    for (std::size_t s = 0; s < m; ++s) {
      if (branching[s] < config.max_branching) open.push_back(s);
    }
    ++branching[open[rng.below(open.size())]];
  }

  // Disjoint topic vocabularies: SOC s owns block s, Carotene k owns block m + k.
  const std::size_t vpn = config.vocab_per_node;
  const auto vocab = [&](std::size_t block) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < vpn; ++i) words.push_back(synthetic_word(block * vpn + i));
    return words;
  };
  std::vector<std::vector<std::string>> soc_vocab, car_vocab;
  for (std::size_t s = 0; s < m; ++s) soc_vocab.push_back(vocab(s));
  for (std::size_t k = 0; k < n; ++k) car_vocab.push_back(vocab(m + k));
  const std::size_t pool_size = (m + n) * vpn;

  std::vector<std::size_t> parent;
  for (std::size_t s = 0; s < m; ++s) parent.insert(parent.end(), branching[s], s);

  // Latent neighbours decide which words each Carotene signature borrows.
  std::vector<std::vector<std::string>> car_sig(n);
  for (std::size_t k = 0; k < n; ++k) car_sig[k] = car_vocab[k];
  for (std::size_t k = 0; k < n && config.sim_out_degree > 0; ++k) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != k) others.push_back(j);
    }
    for (std::size_t i = 0; i < config.sim_out_degree; ++i) {
      std::swap(others[i], others[i + rng.below(others.size() - i)]);
      std::vector<std::string> words = car_vocab[others[i]];
      rng.shuffle(words);
      car_sig[k].insert(car_sig[k].end(), words.begin(),
                        words.begin() + static_cast<std::ptrdiff_t>(config.borrowed_tokens));
    }
  }

  std::vector<SocNode> socs;
  for (std::size_t s = 0; s < m; ++s) {
    std::vector<std::string> sig = soc_vocab[s];
    for (std::size_t k = 0; k < n; ++k) {
      if (parent[k] == s) sig.push_back(car_vocab[k].front());
    }
    socs.push_back({padded_id('S', s, m), join(sig)});
  }
  std::vector<CaroteneNode> cars;
  for (std::size_t k = 0; k < n; ++k) {
    cars.push_back({padded_id('C', k, n), socs[parent[k]].id, join(car_sig[k])});
  }

  // Edges: highest signature-word overlap, ties to the lower id, overlap > 0.
  std::vector<std::set<std::string>> sig_sets;
  for (const auto& words : car_sig) sig_sets.emplace_back(words.begin(), words.end());
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t a = 0; a < n && config.sim_out_degree > 0; ++a) {
    std::vector<std::pair<std::size_t, std::size_t>> scored;  // (overlap, b)
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      std::size_t overlap = 0;
      for (const auto& w : sig_sets[a]) overlap += sig_sets[b].count(w);
      if (overlap > 0) scored.emplace_back(overlap, b);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    for (std::size_t i = 0; i < std::min(config.sim_out_degree, scored.size()); ++i) {
      edges.emplace_back(a, scored[i].second);
    }
  }

  SynthCorpus corpus;
  corpus.taxonomy = Taxonomy(std::move(socs), std::move(cars));
  corpus.graph = SimilarityGraph(n, edges);

  const std::size_t total_jobs = n * config.jobs_per_carotene;
  const auto draw = [&](std::size_t k, std::size_t count) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < count; ++i) {
      if (rng.uniform() < config.noise_rate) {
        // Off-topic: any pool word outside this Carotene's own block.
        std::size_t w = rng.below(pool_size - vpn);
        if (w >= (m + k) * vpn) w += vpn;
        words.push_back(synthetic_word(w));
      } else if (rng.uniform() < config.soc_token_rate) {
        words.push_back(soc_vocab[parent[k]][rng.below(vpn)]);
      } else {
        words.push_back(car_vocab[k][rng.below(vpn)]);
      }
    }
    return join(words);
  };
  for (std::size_t k = 0; k < n; ++k) {
    const auto& car = corpus.taxonomy.carotenes()[k];
    for (std::size_t i = 0; i < config.jobs_per_carotene; ++i) {
      JobRecord job;
      job.id = padded_id('J', k * config.jobs_per_carotene + i, total_jobs);
      job.title = draw(k, config.title_tokens);
      job.description = draw(k, config.description_tokens);
      job.location = kCities[rng.below(std::size(kCities))];
      job.salary = std::to_string(30000 + 1000 * rng.below(121));
      job.soc = car.parent;
      job.carotene = car.id;
      corpus.jobs.push_back(std::move(job));
    }
  }
  corpus.splits = split_jobs(corpus.jobs, config.split, derive_seed(config.seed, "split"));
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir);
  save_taxonomy(dir / kTaxonomyFile, corpus.taxonomy);
  save_graph(dir / kGraphFile, corpus.graph, corpus.taxonomy);
  save_jobs(dir / kAllJobsFile, corpus.jobs);
  for (Split s : {Split::Train, Split::Val, Split::Test}) save_jobs(dir / split_jobs_file(s), corpus.split(s));
}

}  // namespace taxemb
