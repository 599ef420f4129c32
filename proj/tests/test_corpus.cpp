#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "support.hpp"
#include "taxemb/corpus.hpp"

using namespace taxemb;
using testing::fixture_dir;

namespace {

Taxonomy parse_taxonomy(const std::string& text) {
  std::istringstream in(text);
  return read_taxonomy(in);
}

const char* kTinyTaxonomy = R"({"socs":[{"id":"S1","signature":"a"}],
  "carotenes":[{"id":"C1","parent":"S1","signature":"x"},{"id":"C2","parent":"S1","signature":"y"},
               {"id":"C3","parent":"S1","signature":"z"}]})";

}  // namespace

TEST_CASE("fixture dataset loads with expected counts") {
  const Dataset d = load_dataset(fixture_dir() / "jobs.jsonl", fixture_dir() / "taxonomy.json", fixture_dir() / "graph.csv");
  CHECK(d.taxonomy.soc_count() == 2);
  CHECK(d.taxonomy.carotene_count() == 6);
  CHECK(d.jobs.size() == 10);
  CHECK(d.graph.edge_count() == 4);
  CHECK(d.graph.has_edge(*d.taxonomy.carotene_index("C1"), *d.taxonomy.carotene_index("C2")));
  CHECK_FALSE(d.graph.has_edge(*d.taxonomy.carotene_index("C2"), *d.taxonomy.carotene_index("C3")));
  // Missing optional fields read as empty text.
  CHECK(d.jobs.back().location.empty());
  CHECK(d.jobs.back().salary.empty());
}

TEST_CASE("children of S1 in the fixture") {
  const Taxonomy t = load_taxonomy(fixture_dir() / "taxonomy.json");
  const auto kids = children(t, "S1");
  CHECK(std::set<std::string>(kids.begin(), kids.end()) == std::set<std::string>{"C1", "C2", "C3"});
  CHECK_THROWS_AS(children(t, "S9"), ValidationError);
}

TEST_CASE("children partition the Carotene set") {
  const Taxonomy t = load_taxonomy(fixture_dir() / "taxonomy.json");
  std::multiset<std::string> all;
  for (const auto& s : t.socs()) {
    for (const auto& c : children(t, s.id)) all.insert(c);
  }
  CHECK(all.size() == t.carotene_count());
  CHECK(std::set<std::string>(all.begin(), all.end()).size() == t.carotene_count());
}

TEST_CASE("SOC without children yields an empty set") {
  const Taxonomy t = parse_taxonomy(R"({"socs":[{"id":"S1","signature":""},{"id":"S2","signature":""}],
    "carotenes":[{"id":"C1","parent":"S1","signature":""}]})");
  CHECK(children(t, "S2").empty());
}

TEST_CASE("degree stats") {
  SUBCASE("single SOC with three children") {
    const Taxonomy t = parse_taxonomy(kTinyTaxonomy);
    const DegreeStats st = degree_stats(t, SimilarityGraph(3, {}));
    CHECK(st.min_branching == 3);
    CHECK(st.max_branching == 3);
    CHECK(st.avg_branching == 3.0);
  }
  SUBCASE("out-degree histogram") {
    const Taxonomy t = parse_taxonomy(kTinyTaxonomy);
    std::istringstream g("C1,C2\nC1,C3\nC2,C3\n");
    const SimilarityGraph graph = read_graph(g, t);
    const DegreeStats st = degree_stats(t, graph);
    CHECK(st.out_degree_histogram == std::map<std::size_t, std::size_t>{{0, 1}, {1, 1}, {2, 1}});
    CHECK(st.edge_count == 3);
  }
}

TEST_CASE("empty job file is a valid dataset") {
  testing::TempDir tmp("corpus");
  testing::write_text(tmp / "jobs.jsonl", "");
  const Dataset d = load_dataset(tmp / "jobs.jsonl", fixture_dir() / "taxonomy.json", fixture_dir() / "graph.csv");
  CHECK(d.jobs.empty());
  CHECK(d.taxonomy.carotene_count() == 6);
}

TEST_CASE("job validation") {
  const Taxonomy t = load_taxonomy(fixture_dir() / "taxonomy.json");
  SUBCASE("Carotene not under its SOC") {
    std::istringstream in(R"({"id":"J1","title":"t","description":"d","soc":"S2","carotene":"C1"})");
    try {
      read_jobs(in, t, "jobs.jsonl");
      FAIL("expected a label inconsistency");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("label inconsistency") != std::string::npos);
      CHECK(msg.find("jobs.jsonl:1:") != std::string::npos);
    }
  }
  SUBCASE("unknown ids and duplicates") {
    std::istringstream unknown(R"({"id":"J1","title":"t","description":"d","soc":"S7","carotene":"C1"})");
    CHECK_THROWS_AS(read_jobs(unknown, t), ValidationError);
    std::istringstream dup(
        "{\"id\":\"J1\",\"soc\":\"S1\",\"carotene\":\"C1\"}\n{\"id\":\"J1\",\"soc\":\"S1\",\"carotene\":\"C2\"}\n");
    CHECK_THROWS_AS(read_jobs(dup, t), ValidationError);
  }
  SUBCASE("malformed line reports its line number") {
    std::istringstream in("{\"id\":\"J1\",\"soc\":\"S1\",\"carotene\":\"C1\"}\n{not json\n");
    try {
      read_jobs(in, t, "jobs");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("jobs:2:") != std::string::npos);
    }
  }
}

TEST_CASE("taxonomy validation") {
  CHECK_THROWS_AS(parse_taxonomy(R"({"socs":[],"carotenes":[]})"), ValidationError);
  CHECK_THROWS_AS(parse_taxonomy(R"({"socs":[{"id":"S1","signature":""}],
    "carotenes":[{"id":"C1","parent":"S9","signature":""}]})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_taxonomy(R"({"socs":[{"id":"S1","signature":""},{"id":"S1","signature":""}],
    "carotenes":[{"id":"C1","parent":"S1","signature":""}]})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_taxonomy("[1,2"), ParseError);
}

TEST_CASE("graph validation") {
  const Taxonomy t = load_taxonomy(fixture_dir() / "taxonomy.json");
  std::istringstream self("C1,C1\n");
  CHECK_THROWS_AS(read_graph(self, t), ValidationError);
  std::istringstream unknown("C1,C9\n");
  CHECK_THROWS_AS(read_graph(unknown, t), ValidationError);
  std::istringstream too_many("C1,C2\nC1,C3\nC1,C4\nC1,C5\nC1,C6\n");
  CHECK_NOTHROW(read_graph(too_many, t));

  const Taxonomy wide = [] {
    std::vector<SocNode> socs = {{"S1", ""}};
    std::vector<CaroteneNode> cars;
    for (int k = 0; k < 7; ++k) cars.push_back({"C" + std::to_string(k), "S1", ""});
    return Taxonomy(socs, cars);
  }();
  std::istringstream six("C0,C1\nC0,C2\nC0,C3\nC0,C4\nC0,C5\nC0,C6\n");
  CHECK_THROWS_AS(read_graph(six, wide), ValidationError);
  std::istringstream bad("C1\n");
  CHECK_THROWS_AS(read_graph(bad, t), ParseError);
}

TEST_CASE("row order follows sorted ids") {
  const Taxonomy t({{"S2", ""}, {"S1", ""}}, {{"C9", "S1", ""}, {"C1", "S2", ""}});
  CHECK(t.socs()[0].id == "S1");
  CHECK(t.carotenes()[0].id == "C1");
  CHECK(t.parent_of(0) == 1);
  CHECK(t.children_of(0) == std::vector<std::size_t>{1});
}

TEST_CASE("load, write, load round-trip") {
  const Dataset d = load_dataset(fixture_dir() / "jobs.jsonl", fixture_dir() / "taxonomy.json", fixture_dir() / "graph.csv");
  testing::TempDir tmp("roundtrip");
  save_taxonomy(tmp / "t.json", d.taxonomy);
  save_jobs(tmp / "j.jsonl", d.jobs);
  save_graph(tmp / "g.csv", d.graph, d.taxonomy);
  const Dataset back = load_dataset(tmp / "j.jsonl", tmp / "t.json", tmp / "g.csv");
  CHECK(back.taxonomy == d.taxonomy);
  CHECK(back.jobs == d.jobs);
  CHECK(back.graph == d.graph);
  CHECK(back.taxonomy.id_order_hash() == d.taxonomy.id_order_hash());
}
