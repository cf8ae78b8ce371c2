// Copyright 2026 The KG2data Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "doctest.h"

#include "kg2data/fixtures.hpp"
#include "kg2data/kernels.hpp"
#include "kg2data/kg/chunking.hpp"
#include "kg2data/kg/extraction.hpp"
#include "kg2data/kg/leiden.hpp"
#include "kg2data/kg/retrieval.hpp"
#include "kg2data/kg/weighted_graph.hpp"
#include "support.hpp"

using namespace kg2data;
using namespace kg2data::kg;

namespace {

using Edges = std::vector<std::tuple<std::size_t, std::size_t, double>>;

// Straight from the definition over the adjacency matrix, no CSR.
double modularity_oracle(std::size_t n, const Edges& edges, const std::vector<std::size_t>& c, double gamma = 1.0) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (auto [u, v, w] : edges) {
        if (u == v) {
            a[u][u] += 2 * w;
        } else {
            a[u][v] += w;
            a[v][u] += w;
        }
    }
    std::vector<double> k(n, 0.0);
    double two_m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
        two_m += k[i];
    }
    double q = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (c[i] == c[j]) q += a[i][j] - gamma * k[i] * k[j] / two_m;
        }
    }
    return q / two_m;
}

// Best modularity over every set partition (restricted growth strings).
std::pair<double, std::vector<std::size_t>> exhaustive_best(std::size_t n, const Edges& edges) {
    std::vector<std::size_t> rgs(n, 0), best;
    double best_q = -1e9;
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
        if (i == n) {
            const double q = modularity_oracle(n, edges, rgs);
            if (q > best_q + 1e-12) {
                best_q = q;
                best = rgs;
            }
            return;
        }
        for (std::size_t c = 0; c <= used && c < n; ++c) {
            rgs[i] = c;
            rec(i + 1, std::max(used, c + 1));
        }
    };
    rgs[0] = 0;
    rec(1, 1);
    return {best_q, best};
}

Edges two_cliques() {
    Edges e;
    for (std::size_t base : {0u, 5u}) {
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = i + 1; j < 5; ++j) e.emplace_back(base + i, base + j, 1.0);
        }
    }
    e.emplace_back(4, 5, 1.0);
    return e;
}

Edges random_edges(SplitMix64& rng, std::size_t n, std::size_t m) {
    Edges e;
    for (std::size_t i = 0; i < m; ++i) {
        auto u = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
        auto v = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
        if (u != v) e.emplace_back(u, v, 1.0 + static_cast<double>(rng.range(0, 3)));
    }
    return e;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) return false;
    std::map<std::size_t, std::size_t> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
        if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
    }
    return true;
}

std::size_t expected_chunks(std::size_t total, std::size_t target, std::size_t overlap) {
    if (total <= target) return 1;
    return (total - overlap + (target - overlap) - 1) / (target - overlap);
}

std::string random_text(SplitMix64& rng, std::size_t tokens) {
    static const char* words[] = {"rain", "gauge", "wind", "vane", "pressure", "fog", "dew", "point", "sun", "snow"};
    static const char* gaps[] = {" ", "  ", "\n", "\t", " \n\n"};
    std::string s;
    for (std::size_t i = 0; i < tokens; ++i) {
        if (i) s += gaps[rng.range(0, 4)];
        s += words[rng.range(0, 9)];
        if (rng.range(0, 5) == 0) s += ".";
    }
    return s;
}

Entity entity(const std::string& name, EntityType type = EntityType::meteorological_element) {
    return Entity{entity_id_for(name), name, type, {normalize_phrase(name)}, name + " description"};
}

Triple triple(const std::string& s, const std::string& p, const std::string& o, const std::string& chunk = "d#0") {
    return Triple{entity_id_for(s), p, entity_id_for(o), 1.0, {chunk}, 0.9};
}

}  // namespace

TEST_SUITE("kg_pipeline") {

TEST_CASE("chunk counts follow the closed form and reassemble the document") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto target = static_cast<std::size_t>(rng.range(2, 60));
        const auto overlap = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(target) - 1));
        const auto total = static_cast<std::size_t>(rng.range(0, 400));
        Document doc{"doc", random_text(rng, total)};
        auto chunks = chunk_corpus({doc}, target, overlap);
        REQUIRE(chunks.size() == expected_chunks(total, target, overlap));
        const auto tokens = whitespace_tokens(doc.text);
        std::vector<std::string> rebuilt;
        std::size_t next = 0;
        for (const auto& c : chunks) {
            CHECK(c.token_count <= target);
            CHECK(c.text == trim(c.text));
            auto ct = whitespace_tokens(c.text);
            REQUIRE(ct.size() == c.span_end - c.span_start);
            CHECK(std::equal(ct.begin(), ct.end(), tokens.begin() + static_cast<std::ptrdiff_t>(c.span_start)));
            for (auto i = next; i < c.span_end; ++i) rebuilt.push_back(ct[i - c.span_start]);
            next = std::max(next, c.span_end);
        }
        CHECK(rebuilt == tokens);
    }
}

TEST_CASE("chunking rejects overlap >= target") {
    CHECK_THROWS_AS(chunk_corpus({{"d", "a b c"}}, 5, 5), ConfigError);
    CHECK_THROWS_AS(chunk_corpus({{"d", "a b c"}}, 0, 0), ConfigError);
}

TEST_CASE("corpus hash is stable and content sensitive") {
    std::vector<Document> a = {{"a", "one"}, {"b", "two"}};
    std::vector<Document> b = {{"b", "two"}, {"a", "one"}};
    CHECK(corpus_hash(a) == corpus_hash(b));
    b[0].text = "two!";
    CHECK(corpus_hash(a) != corpus_hash(b));
    CHECK(corpus_hash(testing::shipped().docs) == testing::shipped().graph->corpus_hash);
}

TEST_CASE("modularity kernel matches the oracle, serial and parallel") {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto n = static_cast<std::size_t>(rng.range(2, 40));
        auto edges = random_edges(rng, n, n * 3);
        edges.emplace_back(0, 0, 1.5);
        WeightedGraph g(n, edges);
        std::vector<std::size_t> c(n);
        for (auto& x : c) x = static_cast<std::size_t>(rng.range(0, std::min<std::int64_t>(4, static_cast<std::int64_t>(n) - 1)));
        const double gamma = 0.5 + rng.uniform();
        const double serial = kernels::modularity(g, c, gamma, kernels::Exec::serial);
        CHECK(serial == doctest::Approx(modularity_oracle(n, edges, c, gamma)).epsilon(1e-12));
        CHECK(serial == kernels::modularity(g, c, gamma, kernels::Exec::parallel));
    }
}

TEST_CASE("two cliques joined by a bridge split into the cliques") {
    const auto edges = two_cliques();
    auto [best_q, best] = exhaustive_best(10, edges);
    CHECK(best == std::vector<std::size_t>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto r = leiden(WeightedGraph(10, edges), {1.0, seed});
        CHECK(same_partition(r.membership, best));
        CHECK(r.quality == doctest::Approx(best_q).epsilon(1e-12));
    }
}

TEST_CASE("a single clique stays whole") {
    Edges k5;
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) k5.emplace_back(i, j, 1.0);
    }
    auto [best_q, best] = exhaustive_best(5, k5);
    auto r = leiden(WeightedGraph(5, k5), {});
    CHECK(r.community_count == 1);
    CHECK(same_partition(r.membership, best));
    CHECK(r.quality == doctest::Approx(best_q));
}

TEST_CASE("leiden matches exhaustive search on small random graphs") {
    SplitMix64 rng(17);
    int matched = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto n = static_cast<std::size_t>(rng.range(4, 8));
        auto edges = random_edges(rng, n, n * 2);
        if (edges.empty()) continue;
        auto [best_q, best] = exhaustive_best(n, edges);
        auto r = leiden(WeightedGraph(n, edges), {1.0, 3});
        CHECK(r.quality <= best_q + 1e-12);
        CHECK(r.quality == doctest::Approx(modularity_oracle(n, edges, r.membership)));
        if (std::abs(r.quality - best_q) < 1e-9) ++matched;
    }
    // A heuristic: near-optimal most of the time, never above the optimum.
    CHECK(matched >= 15);
}

TEST_CASE("leiden quality never decreases and communities are connected") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(rng.range(2, 200));
        auto edges = random_edges(rng, n, static_cast<std::size_t>(rng.range(1, static_cast<std::int64_t>(n) * 3)));
        WeightedGraph g(n, edges);
        if (g.total_weight() == 0) continue;
        auto r = leiden(g, {1.0, rng.next()});
        for (std::size_t i = 1; i < r.pass_qualities.size(); ++i) {
            CHECK(r.pass_qualities[i] >= r.pass_qualities[i - 1] - 1e-12);
        }
        CHECK(communities_connected(g, r.membership));
        CHECK(r.quality == doctest::Approx(kernels::modularity(g, r.membership, 1.0, kernels::Exec::serial)));
        std::set<std::size_t> labels(r.membership.begin(), r.membership.end());
        CHECK(labels.size() == r.community_count);
    }
}

TEST_CASE("leiden is deterministic for a seed, serial or parallel") {
    SplitMix64 rng(8);
    auto edges = random_edges(rng, 150, 600);
    WeightedGraph g(150, edges);
    LeidenOptions a{1.0, 42};
    LeidenOptions b = a;
    b.exec = kernels::Exec::serial;
    CHECK(leiden(g, a).membership == leiden(g, a).membership);
    CHECK(leiden(g, a).membership == leiden(g, b).membership);
}

TEST_CASE("aggregation preserves weight and modularity") {
    SplitMix64 rng(31);
    auto edges = random_edges(rng, 60, 200);
    WeightedGraph g(60, edges);
    auto r = leiden(g, {});
    auto agg = aggregate(g, r.membership, r.community_count);
    CHECK(agg.size() == r.community_count);
    CHECK(agg.total_weight() == doctest::Approx(g.total_weight()));
    std::vector<std::size_t> identity(agg.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
    CHECK(kernels::modularity(agg, identity, 1.0) == doctest::Approx(r.quality));
}

TEST_CASE("hierarchy levels nest") {
    SplitMix64 rng(77);
    auto edges = random_edges(rng, 120, 300);
    WeightedGraph g(120, edges);
    HierarchyOptions opt;
    opt.max_levels = 4;
    auto levels = leiden_levels(g, opt);
    REQUIRE_FALSE(levels.empty());
    CHECK(levels.size() <= 4);
    // Level l is indexed by level l-1 community ids; lift it to nodes.
    std::vector<std::size_t> lifted = levels[0].membership;
    for (std::size_t l = 1; l < levels.size(); ++l) {
        REQUIRE(levels[l].membership.size() == levels[l - 1].community_count);
        std::map<std::size_t, std::size_t> parent;
        for (std::size_t v = 0; v < 120; ++v) {
            const auto next = levels[l].membership[lifted[v]];
            auto [it, fresh] = parent.emplace(lifted[v], next);
            CHECK(it->second == next);
            lifted[v] = next;
        }
        CHECK(levels[l].community_count < levels[l - 1].community_count);
    }
}

TEST_CASE("partitioning an empty graph fails") {
    KnowledgeGraph empty;
    CHECK_THROWS(leiden_partition(empty, 1.0, 0, 3));
}

TEST_CASE("extraction records parse") {
    const std::string text =
        "ENTITY\tRain Gauge\tinstrument\tCollects rain\n"
        "\n"
        "ENTITY\tPrecipitation\tmeteorological_element\tWater falling\n"
        "REL\tPrecipitation\tmeasured by\tRain Gauge\t0.8\n"
        "REL\tPrecipitation\tprovided by\tget_daily_precipitation\t0.9\n";
    auto ex = parse_extraction(text, "doc#0");
    REQUIRE(ex.entities.size() == 3);
    REQUIRE(ex.triples.size() == 2);
    CHECK(ex.triples[0].subject == "precipitation");
    CHECK(ex.triples[0].predicate == "measured_by");
    CHECK(ex.triples[0].object == "rain_gauge");
    CHECK(ex.triples[0].confidence == doctest::Approx(0.8));
    CHECK(ex.triples[0].provenance == std::set<std::string>{"doc#0"});
    auto api = std::find_if(ex.entities.begin(), ex.entities.end(),
                            [](const Entity& e) { return e.id == "get_daily_precipitation"; });
    REQUIRE(api != ex.entities.end());
    CHECK(api->type == EntityType::other);
}

TEST_CASE("extraction format errors keep the raw text") {
    for (const std::string bad : {"ENTITY\tonly two", "REL\ta\tb\tc\tnot-a-number", "Sure! Here are the entities:",
                                  "REL\ta\tb\tc\t1.5", "ENTITY\tx\tplanet\tunknown type"}) {
        try {
            parse_extraction(bad, "d#0");
            FAIL("expected ExtractionFormatError for: " << bad);
        } catch (const ExtractionFormatError& e) {
            CHECK(e.raw() == bad);
        }
    }
}

TEST_CASE("empty chunks make no model call") {
    int calls = 0;
    Gateway llm(std::make_shared<ScriptedBackend>([&](const CompletionRequest&) {
        ++calls;
        return std::string();
    }));
    Chunk empty;
    empty.id = "d#0";
    auto ex = extract_graph(empty, llm);
    CHECK(calls == 0);
    CHECK(ex.entities.empty());
}

TEST_CASE("merge result does not depend on order") {
    CurationTables tables;
    tables.aliases["rainfall"] = "precipitation";
    std::vector<std::pair<std::vector<Entity>, std::vector<Triple>>> parts = {
        {{entity("Precipitation"), entity("Rain Gauge", EntityType::instrument)},
         {triple("Precipitation", "measured_by", "Rain Gauge", "a#0")}},
        {{entity("Rainfall"), entity("Rain Gauge", EntityType::instrument)},
         {triple("Rainfall", "measured_by", "Rain Gauge", "b#0")}},
        {{entity("Monsoon", EntityType::event), entity("Precipitation")},
         {triple("Monsoon", "causes", "Precipitation", "c#0")}},
    };
    auto build = [&](std::vector<std::size_t> order) {
        KnowledgeGraph g;
        for (auto i : order) merge_graph(g, parts[i].first, parts[i].second, tables);
        return g;
    };
    auto ref = build({0, 1, 2});
    std::vector<std::size_t> order = {0, 1, 2};
    while (std::next_permutation(order.begin(), order.end())) CHECK(build(order) == ref);
    REQUIRE(ref.find_entity("precipitation") != nullptr);
    CHECK(ref.find_entity("rainfall") == nullptr);
    CHECK(ref.resolve_alias("rainfall")->id == "precipitation");
    REQUIRE(ref.triples().size() == 2);
    const auto& measured = ref.triples()[1];
    CHECK(measured.predicate == "measured_by");
    CHECK(measured.weight == doctest::Approx(2.0));
    CHECK(measured.provenance == std::set<std::string>{"a#0", "b#0"});
}

TEST_CASE("pruning maps synonyms, flips inverses and is idempotent") {
    CurationTables tables;
    tables.synonyms = CurationTables::parse_tsv("measures\t~measured_by\nis measured by\tmeasured_by\n", true);
    KnowledgeGraph g;
    merge_graph(g, {entity("Precipitation"), entity("Rain Gauge", EntityType::instrument)},
                {triple("Rain Gauge", "measures", "Precipitation", "a#0"),
                 triple("Precipitation", "is_measured_by", "Rain Gauge", "b#0")},
                tables);
    auto pruned = prune_redundant(g, tables);
    REQUIRE(pruned.triples().size() == 1);
    const auto& t = pruned.triples()[0];
    CHECK(t.subject == "precipitation");
    CHECK(t.predicate == "measured_by");
    CHECK(t.object == "rain_gauge");
    CHECK(t.weight == doctest::Approx(2.0));
    CHECK(prune_redundant(pruned, tables) == pruned);
}

TEST_CASE("curation tables reject chains and malformed rows") {
    CHECK_THROWS_AS(CurationTables::parse_tsv("a\tb\nb\tc\n", false), ConfigError);
    CHECK_THROWS_AS(CurationTables::parse_tsv("only one column\n", false), ParseError);
    CHECK(CurationTables::parse_tsv("# comment\nRain Fall\tPrecipitation\n", false).at("rain fall") == "precipitation");
}

TEST_CASE("snapshot round trip") {
    const auto& g = *testing::shipped().graph;
    CHECK(parse_snapshot(serialize_snapshot(g)) == g);
    CHECK(serialize_snapshot(parse_snapshot(serialize_snapshot(g))) == serialize_snapshot(g));
    CHECK(g.hierarchy().has_value());
}

TEST_CASE("entity linking takes the longest alias") {
    const auto& g = *testing::shipped().graph;
    auto linked = link_entities(g, "How much RAINFALL fell, and was the hourly precipitation heavy?");
    REQUIRE(linked.size() == 2);
    CHECK(linked[0] == "precipitation");
    CHECK(linked[1] == "hourly_precipitation");
    CHECK(link_entities(g, "nothing relevant here").empty());
}

TEST_CASE("retrieval returns the breadth-first neighbourhood within budget") {
    const auto& g = *testing::shipped().graph;
    // Oracle: entities within `hops` undirected steps of the seeds.
    auto within = [&](const std::vector<std::string>& seeds, int hops) {
        std::map<std::string, int> dist;
        std::deque<std::string> q;
        for (const auto& s : seeds) {
            dist[s] = 0;
            q.push_back(s);
        }
        while (!q.empty()) {
            auto u = q.front();
            q.pop_front();
            if (dist[u] == hops) continue;
            for (const auto& t : g.triples()) {
                for (auto [a, b] : {std::pair{t.subject, t.object}, std::pair{t.object, t.subject}}) {
                    if (a == u && !dist.count(b)) {
                        dist[b] = dist[u] + 1;
                        q.push_back(b);
                    }
                }
            }
        }
        return dist;
    };
    for (const std::string query : {"How much rainfall fell?", "Was there smog in Beijing?", "jet stream speed"}) {
        auto seeds = link_entities(g, query);
        REQUIRE_FALSE(seeds.empty());
        auto dist = within(seeds, 2);
        std::set<std::string> expected;
        for (const auto& t : g.triples()) {
            if (dist.count(t.subject) && dist.count(t.object) && std::min(dist[t.subject], dist[t.object]) < 2) {
                expected.insert(render_triple(g, t));
            }
        }
        auto big = retrieve_context(g, query, 2, 1'000'000);
        std::set<std::string> got(big.triples.begin(), big.triples.end());
        CHECK(got == expected);
        CHECK(big.triples.size() == got.size());
        for (std::size_t budget : {0u, 5u, 17u, 60u, 400u}) {
            auto b = retrieve_context(g, query, 2, budget);
            CHECK(whitespace_token_count(b.rendered) <= budget);
            CHECK(std::equal(b.triples.begin(), b.triples.end(), big.triples.begin()));
        }
    }
}

TEST_CASE("unlinked queries get top-level summaries only") {
    const auto& g = *testing::shipped().graph;
    auto b = retrieve_context(g, "completely unrelated words", 2, 10'000);
    CHECK(b.triples.empty());
    CHECK_FALSE(b.summaries.empty());
}

TEST_CASE("rebuilding from the shipped cassette reproduces the snapshot") {
    auto cassette = std::make_shared<Cassette>(Cassette::load(testing::data_path("cassettes/kg_build.jsonl"),
                                                              CassetteMode::replay_strict));
    Gateway llm(std::make_shared<CassetteBackend>(cassette));
    auto tables = CurationTables::load(testing::data_path("aliases.tsv"), testing::data_path("synonyms.tsv"));
    auto graph = build_graph(testing::shipped().docs, llm, tables, PipelineOptions{});
    CHECK(serialize_snapshot(graph) == read_file(testing::data_path("graph.jsonl")));
}

TEST_CASE("a failing summary call names its community") {
    const auto& s = testing::shipped();
    auto tables = CurationTables::load(testing::data_path("aliases.tsv"), testing::data_path("synonyms.tsv"));
    auto author = fixtures::graph_author(fixtures::load_lexicon(testing::data_path("fixtures/lexicon.tsv")), tables);
    Gateway llm(std::make_shared<ScriptedBackend>([&](const CompletionRequest& r) {
        if (starts_with(r.messages.front().content, "Summarize")) throw GatewayError("upstream 503", 503);
        return author->complete(r);
    }));
    CHECK_THROWS_AS(build_graph(s.docs, llm, tables, PipelineOptions{}), CommunitySummaryError);
}

}  // TEST_SUITE
