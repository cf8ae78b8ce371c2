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

#include "doctest.h"

#include "kg2data/memory.hpp"
#include "support.hpp"

using namespace kg2data;
using namespace kg2data::memory;

namespace {

std::vector<kg::Chunk> sample_chunks() {
    std::vector<kg::Document> docs = {
        {"a", "Rainfall is measured by a rain gauge at every station."},
        {"b", "Wind speed is measured by an anemometer; gusts come from squalls."},
        {"c", "Sea level pressure is provided by the barometer network."},
        {"d", "Rain rain rain, the monsoon brings heavy rain to the plain."},
        {"e", ""},
    };
    return kg::chunk_corpus(docs, 300, 50);
}

}  // namespace

TEST_SUITE("memory") {

TEST_CASE("memory kinds") {
    CHECK(memory_kind_from_string("kg") == MemoryKind::kg);
    CHECK(memory_kind_from_string("vector") == MemoryKind::vector);
    CHECK(memory_kind_from_string("null") == MemoryKind::null);
    CHECK(to_string(MemoryKind::vector) == "vector");
    CHECK_THROWS_AS(memory_kind_from_string("graph"), ConfigError);
}

TEST_CASE("embeddings are unit length or zero") {
    auto store = VectorStore::build(sample_chunks(), "h", 512);
    for (std::size_t i = 0; i < store.size(); ++i) {
        auto v = store.vector_of(i);
        double norm = 0;
        for (float x : v) norm += static_cast<double>(x) * x;
        if (store.texts()[i].empty()) {
            CHECK(norm == 0.0);
        } else {
            CHECK(norm == doctest::Approx(1.0).epsilon(1e-5));
        }
    }
    auto q = store.embed("?!");
    CHECK(std::all_of(q.begin(), q.end(), [](float x) { return x == 0.0f; }));
}

TEST_CASE("topk agrees with a brute-force cosine ranking") {
    auto chunks = sample_chunks();
    auto store = VectorStore::build(chunks, "h", 1024);
    for (const std::string query : {"how much rain fell", "anemometer gusts", "pressure", "monsoon rain plain"}) {
        auto qv = store.embed(query);
        std::vector<std::pair<double, std::string>> oracle;
        for (std::size_t i = 0; i < store.size(); ++i) {
            oracle.emplace_back(cosine(qv, store.vector_of(i)), store.chunk_ids()[i]);
        }
        std::sort(oracle.begin(), oracle.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second < y.second;
        });
        auto top = store.topk(query, 3, kernels::Exec::serial);
        REQUIRE(top.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(top[i].chunk_id == oracle[i].second);
            CHECK(top[i].similarity == doctest::Approx(oracle[i].first).epsilon(1e-6));
        }
        auto par = store.topk(query, 3, kernels::Exec::parallel);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(par[i].chunk_id == top[i].chunk_id);
            CHECK(par[i].similarity == top[i].similarity);
        }
    }
    CHECK(store.topk("rain", 100).size() == store.size());
    CHECK(store.topk("rain", 0).empty());
}

TEST_CASE("cosine of known vectors") {
    std::vector<float> a = {1, 0, 0}, b = {0, 1, 0}, c = {2, 0, 0}, z = {0, 0, 0};
    CHECK(cosine(a, b) == doctest::Approx(0.0));
    CHECK(cosine(a, c) == doctest::Approx(1.0));
    CHECK(cosine(a, z) == 0.0);
}

TEST_CASE("vector store round trip") {
    auto store = VectorStore::build(sample_chunks(), "hash-1", 256);
    auto back = VectorStore::parse(store.serialize());
    CHECK(back.serialize() == store.serialize());
    CHECK(back.corpus_hash() == "hash-1");
    CHECK(back.dimension() == 256);
    for (std::size_t i = 0; i < store.size(); ++i) {
        auto x = store.vector_of(i), y = back.vector_of(i);
        CHECK(std::equal(x.begin(), x.end(), y.begin()));
    }
    CHECK(back.topk("rain gauge", 2)[0].chunk_id == store.topk("rain gauge", 2)[0].chunk_id);
}

TEST_CASE("bundles respect the budget") {
    const auto& s = testing::shipped();
    for (auto kind : {MemoryKind::kg, MemoryKind::vector, MemoryKind::null}) {
        auto mem = s.memories->get(kind);
        REQUIRE(mem);
        CHECK(mem->kind() == kind);
        CHECK(mem->corpus_hash() == s.memories->corpus_hash);
        for (std::size_t budget : {0u, 3u, 40u, 400u}) {
            auto b = mem->retrieve("How much rainfall fell at station 54511 on 2024-07-01?", budget);
            CHECK(whitespace_token_count(b.rendered) <= budget);
            CHECK(b.token_budget == budget);
            if (kind == MemoryKind::null) CHECK(b.rendered.empty());
        }
    }
}

TEST_CASE("kg memory surfaces the providing api for an alias query") {
    const auto& s = testing::shipped();
    auto b = s.memories->kg->retrieve("How much rainfall fell at station 54511 on 2024-07-01?", 400);
    CHECK(b.rendered.find("get_daily_precipitation") != std::string::npos);
}

TEST_CASE("memory sets refuse a graph from another corpus") {
    const auto& s = testing::shipped();
    auto docs = s.docs;
    docs[0].text += " extra";
    CHECK_THROWS_AS(MemorySet::build(docs, s.graph), ConfigError);
}

}  // TEST_SUITE
