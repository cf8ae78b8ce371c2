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

#include "kg2data/memory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace kg2data::memory {

std::string_view to_string(MemoryKind k) {
    switch (k) {
        case MemoryKind::kg:
            return "kg";
        case MemoryKind::vector:
            return "vector";
        case MemoryKind::null:
            return "null";
    }
    return "null";
}

MemoryKind memory_kind_from_string(std::string_view s) {
    if (s == "kg") return MemoryKind::kg;
    if (s == "vector") return MemoryKind::vector;
    if (s == "null") return MemoryKind::null;
    throw ConfigError("unknown memory kind '" + std::string(s) + "' (expected kg, vector or null)");
}

std::vector<std::string> VectorStore::terms(const std::string& text) {
    return whitespace_tokens(normalize_phrase(text));
}

std::size_t VectorStore::bucket_of(std::string_view term, std::size_t dimension) {
    return static_cast<std::size_t>(fnv1a64(term) % dimension);
}

VectorStore VectorStore::build(const std::vector<kg::Chunk>& chunks, std::string corpus_hash, std::size_t dimension) {
    if (dimension == 0) throw ConfigError("vector dimension must be positive");
    VectorStore s;
    s.dimension_ = dimension;
    s.corpus_hash_ = std::move(corpus_hash);

    std::vector<std::size_t> df(dimension, 0);
    for (const auto& c : chunks) {
        std::vector<char> seen(dimension, 0);
        for (const auto& t : terms(c.text)) {
            auto b = bucket_of(t, dimension);
            if (!seen[b]) {
                seen[b] = 1;
                ++df[b];
            }
        }
    }
    const double n = static_cast<double>(chunks.size());
    s.idf_.resize(dimension);
    for (std::size_t b = 0; b < dimension; ++b) {
        s.idf_[b] = static_cast<float>(std::log((n + 1.0) / (static_cast<double>(df[b]) + 1.0)) + 1.0);
    }
    s.rows_.reserve(chunks.size() * dimension);
    for (const auto& c : chunks) {
        s.ids_.push_back(c.id);
        s.texts_.push_back(c.text);
        auto v = s.embed(c.text);
        s.rows_.insert(s.rows_.end(), v.begin(), v.end());
    }
    return s;
}

std::vector<float> VectorStore::embed(const std::string& text) const {
    std::vector<double> acc(dimension_, 0.0);
    for (const auto& t : terms(text)) acc[bucket_of(t, dimension_)] += 1.0;
    double norm = 0.0;
    for (std::size_t b = 0; b < dimension_; ++b) {
        acc[b] *= idf_.empty() ? 1.0 : idf_[b];
        norm += acc[b] * acc[b];
    }
    std::vector<float> out(dimension_, 0.0f);
    if (norm > 0) {
        norm = std::sqrt(norm);
        for (std::size_t b = 0; b < dimension_; ++b) out[b] = static_cast<float>(acc[b] / norm);
    }
    return out;
}

std::vector<ScoredChunk> VectorStore::topk(const std::string& query, std::size_t k, kernels::Exec exec) const {
    auto q = embed(query);
    std::vector<double> scores(size());
    kernels::dot_scores(rows_, dimension_, q, scores, exec);
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids_[a] < ids_[b];
    };
    const std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
    std::vector<ScoredChunk> out;
    for (std::size_t i = 0; i < take; ++i) out.push_back({ids_[order[i]], texts_[order[i]], scores[order[i]]});
    return out;
}

std::string VectorStore::serialize() const {
    std::string out;
    Json meta = {{"meta", {{"dimension", dimension_}, {"corpus_hash", corpus_hash_}, {"idf", idf_}}}};
    out += meta.dump() + "\n";
    for (std::size_t i = 0; i < size(); ++i) {
        Json vec = Json::array();
        auto row = vector_of(i);
        for (std::size_t b = 0; b < dimension_; ++b) {
            if (row[b] != 0.0f) vec.push_back(Json::array({b, row[b]}));
        }
        out += Json{{"chunk_id", ids_[i]}, {"text", texts_[i]}, {"vector", std::move(vec)}}.dump() + "\n";
    }
    return out;
}

VectorStore VectorStore::parse(std::string_view jsonl) {
    VectorStore s;
    bool have_meta = false;
    std::size_t line_no = 0;
    for (const auto& line : split(jsonl, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            auto j = Json::parse(line);
            if (j.contains("meta")) {
                const auto& m = j.at("meta");
                s.dimension_ = m.at("dimension").get<std::size_t>();
                s.corpus_hash_ = m.at("corpus_hash").get<std::string>();
                s.idf_ = m.at("idf").get<std::vector<float>>();
                have_meta = true;
                continue;
            }
            if (!have_meta) throw ParseError("vector store must start with a meta record", line_no);
            s.ids_.push_back(j.at("chunk_id").get<std::string>());
            s.texts_.push_back(j.at("text").get<std::string>());
            std::vector<float> row(s.dimension_, 0.0f);
            for (const auto& pair : j.at("vector")) {
                auto b = pair.at(0).get<std::size_t>();
                if (b >= s.dimension_) throw ParseError("vector bucket out of range", line_no);
                row[b] = pair.at(1).get<float>();
            }
            s.rows_.insert(s.rows_.end(), row.begin(), row.end());
        } catch (const Json::exception& e) {
            throw ParseError("vector store line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    return s;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

ContextBundle KgMemory::retrieve(const std::string& query, std::size_t token_budget) const {
    return kg::retrieve_context(*graph_, query, hops_, token_budget);
}

ContextBundle VectorMemory::retrieve(const std::string& query, std::size_t token_budget) const {
    std::vector<std::string> texts;
    for (auto& hit : store_->topk(query, k_)) texts.push_back(std::move(hit.text));
    return kg::make_bundle({}, texts, token_budget);
}

ContextBundle NullMemory::retrieve(const std::string&, std::size_t token_budget) const {
    ContextBundle b;
    b.token_budget = token_budget;
    return b;
}

MemorySet MemorySet::build(const std::vector<kg::Document>& docs, std::shared_ptr<const kg::KnowledgeGraph> graph,
                           std::size_t target_tokens, std::size_t overlap, std::size_t k, int hops) {
    MemorySet set;
    set.corpus_hash = kg::corpus_hash(docs);
    if (graph->corpus_hash != set.corpus_hash) {
        throw ConfigError("knowledge graph was built from a different corpus (graph " + graph->corpus_hash +
                          ", corpus " + set.corpus_hash + ")");
    }
    auto chunks = kg::chunk_corpus(docs, target_tokens, overlap);
    auto store = std::make_shared<const VectorStore>(VectorStore::build(chunks, set.corpus_hash));
    set.kg = std::make_shared<const KgMemory>(std::move(graph), hops);
    set.vector = std::make_shared<const VectorMemory>(std::move(store), k);
    set.null = std::make_shared<const NullMemory>(set.corpus_hash);
    return set;
}

std::shared_ptr<const MemoryBackend> MemorySet::get(MemoryKind kind) const {
    switch (kind) {
        case MemoryKind::kg:
            return kg;
        case MemoryKind::vector:
            return vector;
        case MemoryKind::null:
            return null;
    }
    return null;
}

}  // namespace kg2data::memory
