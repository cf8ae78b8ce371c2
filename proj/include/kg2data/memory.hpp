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

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kg2data/kernels.hpp"
#include "kg2data/kg/chunking.hpp"
#include "kg2data/kg/graph.hpp"
#include "kg2data/kg/retrieval.hpp"

namespace kg2data::memory {

using kg::ContextBundle;

enum class MemoryKind { kg, vector, null };
std::string_view to_string(MemoryKind k);
MemoryKind memory_kind_from_string(std::string_view s);

struct ScoredChunk {
    std::string chunk_id;
    std::string text;
    double similarity = 0;
};

/// Hashed term-frequency vectors with IDF weights over the indexed corpus.
/// Immutable after build; vectors are pure functions of text.
class VectorStore {
public:
    static constexpr std::size_t kDefaultDimension = 4096;

    static VectorStore build(const std::vector<kg::Chunk>& chunks, std::string corpus_hash,
                             std::size_t dimension = kDefaultDimension);

    /// L2-normalized; the zero vector for text without terms.
    std::vector<float> embed(const std::string& text) const;

    /// Top k by cosine similarity, ties by chunk id ascending.
    std::vector<ScoredChunk> topk(const std::string& query, std::size_t k,
                                  kernels::Exec exec = kernels::Exec::parallel) const;

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return ids_.size(); }
    const std::string& corpus_hash() const { return corpus_hash_; }
    const std::vector<std::string>& chunk_ids() const { return ids_; }
    const std::vector<std::string>& texts() const { return texts_; }
    std::span<const float> vector_of(std::size_t i) const { return {rows_.data() + i * dimension_, dimension_}; }

    /// JSON Lines: a meta record, then `{chunk_id, text, vector}` per entry
    /// with the vector as sparse [bucket, value] pairs.
    std::string serialize() const;
    static VectorStore parse(std::string_view jsonl);

    /// Bucket of a (normalized) term.
    static std::size_t bucket_of(std::string_view term, std::size_t dimension);
    static std::vector<std::string> terms(const std::string& text);

private:
    std::size_t dimension_ = kDefaultDimension;
    std::string corpus_hash_;
    std::vector<float> idf_;
    std::vector<std::string> ids_;
    std::vector<std::string> texts_;
    std::vector<float> rows_;  // size() x dimension_, row-major
};

double cosine(std::span<const float> a, std::span<const float> b);

class MemoryBackend {
public:
    virtual ~MemoryBackend() = default;
    virtual MemoryKind kind() const = 0;
    virtual ContextBundle retrieve(const std::string& query, std::size_t token_budget) const = 0;
    virtual const std::string& corpus_hash() const = 0;
};

class KgMemory : public MemoryBackend {
public:
    explicit KgMemory(std::shared_ptr<const kg::KnowledgeGraph> graph, int hops = 2)
        : graph_(std::move(graph)), hops_(hops) {}
    MemoryKind kind() const override { return MemoryKind::kg; }
    ContextBundle retrieve(const std::string& query, std::size_t token_budget) const override;
    const std::string& corpus_hash() const override { return graph_->corpus_hash; }
    const kg::KnowledgeGraph& graph() const { return *graph_; }

private:
    std::shared_ptr<const kg::KnowledgeGraph> graph_;
    int hops_;
};

class VectorMemory : public MemoryBackend {
public:
    explicit VectorMemory(std::shared_ptr<const VectorStore> store, std::size_t k = 5)
        : store_(std::move(store)), k_(k) {}
    MemoryKind kind() const override { return MemoryKind::vector; }
    ContextBundle retrieve(const std::string& query, std::size_t token_budget) const override;
    const std::string& corpus_hash() const override { return store_->corpus_hash(); }

private:
    std::shared_ptr<const VectorStore> store_;
    std::size_t k_;
};

class NullMemory : public MemoryBackend {
public:
    explicit NullMemory(std::string corpus_hash) : corpus_hash_(std::move(corpus_hash)) {}
    MemoryKind kind() const override { return MemoryKind::null; }
    ContextBundle retrieve(const std::string& query, std::size_t token_budget) const override;
    const std::string& corpus_hash() const override { return corpus_hash_; }

private:
    std::string corpus_hash_;
};

/// All three backends over one corpus. Construction refuses a graph built
/// from a different corpus.
struct MemorySet {
    std::string corpus_hash;
    std::shared_ptr<const MemoryBackend> kg;
    std::shared_ptr<const MemoryBackend> vector;
    std::shared_ptr<const MemoryBackend> null;

    static MemorySet build(const std::vector<kg::Document>& docs, std::shared_ptr<const kg::KnowledgeGraph> graph,
                           std::size_t target_tokens = 300, std::size_t overlap = 50, std::size_t k = 5,
                           int hops = 2);
    std::shared_ptr<const MemoryBackend> get(MemoryKind kind) const;
};

}  // namespace kg2data::memory
