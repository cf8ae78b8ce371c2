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

#include <string>
#include <vector>

#include "kg2data/kg/chunking.hpp"
#include "kg2data/kg/graph.hpp"
#include "kg2data/llm_gateway.hpp"

namespace kg2data::kg {

/// Model output that does not follow the record grammar. Carries the raw text.
class ExtractionFormatError : public Error {
public:
    ExtractionFormatError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

struct Extraction {
    std::vector<Entity> entities;
    std::vector<Triple> triples;
};

/// Few-shot extraction request for one chunk (temperature 0).
CompletionRequest extraction_request(const Chunk& chunk);

/// Parses the tab-separated record grammar:
///   ENTITY<TAB>name<TAB>type<TAB>description
///   REL<TAB>subject<TAB>predicate<TAB>object<TAB>confidence
/// Blank lines are ignored; anything else is a format error. Relation
/// endpoints that match neither a returned entity nor one in `known` are added
/// as entities of type `other`.
Extraction parse_extraction(const std::string& text, const std::string& chunk_id, const KnowledgeGraph* known = nullptr);

/// Runs one extraction call. An empty chunk makes no model call.
Extraction extract_graph(const Chunk& chunk, const Gateway& llm, const KnowledgeGraph* known = nullptr);

}  // namespace kg2data::kg
