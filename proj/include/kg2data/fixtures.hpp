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

#include "kg2data/evaluation.hpp"
#include "kg2data/kg/graph.hpp"
#include "kg2data/llm_gateway.hpp"

// Deterministic stand-ins for the language model, used to record the shipped
// cassettes and in tests. None of them is consulted at evaluation time; the
// evaluation only ever sees the recorded replies.
namespace kg2data::fixtures {

struct LexiconEntry {
    std::string name;
    kg::EntityType type = kg::EntityType::other;
    std::string description;
};

/// `name<TAB>type<TAB>description`, `#` comments allowed.
std::vector<LexiconEntry> parse_lexicon(std::string_view tsv);
std::vector<LexiconEntry> load_lexicon(const std::string& path);

/// ENTITY/REL records for one chunk: lexicon terms (or curated aliases of
/// them) found in each sentence, related by cue phrases between consecutive
/// mentions.
std::string extract_by_rules(const std::string& text, const std::vector<LexiconEntry>& lexicon,
                             const kg::CurationTables& tables);

/// Summary text for a community-summary request.
std::string summarize_by_rules(const CompletionRequest& request);

/// Answers extraction and community-summary requests.
std::shared_ptr<LlmBackend> graph_author(std::vector<LexiconEntry> lexicon, kg::CurationTables tables);

/// Answers pair-generation requests from an existing case list.
std::shared_ptr<LlmBackend> pair_author(std::vector<eval::InstructionCase> cases);

/// Agent turns that call the gold tool with the gold params and then quote
/// every answer field from the observation.
std::shared_ptr<LlmBackend> gold_agent(std::vector<eval::InstructionCase> cases);

/// Text after `Question: <query>\n` in the system prompt.
std::string scratchpad_of(const CompletionRequest& request);

}  // namespace kg2data::fixtures
