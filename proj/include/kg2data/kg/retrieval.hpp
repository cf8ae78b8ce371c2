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

/// Knowledge handed to the agent. `rendered` never exceeds `token_budget`
/// whitespace tokens; `triples` and `summaries` list the lines that fit whole.
struct ContextBundle {
    std::vector<std::string> triples;
    std::vector<std::string> summaries;
    std::size_t token_budget = 0;
    std::string rendered;
    bool operator==(const ContextBundle&) const = default;
};

/// Builds a bundle from candidate lines in order, truncating at the budget.
ContextBundle make_bundle(const std::vector<std::string>& triple_lines, const std::vector<std::string>& summary_lines,
                          std::size_t token_budget);

class CommunitySummaryError : public GatewayError {
public:
    CommunitySummaryError(int level, int community, const std::string& cause)
        : GatewayError("summary for level " + std::to_string(level) + " community " + std::to_string(community) +
                       ": " + cause),
          level_(level),
          community_(community) {}
    int level() const { return level_; }
    int community() const { return community_; }

private:
    int level_;
    int community_;
};

CompletionRequest summary_request(const KnowledgeGraph& graph, const std::vector<std::string>& members);

/// Fills hierarchy.summaries for every (level, community). Singleton
/// communities take the entity description verbatim, without a model call.
CommunityHierarchy summarize_communities(const KnowledgeGraph& graph, CommunityHierarchy hierarchy, const Gateway& llm);

/// Entities mentioned in `query`: case-insensitive longest alias match after
/// punctuation stripping, in order of first mention.
std::vector<std::string> link_entities(const KnowledgeGraph& graph, const std::string& query);

/// "subject predicate object" with entity surface names.
std::string render_triple(const KnowledgeGraph& graph, const Triple& t);

/// Triples within `hops` of the linked entities in breadth-first order
/// (heavier edges first at each node), then the linked entities' finest
/// community summaries. With no linked entity: top-level summaries only.
ContextBundle retrieve_context(const KnowledgeGraph& graph, const std::string& query, int hops,
                               std::size_t token_budget);

struct PipelineOptions {
    std::size_t target_tokens = 300;
    std::size_t overlap = 50;
    double resolution = 1.0;
    std::uint64_t seed = 0;
    int max_levels = 3;
    bool parallel_extraction = true;
};

/// chunk -> extract -> merge -> prune -> partition -> summarize.
KnowledgeGraph build_graph(const std::vector<Document>& docs, const Gateway& llm, const CurationTables& tables,
                           const PipelineOptions& options);

}  // namespace kg2data::kg
