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

#include "kg2data/kg/retrieval.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "kg2data/kernels.hpp"
#include "kg2data/kg/extraction.hpp"
#include "kg2data/kg/leiden.hpp"

namespace kg2data::kg {

ContextBundle make_bundle(const std::vector<std::string>& triple_lines, const std::vector<std::string>& summary_lines,
                          std::size_t token_budget) {
    ContextBundle b;
    b.token_budget = token_budget;
    std::string full;
    std::size_t used = 0;
    auto add = [&](const std::string& line, std::vector<std::string>& whole) {
        full += line;
        full += '\n';
        std::size_t n = whitespace_token_count(line);
        if (used + n <= token_budget) whole.push_back(line);
        used += n;
    };
    for (const auto& l : triple_lines) add(l, b.triples);
    for (const auto& l : summary_lines) add(l, b.summaries);
    b.rendered = used <= token_budget ? rtrim(full) : truncate_tokens(full, token_budget);
    return b;
}

CompletionRequest summary_request(const KnowledgeGraph& graph, const std::vector<std::string>& members) {
    std::set<std::string> in(members.begin(), members.end());
    std::string body = "Entities:\n";
    for (const auto& id : members) {
        const auto* e = graph.find_entity(id);
        body += "- " + e->canonical_name + " (" + std::string(to_string(e->type)) + "): " + e->description + "\n";
    }
    body += "Relationships:\n";
    for (const auto& t : graph.triples()) {
        if (in.count(t.subject) && in.count(t.object)) body += "- " + render_triple(graph, t) + "\n";
    }
    CompletionRequest r;
    r.messages = {{Role::system,
                   "Summarize this community of a meteorological knowledge graph in two or three sentences. "
                   "Name the key elements, instruments and data services and how they relate."},
                  {Role::user, body}};
    r.temperature = 0.0;
    r.max_tokens = 256;
    return r;
}

CommunityHierarchy summarize_communities(const KnowledgeGraph& graph, CommunityHierarchy hierarchy,
                                         const Gateway& llm) {
    hierarchy.summaries.clear();
    for (std::size_t level = 0; level < hierarchy.levels.size(); ++level) {
        const int l = static_cast<int>(level);
        for (int c : hierarchy.communities(l)) {
            auto members = hierarchy.members(l, c);
            if (members.size() == 1) {
                hierarchy.summaries[{l, c}] = graph.find_entity(members.front())->description;
                continue;
            }
            try {
                hierarchy.summaries[{l, c}] = trim(llm.complete(summary_request(graph, members)));
            } catch (const std::exception& e) {
                throw CommunitySummaryError(l, c, e.what());
            }
        }
    }
    return hierarchy;
}

std::vector<std::string> link_entities(const KnowledgeGraph& graph, const std::string& query) {
    const auto& index = graph.alias_index();
    std::size_t longest = 1;
    for (const auto& [alias, id] : index) longest = std::max(longest, whitespace_token_count(alias));

    auto words = whitespace_tokens(normalize_phrase(query));
    std::vector<std::string> linked;
    std::set<std::string> seen;
    std::size_t i = 0;
    while (i < words.size()) {
        bool matched = false;
        for (std::size_t len = std::min(longest, words.size() - i); len >= 1; --len) {
            std::string phrase = words[i];
            for (std::size_t k = 1; k < len; ++k) phrase += " " + words[i + k];
            auto it = index.find(phrase);
            if (it != index.end()) {
                if (seen.insert(it->second).second) linked.push_back(it->second);
                i += len;
                matched = true;
                break;
            }
        }
        if (!matched) ++i;
    }
    return linked;
}

std::string render_triple(const KnowledgeGraph& graph, const Triple& t) {
    return graph.find_entity(t.subject)->canonical_name + " " + t.predicate + " " +
           graph.find_entity(t.object)->canonical_name;
}

ContextBundle retrieve_context(const KnowledgeGraph& graph, const std::string& query, int hops,
                               std::size_t token_budget) {
    const auto& triples = graph.triples();
    const auto linked = link_entities(graph, query);
    const auto& hierarchy = graph.hierarchy();

    std::vector<std::string> triple_lines;
    std::vector<std::string> summary_lines;

    if (linked.empty()) {
        if (hierarchy && !hierarchy->levels.empty()) {
            int top = static_cast<int>(hierarchy->levels.size()) - 1;
            for (int c : hierarchy->communities(top)) {
                auto it = hierarchy->summaries.find({top, c});
                if (it != hierarchy->summaries.end() && !it->second.empty()) summary_lines.push_back(it->second);
            }
        }
        return make_bundle(triple_lines, summary_lines, token_budget);
    }

    // Incident edges per entity, heaviest first; ties by (s, p, o) order,
    // which is the storage order.
    std::map<std::string, std::vector<std::size_t>, std::less<>> incident;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        incident[triples[i].subject].push_back(i);
        incident[triples[i].object].push_back(i);
    }
    for (auto& [id, edges] : incident) {
        std::stable_sort(edges.begin(), edges.end(),
                         [&](std::size_t a, std::size_t b) { return triples[a].weight > triples[b].weight; });
    }

    std::map<std::string, int, std::less<>> depth;
    std::deque<std::string> queue;
    for (const auto& id : linked) {
        depth[id] = 0;
        queue.push_back(id);
    }
    std::vector<char> taken(triples.size(), 0);
    while (!queue.empty()) {
        auto v = queue.front();
        queue.pop_front();
        int d = depth[v];
        if (d >= hops) continue;
        auto it = incident.find(v);
        if (it == incident.end()) continue;
        for (std::size_t ti : it->second) {
            if (!taken[ti]) {
                taken[ti] = 1;
                triple_lines.push_back(render_triple(graph, triples[ti]));
            }
            const auto& other = triples[ti].subject == v ? triples[ti].object : triples[ti].subject;
            if (!depth.count(other)) {
                depth[other] = d + 1;
                queue.push_back(other);
            }
        }
    }

    if (hierarchy && !hierarchy->levels.empty()) {
        std::set<int> seen;
        for (const auto& id : linked) {
            auto it = hierarchy->levels[0].find(id);
            if (it == hierarchy->levels[0].end() || !seen.insert(it->second).second) continue;
            auto s = hierarchy->summaries.find({0, it->second});
            if (s != hierarchy->summaries.end() && !s->second.empty()) summary_lines.push_back(s->second);
        }
    }
    return make_bundle(triple_lines, summary_lines, token_budget);
}

KnowledgeGraph build_graph(const std::vector<Document>& docs, const Gateway& llm, const CurationTables& tables,
                           const PipelineOptions& options) {
    auto chunks = chunk_corpus(docs, options.target_tokens, options.overlap);
    std::vector<Extraction> extracted(chunks.size());
    kernels::for_each_index(
        chunks.size(), [&](std::size_t i) { extracted[i] = extract_graph(chunks[i], llm); },
        options.parallel_extraction ? kernels::Exec::parallel : kernels::Exec::serial);

    KnowledgeGraph graph;
    graph.corpus_hash = corpus_hash(docs);
    for (const auto& e : extracted) merge_graph(graph, e.entities, e.triples, tables);
    graph = prune_redundant(graph, tables);
    if (graph.entities().empty()) return graph;
    auto hierarchy = leiden_partition(graph, options.resolution, options.seed, options.max_levels);
    graph.hierarchy() = summarize_communities(graph, std::move(hierarchy), llm);
    return graph;
}

}  // namespace kg2data::kg
