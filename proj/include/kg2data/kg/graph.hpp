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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kg2data/api_catalog.hpp"

namespace kg2data::kg {

enum class EntityType { meteorological_element, instrument, event, dataset, api, location, other };
std::string_view to_string(EntityType t);
EntityType entity_type_from_string(std::string_view s);

struct Entity {
    std::string id;
    std::string canonical_name;
    EntityType type = EntityType::other;
    std::set<std::string> aliases;
    std::string description;
    bool operator==(const Entity&) const = default;
};

struct Triple {
    std::string subject;
    std::string predicate;
    std::string object;
    double weight = 1.0;
    std::set<std::string> provenance;
    double confidence = 1.0;
    bool operator==(const Triple&) const = default;
};

/// Level 0 is the finest partition; level l+1 communities are unions of
/// level l communities.
struct CommunityHierarchy {
    std::vector<std::map<std::string, int>> levels;
    std::map<std::pair<int, int>, std::string> summaries;
    std::vector<double> resolutions;     // resolution used for each level
    std::vector<std::vector<double>> pass_qualities;  // per level: quality after every Leiden pass

    /// Members of (level, community) in id order.
    std::vector<std::string> members(int level, int community) const;
    /// Community ids present at `level`, ascending.
    std::vector<int> communities(int level) const;
    bool operator==(const CommunityHierarchy& o) const {
        return levels == o.levels && summaries == o.summaries;
    }
};

/// Two-column `variant<TAB>canonical` tables curated by domain experts.
/// In the predicate synonym table a canonical value starting with `~` means
/// the variant is the inverse relation: (a variant b) == (b canonical a).
struct CurationTables {
    std::map<std::string, std::string> aliases;   // normalized variant -> normalized canonical
    std::map<std::string, std::string> synonyms;  // normalized predicate -> canonical (maybe ~inverse)

    static std::map<std::string, std::string> parse_tsv(std::string_view text, bool predicates);
    static CurationTables load(const std::string& alias_path, const std::string& synonym_path);
};

/// "Is Measured By" -> "is_measured_by".
std::string normalize_predicate(std::string_view p);
/// Stable entity id derived from a normalized name ("Rain Gauge" -> "rain_gauge").
std::string entity_id_for(std::string_view name);

class KnowledgeGraph {
public:
    const std::vector<Entity>& entities() const { return entities_; }
    const std::vector<Triple>& triples() const { return triples_; }
    const Entity* find_entity(std::string_view id) const;
    /// Entity whose alias set (normalized) contains `phrase`.
    const Entity* resolve_alias(std::string_view phrase) const;
    /// Normalized alias -> entity id, for entity linking.
    const std::map<std::string, std::string, std::less<>>& alias_index() const { return alias_index_; }

    std::optional<CommunityHierarchy>& hierarchy() { return hierarchy_; }
    const std::optional<CommunityHierarchy>& hierarchy() const { return hierarchy_; }
    std::string corpus_hash;

    /// Inserts or unifies an entity; returns the id it resolved to. Aliases
    /// are resolved through `tables` first.
    std::string upsert_entity(const Entity& e, const CurationTables& tables);
    /// Inserts a triple whose endpoints already exist, or folds it into the
    /// identical (subject, predicate, object) edge. Self-loops are dropped.
    void upsert_triple(Triple t);

    /// Replaces all triples (used by pruning).
    void set_triples(std::vector<Triple> triples);

    bool operator==(const KnowledgeGraph& o) const {
        return entities_ == o.entities_ && triples_ == o.triples_ && hierarchy_ == o.hierarchy_ &&
               corpus_hash == o.corpus_hash;
    }

private:
    void index_entity(std::size_t i);
    void sort_canonical();
    friend KnowledgeGraph& merge_graph(KnowledgeGraph&, const std::vector<Entity>&, const std::vector<Triple>&,
                                       const CurationTables&);
    friend KnowledgeGraph parse_snapshot(std::string_view);

    std::vector<Entity> entities_;  // sorted by id
    std::vector<Triple> triples_;   // sorted by (subject, predicate, object)
    std::map<std::string, std::size_t, std::less<>> entity_index_;
    std::map<std::string, std::string, std::less<>> alias_index_;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> triple_index_;
    std::optional<CommunityHierarchy> hierarchy_;
};

/// Accumulates extracted entities/triples. Triple endpoints in `triples` refer
/// to ids in `entities` (or entities already in the graph). Identical triples
/// add weight and provenance rather than edges; the result does not depend on
/// merge order.
KnowledgeGraph& merge_graph(KnowledgeGraph& graph, const std::vector<Entity>& entities,
                            const std::vector<Triple>& triples, const CurationTables& tables);

/// Maps predicates through the synonym table (flipping inverse relations) and
/// folds edges sharing (subject, predicate, object). Idempotent.
KnowledgeGraph prune_redundant(const KnowledgeGraph& graph, const CurationTables& tables);

/// JSON Lines snapshot: meta, entity, triple and community records.
std::string serialize_snapshot(const KnowledgeGraph& graph);
KnowledgeGraph parse_snapshot(std::string_view jsonl);
void save_snapshot(const KnowledgeGraph& graph, const std::string& path);
KnowledgeGraph load_snapshot(const std::string& path);

}  // namespace kg2data::kg
