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

#include "kg2data/kg/graph.hpp"

#include <algorithm>
#include <array>

namespace kg2data::kg {

namespace {

constexpr std::array<std::pair<std::string_view, EntityType>, 7> kTypes{{
    {"meteorological_element", EntityType::meteorological_element},
    {"instrument", EntityType::instrument},
    {"event", EntityType::event},
    {"dataset", EntityType::dataset},
    {"api", EntityType::api},
    {"location", EntityType::location},
    {"other", EntityType::other},
}};

// Order-independent choice between two descriptions.
const std::string& pick_description(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return a.size() > b.size() ? a : b;
    return a < b ? a : b;
}

EntityType pick_type(EntityType a, EntityType b) {
    if (a == EntityType::other) return b;
    if (b == EntityType::other) return a;
    return std::min(a, b);
}

}  // namespace

std::string_view to_string(EntityType t) {
    for (const auto& [name, value] : kTypes) {
        if (value == t) return name;
    }
    return "other";
}

EntityType entity_type_from_string(std::string_view s) {
    auto norm = normalize_predicate(s);
    for (const auto& [name, value] : kTypes) {
        if (name == norm) return value;
    }
    throw ConfigError("unknown entity type '" + std::string(s) + "'");
}

std::string normalize_predicate(std::string_view p) {
    std::string out;
    bool pending = false;
    for (unsigned char c : p) {
        bool alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (!alnum) {
            pending = !out.empty();
            continue;
        }
        if (pending) {
            out.push_back('_');
            pending = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string entity_id_for(std::string_view name) {
    auto n = normalize_phrase(name);
    std::replace(n.begin(), n.end(), ' ', '_');
    return n;
}

std::vector<std::string> CommunityHierarchy::members(int level, int community) const {
    std::vector<std::string> out;
    if (level < 0 || static_cast<std::size_t>(level) >= levels.size()) return out;
    for (const auto& [id, c] : levels[static_cast<std::size_t>(level)]) {
        if (c == community) out.push_back(id);
    }
    return out;
}

std::vector<int> CommunityHierarchy::communities(int level) const {
    std::set<int> ids;
    if (level >= 0 && static_cast<std::size_t>(level) < levels.size()) {
        for (const auto& [id, c] : levels[static_cast<std::size_t>(level)]) ids.insert(c);
    }
    return {ids.begin(), ids.end()};
}

std::map<std::string, std::string> CurationTables::parse_tsv(std::string_view text, bool predicates) {
    std::map<std::string, std::string> table;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        auto line = rtrim(raw);
        if (trim(line).empty() || line[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() != 2) {
            throw ParseError("curation table line " + std::to_string(line_no) + ": expected variant<TAB>canonical",
                             line_no);
        }
        std::string variant, canonical;
        if (predicates) {
            variant = normalize_predicate(cols[0]);
            auto c = trim(cols[1]);
            bool inverse = !c.empty() && c[0] == '~';
            canonical = (inverse ? "~" : "") + normalize_predicate(inverse ? c.substr(1) : c);
        } else {
            variant = normalize_phrase(cols[0]);
            canonical = normalize_phrase(cols[1]);
        }
        if (variant.empty() || canonical.empty() || canonical == "~") {
            throw ParseError("curation table line " + std::to_string(line_no) + ": empty column", line_no);
        }
        table[variant] = canonical;
    }
    for (const auto& [variant, canonical] : table) {
        auto bare = canonical[0] == '~' ? canonical.substr(1) : canonical;
        if (table.count(bare) && bare != variant) {
            throw ConfigError("curation table maps canonical '" + bare + "' again; chains are not allowed");
        }
    }
    return table;
}

CurationTables CurationTables::load(const std::string& alias_path, const std::string& synonym_path) {
    CurationTables t;
    if (!alias_path.empty()) t.aliases = parse_tsv(read_file(alias_path), false);
    if (!synonym_path.empty()) t.synonyms = parse_tsv(read_file(synonym_path), true);
    return t;
}

const Entity* KnowledgeGraph::find_entity(std::string_view id) const {
    auto it = entity_index_.find(id);
    return it == entity_index_.end() ? nullptr : &entities_[it->second];
}

const Entity* KnowledgeGraph::resolve_alias(std::string_view phrase) const {
    auto it = alias_index_.find(normalize_phrase(phrase));
    return it == alias_index_.end() ? nullptr : find_entity(it->second);
}

void KnowledgeGraph::index_entity(std::size_t i) {
    const auto& e = entities_[i];
    entity_index_[e.id] = i;
    for (const auto& a : e.aliases) alias_index_.emplace(a, e.id);
}

std::string KnowledgeGraph::upsert_entity(const Entity& e, const CurationTables& tables) {
    auto name = normalize_phrase(e.canonical_name);
    if (name.empty()) throw ConfigError("entity canonical_name must be non-empty");
    auto mapped = tables.aliases.find(name);
    std::string canonical = mapped != tables.aliases.end() ? mapped->second : name;

    std::set<std::string> incoming{name, canonical};
    for (const auto& a : e.aliases) {
        auto n = normalize_phrase(a);
        if (!n.empty()) incoming.insert(n);
    }
    for (const auto& [variant, target] : tables.aliases) {
        if (target == canonical) incoming.insert(variant);
    }

    std::string id = entity_id_for(canonical);
    if (!find_entity(id)) {
        // An existing entity may already own the canonical phrase as an alias.
        auto hit = alias_index_.find(canonical);
        if (hit != alias_index_.end()) id = hit->second;
    }

    // Surface form: the curated canonical when the table maps this name,
    // otherwise the extracted name as written.
    std::string display = mapped != tables.aliases.end() ? canonical : trim(e.canonical_name);

    if (const auto* existing = find_entity(id)) {
        auto& target = entities_[entity_index_.at(existing->id)];
        if (normalize_phrase(target.canonical_name) == normalize_phrase(display)) {
            target.canonical_name = std::min(target.canonical_name, display);
        }
        target.description = pick_description(target.description, e.description);
        target.type = pick_type(target.type, e.type);
        for (const auto& a : incoming) {
            auto owner = alias_index_.find(a);
            if (owner != alias_index_.end() && owner->second != target.id) continue;  // owned elsewhere
            target.aliases.insert(a);
            alias_index_.emplace(a, target.id);
        }
        return target.id;
    }

    Entity created;
    created.id = id;
    created.canonical_name = display;
    created.type = e.type;
    created.description = e.description;
    for (const auto& a : incoming) {
        if (!alias_index_.count(a)) created.aliases.insert(a);
    }
    entities_.push_back(std::move(created));
    index_entity(entities_.size() - 1);
    return id;
}

void KnowledgeGraph::upsert_triple(Triple t) {
    t.predicate = normalize_predicate(t.predicate);
    if (t.subject == t.object) return;
    if (!find_entity(t.subject) || !find_entity(t.object)) {
        throw ConfigError("triple endpoint not in graph: " + t.subject + " -> " + t.object);
    }
    auto key = std::make_tuple(t.subject, t.predicate, t.object);
    auto it = triple_index_.find(key);
    if (it == triple_index_.end()) {
        triple_index_.emplace(key, triples_.size());
        triples_.push_back(std::move(t));
        return;
    }
    auto& existing = triples_[it->second];
    existing.weight += t.weight;
    existing.provenance.insert(t.provenance.begin(), t.provenance.end());
    existing.confidence = std::max(existing.confidence, t.confidence);
}

void KnowledgeGraph::set_triples(std::vector<Triple> triples) {
    triples_.clear();
    triple_index_.clear();
    for (auto& t : triples) upsert_triple(std::move(t));
    sort_canonical();
}

void KnowledgeGraph::sort_canonical() {
    std::sort(entities_.begin(), entities_.end(), [](const Entity& a, const Entity& b) { return a.id < b.id; });
    std::sort(triples_.begin(), triples_.end(), [](const Triple& a, const Triple& b) {
        return std::tie(a.subject, a.predicate, a.object) < std::tie(b.subject, b.predicate, b.object);
    });
    entity_index_.clear();
    alias_index_.clear();
    triple_index_.clear();
    for (std::size_t i = 0; i < entities_.size(); ++i) index_entity(i);
    for (std::size_t i = 0; i < triples_.size(); ++i) {
        const auto& t = triples_[i];
        triple_index_.emplace(std::make_tuple(t.subject, t.predicate, t.object), i);
    }
}

KnowledgeGraph& merge_graph(KnowledgeGraph& graph, const std::vector<Entity>& entities,
                            const std::vector<Triple>& triples, const CurationTables& tables) {
    std::map<std::string, std::string> resolved;
    for (const auto& e : entities) resolved[e.id] = graph.upsert_entity(e, tables);
    auto endpoint = [&](const std::string& id) -> std::string {
        if (auto it = resolved.find(id); it != resolved.end()) return it->second;
        if (graph.find_entity(id)) return id;
        if (const auto* e = graph.resolve_alias(id)) return e->id;
        throw ConfigError("triple references unknown entity '" + id + "'");
    };
    for (const auto& t : triples) {
        Triple copy = t;
        copy.subject = endpoint(t.subject);
        copy.object = endpoint(t.object);
        graph.upsert_triple(std::move(copy));
    }
    graph.sort_canonical();
    return graph;
}

KnowledgeGraph prune_redundant(const KnowledgeGraph& graph, const CurationTables& tables) {
    KnowledgeGraph out = graph;
    std::vector<Triple> mapped;
    mapped.reserve(graph.triples().size());
    for (auto t : graph.triples()) {
        auto p = normalize_predicate(t.predicate);
        if (auto it = tables.synonyms.find(p); it != tables.synonyms.end()) {
            const auto& canonical = it->second;
            if (canonical[0] == '~') {
                std::swap(t.subject, t.object);
                p = canonical.substr(1);
            } else {
                p = canonical;
            }
        }
        t.predicate = p;
        mapped.push_back(std::move(t));
    }
    out.set_triples(std::move(mapped));
    return out;
}

std::string serialize_snapshot(const KnowledgeGraph& graph) {
    std::string out;
    auto emit = [&out](const Json& j) {
        out += j.dump();
        out += '\n';
    };
    Json meta = {{"t", "meta"}, {"corpus_hash", graph.corpus_hash}};
    if (graph.hierarchy()) {
        meta["resolutions"] = graph.hierarchy()->resolutions;
        meta["pass_qualities"] = graph.hierarchy()->pass_qualities;
    }
    emit(meta);
    for (const auto& e : graph.entities()) {
        emit({{"t", "entity"},
              {"id", e.id},
              {"canonical_name", e.canonical_name},
              {"type", to_string(e.type)},
              {"aliases", e.aliases},
              {"description", e.description}});
    }
    for (const auto& t : graph.triples()) {
        emit({{"t", "triple"},
              {"subject", t.subject},
              {"predicate", t.predicate},
              {"object", t.object},
              {"weight", t.weight},
              {"provenance", t.provenance},
              {"confidence", t.confidence}});
    }
    if (const auto& h = graph.hierarchy()) {
        for (std::size_t level = 0; level < h->levels.size(); ++level) {
            for (int c : h->communities(static_cast<int>(level))) {
                Json rec = {{"t", "community"},
                            {"level", level},
                            {"community", c},
                            {"members", h->members(static_cast<int>(level), c)}};
                if (auto it = h->summaries.find({static_cast<int>(level), c}); it != h->summaries.end()) {
                    rec["summary"] = it->second;
                }
                emit(rec);
            }
        }
    }
    return out;
}

KnowledgeGraph parse_snapshot(std::string_view jsonl) {
    KnowledgeGraph g;
    CommunityHierarchy h;
    bool has_hierarchy = false;
    std::size_t line_no = 0;
    for (const auto& line : split(jsonl, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            auto j = Json::parse(line);
            auto tag = j.at("t").get<std::string>();
            if (tag == "meta") {
                g.corpus_hash = j.value("corpus_hash", "");
                h.resolutions = j.value("resolutions", std::vector<double>{});
                h.pass_qualities = j.value("pass_qualities", std::vector<std::vector<double>>{});
            } else if (tag == "entity") {
                Entity e;
                e.id = j.at("id").get<std::string>();
                e.canonical_name = j.at("canonical_name").get<std::string>();
                e.type = entity_type_from_string(j.at("type").get<std::string>());
                e.aliases = j.value("aliases", std::set<std::string>{});
                e.description = j.value("description", "");
                g.entities_.push_back(std::move(e));
            } else if (tag == "triple") {
                Triple t;
                t.subject = j.at("subject").get<std::string>();
                t.predicate = j.at("predicate").get<std::string>();
                t.object = j.at("object").get<std::string>();
                t.weight = j.at("weight").get<double>();
                t.provenance = j.value("provenance", std::set<std::string>{});
                t.confidence = j.value("confidence", 1.0);
                g.triples_.push_back(std::move(t));
            } else if (tag == "community") {
                has_hierarchy = true;
                auto level = j.at("level").get<std::size_t>();
                int c = j.at("community").get<int>();
                if (h.levels.size() <= level) h.levels.resize(level + 1);
                for (const auto& m : j.at("members")) h.levels[level][m.get<std::string>()] = c;
                if (j.contains("summary")) h.summaries[{static_cast<int>(level), c}] = j.at("summary").get<std::string>();
            } else {
                throw ParseError("unknown record tag '" + tag + "'", line_no);
            }
        } catch (const Json::exception& e) {
            throw ParseError("snapshot line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    g.sort_canonical();
    if (has_hierarchy) g.hierarchy_ = std::move(h);
    return g;
}

void save_snapshot(const KnowledgeGraph& graph, const std::string& path) {
    write_file(path, serialize_snapshot(graph));
}

KnowledgeGraph load_snapshot(const std::string& path) { return parse_snapshot(read_file(path)); }

}  // namespace kg2data::kg
