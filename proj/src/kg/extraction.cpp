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

#include "kg2data/kg/extraction.hpp"

#include <cstdlib>
#include <set>

namespace kg2data::kg {

namespace {

constexpr const char* kExtractionPrompt =
    "You extract a meteorological knowledge graph from text.\n"
    "Output one record per line and nothing else. Fields are separated by a single TAB.\n"
    "ENTITY<TAB>name<TAB>type<TAB>description\n"
    "REL<TAB>subject<TAB>predicate<TAB>object<TAB>confidence\n"
    "type is one of: meteorological_element, instrument, event, dataset, api, location, other.\n"
    "predicate is a short snake_case verb phrase; confidence is a number in [0,1].\n"
    "\n"
    "Example text: Relative humidity is measured by a hygrometer.\n"
    "Example output:\n"
    "ENTITY\trelative humidity\tmeteorological_element\tRatio of water vapour pressure to saturation pressure.\n"
    "ENTITY\thygrometer\tinstrument\tInstrument that measures atmospheric moisture.\n"
    "REL\trelative humidity\tmeasured_by\thygrometer\t0.9\n";

[[noreturn]] void fail(const std::string& what, std::size_t line, const std::string& raw) {
    throw ExtractionFormatError("extraction output line " + std::to_string(line) + ": " + what, raw);
}

}  // namespace

CompletionRequest extraction_request(const Chunk& chunk) {
    CompletionRequest r;
    r.messages = {{Role::system, kExtractionPrompt}, {Role::user, "Text:\n" + chunk.text}};
    r.temperature = 0.0;
    r.max_tokens = 1024;
    return r;
}

Extraction parse_extraction(const std::string& text, const std::string& chunk_id, const KnowledgeGraph* known) {
    Extraction out;
    std::set<std::string> ids;
    struct PendingRel {
        std::string subject, predicate, object;
        double confidence;
    };
    std::vector<PendingRel> rels;

    std::size_t line_no = 0;
    for (const auto& raw_line : split(text, '\n')) {
        ++line_no;
        auto line = rtrim(raw_line);
        if (trim(line).empty()) continue;
        auto cols = split(line, '\t');
        const auto tag = trim(cols[0]);
        if (tag == "ENTITY") {
            if (cols.size() != 4) fail("ENTITY record needs 4 fields", line_no, text);
            Entity e;
            e.canonical_name = trim(cols[1]);
            if (normalize_phrase(e.canonical_name).empty()) fail("empty entity name", line_no, text);
            try {
                e.type = entity_type_from_string(trim(cols[2]));
            } catch (const ConfigError& err) {
                fail(err.what(), line_no, text);
            }
            e.description = trim(cols[3]);
            e.id = entity_id_for(e.canonical_name);
            if (ids.insert(e.id).second) out.entities.push_back(std::move(e));
        } else if (tag == "REL") {
            if (cols.size() != 5) fail("REL record needs 5 fields", line_no, text);
            const auto confidence_text = trim(cols[4]);
            char* end = nullptr;
            double confidence = std::strtod(confidence_text.c_str(), &end);
            if (confidence_text.empty() || end != confidence_text.c_str() + confidence_text.size() ||
                !(confidence >= 0.0 && confidence <= 1.0)) {
                fail("confidence must be a number in [0,1]", line_no, text);
            }
            PendingRel r{trim(cols[1]), normalize_predicate(cols[2]), trim(cols[3]), confidence};
            if (normalize_phrase(r.subject).empty() || normalize_phrase(r.object).empty() || r.predicate.empty()) {
                fail("empty relation field", line_no, text);
            }
            rels.push_back(std::move(r));
        } else {
            fail("expected an ENTITY or REL record", line_no, text);
        }
    }

    auto endpoint = [&](const std::string& name) {
        auto id = entity_id_for(name);
        if (ids.count(id)) return id;
        if (known) {
            if (known->find_entity(id)) return id;
            if (const auto* e = known->resolve_alias(name)) return e->id;
        }
        Entity implicit;
        implicit.id = id;
        implicit.canonical_name = name;
        implicit.type = EntityType::other;
        ids.insert(id);
        out.entities.push_back(std::move(implicit));
        return id;
    };
    for (const auto& r : rels) {
        Triple t;
        t.subject = endpoint(r.subject);
        t.object = endpoint(r.object);
        t.predicate = r.predicate;
        t.weight = 1.0;
        t.confidence = r.confidence;
        t.provenance = {chunk_id};
        out.triples.push_back(std::move(t));
    }
    return out;
}

Extraction extract_graph(const Chunk& chunk, const Gateway& llm, const KnowledgeGraph* known) {
    if (trim(chunk.text).empty()) return {};
    return parse_extraction(llm.complete(extraction_request(chunk)), chunk.id, known);
}

}  // namespace kg2data::kg
