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

#include "kg2data/fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace kg2data::fixtures {

std::vector<LexiconEntry> parse_lexicon(std::string_view tsv) {
    std::vector<LexiconEntry> out;
    std::size_t line_no = 0;
    for (const auto& raw : split(tsv, '\n')) {
        ++line_no;
        auto line = rtrim(raw);
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        auto cols = split(line, '\t');
        if (cols.size() != 3) throw ParseError("lexicon line " + std::to_string(line_no) + ": expected 3 columns", line_no);
        out.push_back({trim(cols[0]), kg::entity_type_from_string(trim(cols[1])), trim(cols[2])});
    }
    return out;
}

std::vector<LexiconEntry> load_lexicon(const std::string& path) { return parse_lexicon(read_file(path)); }

namespace {

struct Cue {
    std::vector<std::string> words;
    std::string predicate;
};

const std::vector<Cue>& cues() {
    static const std::vector<Cue> table = [] {
        const std::pair<const char*, const char*> raw[] = {
            {"is measured by", "measured_by"},   {"measured by", "measured_by"},
            {"measures", "measures"},            {"measure", "measures"},
            {"is provided by", "provided_by"},   {"provided by", "provided_by"},
            {"comes from", "provided_by"},       {"available from", "provided_by"},
            {"served by", "provided_by"},        {"provides", "provides"},
            {"returns", "provides"},             {"reports", "provides"},
            {"serves", "provides"},              {"delivers", "provides"},
            {"is a type of", "is_a"},            {"is a kind of", "is_a"},
            {"is a form of", "is_a"},            {"type of", "is_a"},
            {"kind of", "is_a"},                 {"form of", "is_a"},
            {"causes", "causes"},                {"leads to", "causes"},
            {"brings", "causes"},                {"produces", "causes"},
            {"is part of", "part_of"},           {"part of", "part_of"},
            {"component of", "part_of"},         {"indicates", "indicates"},
            {"signals", "indicates"},            {"warns of", "indicates"},
            {"influences", "influences"},        {"affects", "influences"},
            {"controls", "influences"},          {"drives", "influences"},
            {"derived from", "derived_from"},    {"computed from", "derived_from"},
            {"calculated from", "derived_from"},
        };
        std::vector<Cue> t;
        for (const auto& [phrase, pred] : raw) t.push_back({whitespace_tokens(phrase), pred});
        return t;
    }();
    return table;
}

bool contains_run(const std::vector<std::string>& hay, std::size_t from, std::size_t to,
                  const std::vector<std::string>& needle) {
    if (needle.empty() || to - from < needle.size()) return false;
    for (std::size_t i = from; i + needle.size() <= to; ++i) {
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
    return false;
}

std::vector<std::string> sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const bool boundary = ((c == '.' || c == '!' || c == '?' || c == ';') &&
                               (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) ||
                              (c == '\n' && i + 1 < text.size() && text[i + 1] == '\n');
        if (!boundary) cur += c;
        if (boundary || i + 1 == text.size()) {
            if (!trim(cur).empty()) out.push_back(cur);
            cur.clear();
        }
    }
    return out;
}

std::string render_value(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    return canonical_json(v);
}

}  // namespace

std::string extract_by_rules(const std::string& text, const std::vector<LexiconEntry>& lexicon,
                             const kg::CurationTables& tables) {
    // phrase (normalized words) -> (lexicon index, surface name to emit)
    std::map<std::vector<std::string>, std::pair<std::size_t, std::string>> phrases;
    std::map<std::string, std::size_t> by_norm;
    std::size_t longest = 1;
    for (std::size_t i = 0; i < lexicon.size(); ++i) {
        const auto norm = normalize_phrase(lexicon[i].name);
        by_norm[norm] = i;
        auto words = whitespace_tokens(norm);
        longest = std::max(longest, words.size());
        phrases[words] = {i, lexicon[i].name};
    }
    for (const auto& [variant, canonical] : tables.aliases) {
        auto it = by_norm.find(canonical);
        if (it == by_norm.end()) continue;
        auto words = whitespace_tokens(variant);
        if (words.empty() || phrases.count(words)) continue;
        longest = std::max(longest, words.size());
        phrases[words] = {it->second, variant};
    }

    std::vector<std::string> entity_lines, rel_lines;
    std::set<std::string> seen_entities, seen_rels;
    for (const auto& sentence : sentences(text)) {
        const auto words = whitespace_tokens(normalize_phrase(sentence));
        struct Mention {
            std::size_t begin, end, lex;
            std::string surface;
        };
        std::vector<Mention> mentions;
        std::size_t i = 0;
        while (i < words.size()) {
            bool hit = false;
            for (std::size_t len = std::min(longest, words.size() - i); len >= 1 && !hit; --len) {
                std::vector<std::string> key(words.begin() + static_cast<std::ptrdiff_t>(i),
                                             words.begin() + static_cast<std::ptrdiff_t>(i + len));
                auto it = phrases.find(key);
                if (it != phrases.end()) {
                    mentions.push_back({i, i + len, it->second.first, it->second.second});
                    i += len;
                    hit = true;
                }
            }
            if (!hit) ++i;
        }
        for (const auto& m : mentions) {
            if (seen_entities.insert(m.surface).second) {
                const auto& e = lexicon[m.lex];
                entity_lines.push_back("ENTITY\t" + m.surface + "\t" + std::string(kg::to_string(e.type)) + "\t" +
                                       e.description);
            }
        }
        for (std::size_t k = 0; k + 1 < mentions.size(); ++k) {
            const auto& a = mentions[k];
            const auto& b = mentions[k + 1];
            if (a.lex == b.lex) continue;
            std::string predicate = "related_to";
            std::string confidence = "0.5";
            for (const auto& cue : cues()) {
                if (contains_run(words, a.end, b.begin, cue.words)) {
                    predicate = cue.predicate;
                    confidence = "0.9";
                    break;
                }
            }
            auto line = "REL\t" + a.surface + "\t" + predicate + "\t" + b.surface + "\t" + confidence;
            if (seen_rels.insert(line).second) rel_lines.push_back(line);
        }
    }
    std::string out;
    for (const auto& l : entity_lines) out += l + "\n";
    for (const auto& l : rel_lines) out += l + "\n";
    return out;
}

std::string summarize_by_rules(const CompletionRequest& request) {
    const auto& body = request.messages.back().content;
    std::vector<std::string> names, apis, relations;
    bool in_relations = false;
    for (const auto& line : split(body, '\n')) {
        if (line == "Relationships:") {
            in_relations = true;
            continue;
        }
        if (!starts_with(line, "- ")) continue;
        auto item = line.substr(2);
        if (in_relations) {
            relations.push_back(item);
            continue;
        }
        auto paren = item.find(" (");
        auto name = item.substr(0, paren);
        names.push_back(name);
        if (item.find(" (api)") != std::string::npos) apis.push_back(name);
    }
    std::string out = "Community of " + std::to_string(names.size()) + " entities: " +
                      join(std::vector<std::string>(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(
                                                                                       std::min<std::size_t>(names.size(), 12))),
                           ", ") +
                      ".";
    if (!relations.empty()) {
        std::vector<std::string> top(relations.begin(),
                                     relations.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(relations.size(), 4)));
        out += " Key relations: " + join(top, "; ") + ".";
    }
    if (!apis.empty()) out += " Data services: " + join(apis, ", ") + ".";
    return out;
}

std::shared_ptr<LlmBackend> graph_author(std::vector<LexiconEntry> lexicon, kg::CurationTables tables) {
    return std::make_shared<ScriptedBackend>(
        [lexicon = std::move(lexicon), tables = std::move(tables)](const CompletionRequest& r) -> std::string {
            const auto& system = r.messages.front().content;
            if (starts_with(system, "You extract")) {
                const auto& user = r.messages.back().content;
                return extract_by_rules(user.substr(std::min<std::size_t>(user.size(), 6)), lexicon, tables);
            }
            if (starts_with(system, "Summarize this community")) return summarize_by_rules(r);
            throw Error("graph author cannot answer this request");
        });
}

std::shared_ptr<LlmBackend> pair_author(std::vector<eval::InstructionCase> cases) {
    return std::make_shared<ScriptedBackend>([cases = std::move(cases)](const CompletionRequest& r) -> std::string {
        const auto& user = r.messages.back().content;
        if (!starts_with(user, "Tool: ")) throw Error("pair author expects an API document");
        const auto name = user.substr(6, user.find('\n') - 6);
        const auto style = user.find("Style: implicit.") != std::string::npos ? eval::Style::implicit_
                                                                               : eval::Style::explicit_;
        for (const auto& c : cases) {
            if (c.gold_tool == name && c.style == style) {
                return Json{{"instruction", c.instruction},
                            {"params", c.gold_params},
                            {"intent_tags", c.intent_tags},
                            {"answer_fields", c.answer_fields}}
                    .dump();
            }
        }
        throw Error("pair author has no case for " + name);
    });
}

std::string scratchpad_of(const CompletionRequest& request) {
    const auto& system = request.messages.front().content;
    const auto& query = request.messages.back().content;
    const auto marker = "Question: " + query + "\n";
    auto at = system.rfind(marker);
    return at == std::string::npos ? "" : system.substr(at + marker.size());
}

std::shared_ptr<LlmBackend> gold_agent(std::vector<eval::InstructionCase> cases) {
    return std::make_shared<ScriptedBackend>([cases = std::move(cases)](const CompletionRequest& r) -> std::string {
        const auto& query = r.messages.back().content;
        const eval::InstructionCase* c = nullptr;
        for (const auto& x : cases) {
            if (x.instruction == query) c = &x;
        }
        if (!c) throw Error("gold agent has no case for query: " + query);

        const auto steps = agent::parse_steps(scratchpad_of(r));
        const agent::Observation* last = nullptr;
        for (const auto& s : steps) {
            if (auto* o = std::get_if<agent::Observation>(&s)) last = o;
        }
        if (!last) {
            const auto tag = c->intent_tags.empty() ? std::string("weather") : c->intent_tags.front();
            return "Thought: The question asks for " + tag + " data, so I will query the matching data tool.\n"
                   "Action: " + c->gold_tool + "\nAction Input: " + c->gold_params.dump();
        }
        auto observation = Json::parse(last->text, nullptr, false);
        std::vector<std::string> parts;
        for (const auto& field : c->answer_fields) {
            const Json* v = observation.is_discarded() ? nullptr : &observation;
            for (const auto& part : split(field, '.')) {
                if (!v || !v->is_object() || !v->contains(part)) {
                    v = nullptr;
                    break;
                }
                v = &v->at(part);
            }
            if (v) parts.push_back(field + " = " + render_value(*v));
        }
        return "Thought: I now know the answer.\nFinal Answer: " + (parts.empty() ? std::string("no data returned")
                                                                                : join(parts, "; "));
    });
}

}  // namespace kg2data::fixtures
