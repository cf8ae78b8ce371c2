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

#include "kg2data/evaluation.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

namespace kg2data::eval {

std::string_view to_string(Style s) { return s == Style::explicit_ ? "explicit" : "implicit"; }

Style style_from_string(std::string_view s) {
    if (s == "explicit") return Style::explicit_;
    if (s == "implicit") return Style::implicit_;
    throw ConfigError("unknown style '" + std::string(s) + "' (expected explicit or implicit)");
}

Json to_json(const InstructionCase& c) {
    return {{"id", c.id},
            {"instruction", c.instruction},
            {"style", to_string(c.style)},
            {"gold_tool", c.gold_tool},
            {"gold_params", c.gold_params},
            {"intent_tags", c.intent_tags},
            {"answer_fields", c.answer_fields}};
}

InstructionCase case_from_json(const Json& j) {
    InstructionCase c;
    c.id = j.at("id").get<std::string>();
    c.instruction = j.at("instruction").get<std::string>();
    c.style = style_from_string(j.at("style").get<std::string>());
    c.gold_tool = j.at("gold_tool").get<std::string>();
    c.gold_params = j.value("gold_params", Json::object());
    if (!c.gold_params.is_object()) throw ConfigError("case " + c.id + ": gold_params must be an object");
    c.intent_tags = j.value("intent_tags", std::vector<std::string>{});
    c.answer_fields = j.value("answer_fields", std::vector<std::string>{});
    return c;
}

bool mentions_name(std::string_view text, std::string_view name) {
    const auto needle = squash_identifier(name);
    return !needle.empty() && squash_identifier(text).find(needle) != std::string::npos;
}

void validate_cases(const std::vector<InstructionCase>& cases, const tools::ToolRegistry& registry) {
    std::set<std::string> ids;
    for (const auto& c : cases) {
        if (c.id.empty()) throw ConfigError("case with an empty id");
        if (!ids.insert(c.id).second) throw ConfigError("duplicate case id '" + c.id + "'");
        const auto* tool = registry.find(c.gold_tool);
        if (!tool) throw ConfigError("case " + c.id + ": unknown gold_tool '" + c.gold_tool + "'");
        if (mentions_name(c.instruction, tool->name) || mentions_name(c.instruction, tool->bound_api)) {
            throw ConfigError("case " + c.id + ": instruction names the tool '" + tool->name + "'");
        }
        const auto check = validate_request(*registry.catalog().find(tool->bound_api), c.gold_params);
        if (!check.ok()) {
            throw ConfigError("case " + c.id + ": gold_params invalid: " + join(check.violations, "; "));
        }
    }
}

void check_pair_coverage(const std::vector<InstructionCase>& cases, const tools::ToolRegistry& registry) {
    std::map<std::string, std::pair<int, int>> seen;
    for (const auto& c : cases) {
        auto& [ex, im] = seen[c.gold_tool];
        (c.style == Style::explicit_ ? ex : im) += 1;
    }
    for (const auto& t : registry.tools()) {
        auto it = seen.find(t.name);
        if (it == seen.end() || it->second != std::pair{1, 1}) {
            throw ConfigError("tool " + t.name + " needs exactly one explicit and one implicit case");
        }
    }
}

std::vector<InstructionCase> parse_cases(std::string_view jsonl, const tools::ToolRegistry& registry) {
    std::vector<InstructionCase> cases;
    std::size_t line_no = 0;
    for (const auto& line : split(jsonl, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            cases.push_back(case_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw ParseError("case file line " + std::to_string(line_no) + ": " + e.what(), line_no);
        } catch (const ConfigError& e) {
            throw ConfigError("case file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    validate_cases(cases, registry);
    return cases;
}

std::vector<InstructionCase> load_cases(const std::string& path, const tools::ToolRegistry& registry) {
    return parse_cases(read_file(path), registry);
}

std::string serialize_cases(const std::vector<InstructionCase>& cases) {
    std::string out;
    for (const auto& c : cases) out += to_json(c).dump() + "\n";
    return out;
}

namespace {

std::vector<std::string> default_answer_fields(const ApiSpec& api) {
    std::vector<std::string> out;
    for (const auto& f : api.output_fields) {
        if (f.kind == ValueKind::series) {
            out.push_back("stats." + f.name + ".mean");
        } else if (f.kind == ValueKind::number || f.kind == ValueKind::integer) {
            out.push_back(f.name);
        }
    }
    return out;
}

std::string api_document(const ApiSpec& api) {
    std::string doc = tools::describe_tool({api.name, api.description, api.params, api.name});
    doc += "Returns:\n";
    for (const auto& f : api.output_fields) {
        doc += "- " + f.name + " (" + std::string(to_string(f.kind));
        if (f.units) doc += ", " + *f.units;
        doc += ")\n";
    }
    return doc;
}

}  // namespace

CompletionRequest pair_request(const ApiSpec& api, Style style, int attempt) {
    const std::string style_rule =
        style == Style::explicit_
            ? "Write a clear, direct question that a forecaster would ask and that this API answers."
            : "Write a specialized, implicitly framed question: describe the situation or the decision at hand and "
              "let the data need follow from it, without asking for the quantity by its plain name.";
    CompletionRequest r;
    r.messages = {
        {Role::system,
         "You write evaluation questions for a meteorological data assistant. Never use the API name or any "
         "explicit hint about which API to call. Reply with one JSON object: {\"instruction\": text, \"params\": "
         "object of API parameters the question implies, \"intent_tags\": list of short capability keywords}."},
        {Role::user, api_document(api) + "\nStyle: " + std::string(to_string(style)) + ". " + style_rule +
                         "\nAttempt " + std::to_string(attempt) + " of " + std::to_string(kMaxGenerationAttempts) +
                         "."}};
    r.temperature = 0.0;
    r.max_tokens = 400;
    return r;
}

std::vector<InstructionCase> generate_pairs(const Catalog& catalog, const Gateway& llm, int per_api) {
    if (per_api < 1) throw ConfigError("per_api must be >= 1");
    std::vector<InstructionCase> out;
    for (const auto& api : catalog.specs()) {
        for (int i = 0; i < per_api; ++i) {
            const Style style = i % 2 == 0 ? Style::explicit_ : Style::implicit_;
            std::optional<InstructionCase> accepted;
            for (int attempt = 1; attempt <= kMaxGenerationAttempts && !accepted; ++attempt) {
                auto reply = Json::parse(llm.complete(pair_request(api, style, attempt)), nullptr, false);
                if (reply.is_discarded() || !reply.is_object()) continue;
                const auto instruction = reply.value("instruction", Json()).is_string()
                                             ? trim(reply.at("instruction").get<std::string>())
                                             : std::string();
                const auto params = reply.value("params", Json::object());
                if (instruction.empty() || !params.is_object() || mentions_name(instruction, api.name)) continue;
                if (!validate_request(api, params).ok()) continue;
                InstructionCase c;
                c.id = api.name + "." + std::string(to_string(style));
                if (i >= 2) c.id += "." + std::to_string(i / 2);
                c.instruction = instruction;
                c.style = style;
                c.gold_tool = api.name;
                c.gold_params = params;
                for (const auto& t : reply.value("intent_tags", Json::array())) {
                    if (t.is_string()) c.intent_tags.push_back(t.get<std::string>());
                }
                auto fields = reply.value("answer_fields", Json());
                if (fields.is_array()) {
                    for (const auto& f : fields) {
                        if (f.is_string()) c.answer_fields.push_back(f.get<std::string>());
                    }
                } else {
                    c.answer_fields = default_answer_fields(api);
                }
                accepted = std::move(c);
            }
            if (!accepted) throw GenerationExhaustedError(api.name);
            out.push_back(std::move(*accepted));
        }
    }
    return out;
}

namespace {

std::string canonical_date(const std::string& s) {
    auto parts = split(s, '-');
    if (parts.size() != 3 || parts[0].size() != 4) return s;
    for (auto& p : parts) {
        if (p.empty() || p.size() > 2 + (&p == &parts[0] ? 2 : 0)) return s;
        for (char ch : p) {
            if (!std::isdigit(static_cast<unsigned char>(ch))) return s;
        }
    }
    auto pad = [](const std::string& p) { return p.size() == 1 ? "0" + p : p; };
    auto out = parts[0] + "-" + pad(parts[1]) + "-" + pad(parts[2]);
    return is_iso_date(out) ? out : s;
}

}  // namespace

Json normalize_params(const Json& params) {
    if (params.is_object()) {
        Json out = Json::object();
        for (const auto& [k, v] : params.items()) out[trim(k)] = normalize_params(v);
        return out;
    }
    if (params.is_array()) {
        Json out = Json::array();
        for (const auto& v : params) out.push_back(normalize_params(v));
        return out;
    }
    if (params.is_number()) return Json(params.get<double>());
    if (params.is_string()) return Json(canonical_date(trim(params.get<std::string>())));
    return params;
}

bool tag_matches(std::string_view text, std::string_view tag) {
    auto stems = [](std::string_view s) {
        auto words = whitespace_tokens(normalize_phrase(s));
        for (auto& w : words) w = stem(w);
        return words;
    };
    const auto hay = stems(text);
    const auto needle = stems(tag);
    if (needle.empty() || needle.size() > hay.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
    return false;
}

namespace {

const Json* lookup_path(const Json& root, const std::string& path) {
    const Json* cur = &root;
    for (const auto& part : split(path, '.')) {
        if (!cur->is_object()) return nullptr;
        auto it = cur->find(part);
        if (it == cur->end()) return nullptr;
        cur = &*it;
    }
    return cur;
}

std::vector<double> numbers_in(std::string_view text) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const bool neg = text[i] == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]));
        if (!neg && !std::isdigit(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i + (neg ? 1 : 0);
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j + 1 < text.size() && text[j] == '.' && std::isdigit(static_cast<unsigned char>(text[j + 1]))) {
            ++j;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        }
        out.push_back(std::stod(std::string(text.substr(i, j - i))));
        i = j;
    }
    return out;
}

// A number counts as quoted when some number in the answer agrees with it
// to two decimals.
bool quoted(const std::string& answer, const Json& value) {
    if (value.is_number()) {
        const auto target = std::llround(value.get<double>() * 100.0);
        for (double x : numbers_in(answer)) {
            if (std::llround(x * 100.0) == target) return true;
        }
        return false;
    }
    if (value.is_string()) return to_lower(answer).find(to_lower(value.get<std::string>())) != std::string::npos;
    if (value.is_boolean()) return to_lower(answer).find(value.get<bool>() ? "true" : "false") != std::string::npos;
    return answer.find(value.dump()) != std::string::npos;
}

}  // namespace

CaseResult classify_case(const agent::Trace& trace, const InstructionCase& c, const tools::ToolRegistry& registry) {
    using namespace agent;
    if (trace.query != c.instruction) {
        throw ContractError("trace " + trace.id + " does not belong to case " + c.id);
    }
    CaseResult r;
    r.case_id = c.id;
    const auto& steps = trace.steps;

    const Thought* first_thought = nullptr;
    for (const auto& s : steps) {
        if ((first_thought = std::get_if<Thought>(&s))) break;
    }
    if (!first_thought) {
        r.flags.intent_fail = !c.intent_tags.empty();
    } else if (!c.intent_tags.empty()) {
        r.flags.intent_fail = true;
        for (const auto& tag : c.intent_tags) {
            if (tag_matches(first_thought->text, tag)) {
                r.flags.intent_fail = false;
                break;
            }
        }
    }

    std::size_t a = 0;
    while (a < steps.size() && !std::holds_alternative<Action>(steps[a])) ++a;
    const Json* observation = nullptr;
    Json observation_json;
    if (a == steps.size()) {
        r.flags.name_fail = true;
    } else {
        const auto& name = std::get<Action>(steps[a]).tool_name;
        if (!registry.contains(name)) {
            r.flags.hallucination = true;
        } else if (name != c.gold_tool) {
            r.flags.name_fail = true;
        } else {
            const auto* input = a + 1 < steps.size() ? std::get_if<ActionInput>(&steps[a + 1]) : nullptr;
            const bool params_match =
                input && input->parsed && normalize_params(*input->parsed) == normalize_params(c.gold_params);
            r.flags.param_fail = !params_match;
            const auto* obs = a + 2 < steps.size() ? std::get_if<Observation>(&steps[a + 2]) : nullptr;
            if (params_match && obs) {
                observation_json = Json::parse(obs->text, nullptr, false);
                if (!observation_json.is_discarded() && observation_json.is_object() &&
                    !observation_json.contains("error")) {
                    r.correct_call = true;
                    observation = &observation_json;
                }
            }
        }
    }

    if (r.correct_call) {
        const FinalAnswer* answer = nullptr;
        for (const auto& s : steps) {
            if (auto* fa = std::get_if<FinalAnswer>(&s)) answer = fa;
        }
        if (!answer) {
            r.flags.answer_fail = true;
        } else {
            for (const auto& field : c.answer_fields) {
                const auto* v = lookup_path(*observation, field);
                if (!v || !quoted(answer->text, *v)) {
                    r.flags.answer_fail = true;
                    break;
                }
            }
        }
    }
    r.outcome = r.correct_call && !r.flags.answer_fail ? Outcome::correct : Outcome::failed;
    return r;
}

Rational make_rational(std::int64_t num, std::int64_t den) {
    if (den <= 0) throw ContractError("rational needs a positive denominator");
    const auto g = std::gcd(num < 0 ? -num : num, den);
    return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

std::string format_percent(std::int64_t count, std::int64_t n) {
    if (n <= 0) throw ContractError("percentage needs n > 0");
    // hundredths of a percent, rounded half up
    const std::int64_t r = (2 * count * 10000 + n) / (2 * n);
    const auto frac = r % 100;
    return std::to_string(r / 100) + "." + (frac < 10 ? "0" : "") + std::to_string(frac) + "%";
}

std::string_view to_string(System s) {
    switch (s) {
        case System::kg2data:
            return "kg2data";
        case System::rag2data:
            return "rag2data";
        case System::chat2data:
            return "chat2data";
    }
    return "chat2data";
}

std::string_view display_name(System s) {
    switch (s) {
        case System::kg2data:
            return "KG2data";
        case System::rag2data:
            return "RAG2data";
        case System::chat2data:
            return "chat2data";
    }
    return "chat2data";
}

System system_from_string(std::string_view s) {
    if (s == "kg2data" || s == "kg") return System::kg2data;
    if (s == "rag2data" || s == "vector") return System::rag2data;
    if (s == "chat2data" || s == "null") return System::chat2data;
    throw ConfigError("unknown system '" + std::string(s) + "' (expected kg, vector or null)");
}

System system_for(memory::MemoryKind k) {
    switch (k) {
        case memory::MemoryKind::kg:
            return System::kg2data;
        case memory::MemoryKind::vector:
            return System::rag2data;
        case memory::MemoryKind::null:
            return System::chat2data;
    }
    return System::chat2data;
}

memory::MemoryKind memory_kind_for(System s) {
    switch (s) {
        case System::kg2data:
            return memory::MemoryKind::kg;
        case System::rag2data:
            return memory::MemoryKind::vector;
        case System::chat2data:
            return memory::MemoryKind::null;
    }
    return memory::MemoryKind::null;
}

std::int64_t MetricCounts::count(int metric) const {
    switch (metric) {
        case FRIR:
            return intent;
        case FRNR:
            return name;
        case FRPR:
            return param;
        case FRHR:
            return hallucination;
        case ACAR:
            return correct;
    }
    throw ContractError("unknown metric " + std::to_string(metric));
}

EvalReport compute_metrics(System system, const MetricCounts& counts, std::int64_t n) {
    if (n <= 0) throw ContractError("metrics need at least one call (n = " + std::to_string(n) + ")");
    for (auto c : {counts.intent, counts.name, counts.param, counts.hallucination, counts.correct, counts.answer_fail}) {
        if (c < 0 || c > n) throw ContractError("metric count outside [0, n]");
    }
    EvalReport r;
    r.system = system;
    r.n = n;
    r.counts = counts;
    return r;
}

EvalReport compute_metrics(System system, const std::vector<CaseResult>& results) {
    MetricCounts c;
    for (const auto& r : results) {
        c.intent += r.flags.intent_fail;
        c.name += r.flags.name_fail;
        c.param += r.flags.param_fail;
        c.hallucination += r.flags.hallucination;
        c.answer_fail += r.flags.answer_fail;
        c.correct += r.outcome == Outcome::correct;
    }
    return compute_metrics(system, c, static_cast<std::int64_t>(results.size()));
}

double fisher_exact(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    if (a < 0 || b < 0 || c < 0 || d < 0) throw ContractError("fisher_exact needs non-negative counts");
    const auto r1 = a + b, r2 = c + d, c1 = a + c, n = r1 + r2;
    if (n == 0) return 1.0;
    auto lf = [](std::int64_t k) { return std::lgamma(static_cast<double>(k) + 1.0); };
    const double base = lf(r1) + lf(r2) + lf(c1) + lf(n - c1) - lf(n);
    auto logp = [&](std::int64_t x) { return base - lf(x) - lf(r1 - x) - lf(c1 - x) - lf(r2 - c1 + x); };
    const double observed = logp(a);
    const double cutoff = observed + std::log1p(1e-7);
    double p = 0.0;
    for (auto x = std::max<std::int64_t>(0, c1 - r2); x <= std::min(r1, c1); ++x) {
        const double lp = logp(x);
        if (lp <= cutoff) p += std::exp(lp);
    }
    return std::min(1.0, p);
}

std::string mark_for(double p) {
    if (p <= 0.05) return "**";
    if (p <= 0.1) return "*";
    return "";
}

std::vector<SignificanceMark> significance(const EvalReport& a, const EvalReport& b) {
    std::vector<SignificanceMark> out;
    for (int m = FRIR; m <= ACAR; ++m) {
        const auto ca = a.counts.count(m), cb = b.counts.count(m);
        const double p = fisher_exact(ca, a.n - ca, cb, b.n - cb);
        out.push_back({kMetricNames[static_cast<std::size_t>(m)], p, mark_for(p)});
    }
    return out;
}

std::string render_report(const std::vector<EvalReport>& reports, const std::vector<ComparedMarks>& marks,
                          bool extended) {
    std::string out;
    for (const auto* name : kMetricNames) out += std::string("\t") + name;
    if (extended) out += "\tAFR";
    out += "\n";
    for (const auto& r : reports) {
        out += display_name(r.system);
        for (int m = FRIR; m <= ACAR; ++m) out += "\t" + r.percent(m);
        if (extended) out += "\t" + format_percent(r.counts.answer_fail, r.n);
        out += "\n";
        for (const auto& cm : marks) {
            if (cm.system != r.system) continue;
            for (const auto& mk : cm.marks) out += "\t" + mk.mark;
            if (extended) out += "\t";
            out += "\n";
        }
    }
    return out;
}

Json report_json(const std::vector<EvalReport>& reports, const std::vector<ComparedMarks>& marks) {
    Json rs = Json::array();
    for (const auto& r : reports) {
        Json counts = Json::object(), rates = Json::object();
        for (int m = FRIR; m <= ACAR; ++m) {
            const auto* name = kMetricNames[static_cast<std::size_t>(m)];
            counts[name] = r.counts.count(m);
            auto q = r.rate(m);
            rates[name] = {{"num", q.num}, {"den", q.den}, {"percent", r.percent(m)}};
        }
        counts["answer_fail"] = r.counts.answer_fail;
        rs.push_back({{"system", to_string(r.system)},
                      {"display_name", display_name(r.system)},
                      {"n", r.n},
                      {"counts", counts},
                      {"rates", rates},
                      {"corpus_hash", r.corpus_hash},
                      {"seed", r.seed}});
    }
    Json ms = Json::array();
    for (const auto& cm : marks) {
        Json entries = Json::array();
        for (const auto& mk : cm.marks) entries.push_back({{"metric", mk.metric}, {"p_value", mk.p_value}, {"mark", mk.mark}});
        ms.push_back({{"system", to_string(cm.system)}, {"versus", "kg2data"}, {"marks", entries}});
    }
    return {{"reports", rs}, {"significance", ms}};
}

std::pair<std::vector<EvalReport>, std::vector<ComparedMarks>> reports_from_json(const Json& j) {
    std::pair<std::vector<EvalReport>, std::vector<ComparedMarks>> out;
    try {
        for (const auto& r : j.at("reports")) {
            MetricCounts c;
            const auto& counts = r.at("counts");
            c.intent = counts.at("FRIR").get<std::int64_t>();
            c.name = counts.at("FRNR").get<std::int64_t>();
            c.param = counts.at("FRPR").get<std::int64_t>();
            c.hallucination = counts.at("FRHR").get<std::int64_t>();
            c.correct = counts.at("ACAR").get<std::int64_t>();
            c.answer_fail = counts.value("answer_fail", std::int64_t{0});
            auto report = compute_metrics(system_from_string(r.at("system").get<std::string>()), c,
                                          r.at("n").get<std::int64_t>());
            report.corpus_hash = r.value("corpus_hash", "");
            report.seed = r.value("seed", std::uint64_t{0});
            out.first.push_back(std::move(report));
        }
        for (const auto& m : j.value("significance", Json::array())) {
            ComparedMarks cm{system_from_string(m.at("system").get<std::string>()), {}};
            for (const auto& e : m.at("marks")) {
                cm.marks.push_back({e.at("metric").get<std::string>(), e.at("p_value").get<double>(),
                                    e.at("mark").get<std::string>()});
            }
            out.second.push_back(std::move(cm));
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed report document: ") + e.what());
    }
    return out;
}

std::string cassette_path(const std::string& dir, System system, const std::string& case_id) {
    return (std::filesystem::path(dir) / std::string(memory::to_string(memory_kind_for(system))) / (case_id + ".jsonl"))
        .string();
}

std::vector<SystemRun> run_ablation(const std::vector<InstructionCase>& cases, const std::vector<System>& systems,
                                    const memory::MemorySet& memories, const tools::ToolRegistry& registry,
                                    const AblationOptions& options) {
    if (cases.empty()) throw ConfigError("ablation needs at least one case");
    options.agent.validate();
    auto catalog = std::shared_ptr<const Catalog>(std::shared_ptr<const Catalog>{}, &registry.catalog());
    std::vector<SystemRun> runs;
    for (auto system : systems) {
        auto backend = memories.get(memory_kind_for(system));
        if (backend->corpus_hash() != memories.corpus_hash) {
            throw ConfigError("memory backends were built from different corpora");
        }
        // Load every cassette up front so a missing file fails before any episode runs.
        std::vector<std::shared_ptr<Cassette>> cassettes;
        for (const auto& c : cases) {
            const auto path = cassette_path(options.cassette_dir, system, c.id);
            if (!std::filesystem::exists(path)) {
                throw Error("missing cassette for (" + std::string(to_string(system)) + ", " + c.id + "): " + path);
            }
            cassettes.push_back(std::make_shared<Cassette>(Cassette::load(path, CassetteMode::replay_strict)));
        }
        SystemRun run;
        run.traces.resize(cases.size());
        run.results.resize(cases.size());
        kernels::for_each_index(
            cases.size(),
            [&](std::size_t i) {
                Gateway gateway(std::make_shared<CassetteBackend>(cassettes[i]));
                tools::InProcessApiClient client(catalog, options.seed);
                run.traces[i] = agent::run_episode(std::string(to_string(system)) + ":" + cases[i].id,
                                                   cases[i].instruction, *backend, registry, gateway, client,
                                                   options.agent);
                run.results[i] = classify_case(run.traces[i], cases[i], registry);
            },
            options.exec);
        run.report = compute_metrics(system, run.results);
        run.report.corpus_hash = memories.corpus_hash;
        run.report.seed = options.seed;
        runs.push_back(std::move(run));
    }
    return runs;
}

std::vector<ComparedMarks> compare_to_kg(const std::vector<EvalReport>& reports) {
    const EvalReport* kg = nullptr;
    for (const auto& r : reports) {
        if (r.system == System::kg2data) kg = &r;
    }
    std::vector<ComparedMarks> out;
    if (!kg) return out;
    for (const auto& r : reports) {
        if (r.system != System::kg2data) out.push_back({r.system, significance(*kg, r)});
    }
    return out;
}

std::string_view to_string(FaultKind k) {
    switch (k) {
        case FaultKind::fictitious_tool:
            return "fictitious_tool";
        case FaultKind::wrong_tool:
            return "wrong_tool";
        case FaultKind::corrupt_input:
            return "corrupt_input";
    }
    return "corrupt_input";
}

bool inject_fault(Cassette& cassette, const std::string& first_turn_key, FaultKind kind, const InstructionCase& c,
                  const tools::ToolRegistry& registry) {
    auto found = cassette.lookup(first_turn_key);
    if (!found) return false;
    auto lines = split(*found, '\n');
    std::size_t action = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (starts_with(lines[i], "Action:")) {
            action = i;
            break;
        }
    }
    if (action == lines.size()) return false;

    switch (kind) {
        case FaultKind::fictitious_tool: {
            std::string fake = c.gold_tool + "_magic";
            while (registry.contains(fake)) fake += "_x";
            lines[action] = "Action: " + fake;
            break;
        }
        case FaultKind::wrong_tool: {
            const auto& tools = registry.tools();
            std::size_t gold = 0;
            while (gold < tools.size() && tools[gold].name != c.gold_tool) ++gold;
            if (tools.size() < 2 || gold == tools.size()) return false;
            lines[action] = "Action: " + tools[(gold + 1) % tools.size()].name;
            break;
        }
        case FaultKind::corrupt_input: {
            std::size_t input = action + 1;
            if (input >= lines.size() || !starts_with(lines[input], "Action Input:")) {
                lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(input), "Action Input:");
            }
            // Strip the quotes: still readable, no longer JSON.
            std::string broken;
            for (char ch : lines[input]) {
                if (ch != '"') broken += ch;
            }
            if (broken == lines[input]) broken += " {";
            lines[input] = broken;
            break;
        }
    }
    Cassette::Entry entry = cassette.entries().at(first_turn_key);
    entry.response = join(lines, "\n");
    cassette.put(first_turn_key, std::move(entry));
    return true;
}

}  // namespace kg2data::eval
