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

#include "kg2data/agent.hpp"

#include <cctype>

namespace kg2data::agent {

const char* const kDefaultPromptTemplate =
    "You are KG2data, an assistant for meteorological data analysis. Answer the question by calling one of the "
    "data tools below, then report the values it returns.\n"
    "\n"
    "{context}"
    "Tools:\n"
    "{tools}\n"
    "Use exactly this format:\n"
    "Thought: what the question asks for and which data is needed\n"
    "Action: one tool name, exactly as listed\n"
    "Action Input: a JSON object with the tool parameters\n"
    "Observation: the tool result\n"
    "(Thought, Action, Action Input and Observation may repeat)\n"
    "Thought: I now know the answer\n"
    "Final Answer: the answer, quoting the returned values\n"
    "\n"
    "Question: {query}\n"
    "{scratchpad}";

namespace {

std::string dump(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

enum class Label { thought, action, action_input, observation, final_answer };

// Recognizes a label at the start of `line`; returns the remainder.
std::optional<std::pair<Label, std::string_view>> match_label(std::string_view line) {
    auto after = [&](std::string_view prefix) -> std::optional<std::string_view> {
        if (line.substr(0, prefix.size()) != prefix) return std::nullopt;
        return line.substr(prefix.size());
    };
    if (auto rest = after("Thought")) {
        std::size_t i = 0;
        while (i < rest->size() && (*rest)[i] == ' ') ++i;
        while (i < rest->size() && std::isdigit(static_cast<unsigned char>((*rest)[i]))) ++i;
        if (i < rest->size() && (*rest)[i] == ':') return std::pair{Label::thought, rest->substr(i + 1)};
        return std::nullopt;
    }
    if (auto rest = after("Action Input:")) return std::pair{Label::action_input, *rest};
    if (auto rest = after("Action:")) return std::pair{Label::action, *rest};
    if (auto rest = after("Observation:")) return std::pair{Label::observation, *rest};
    if (auto rest = after("Final Answer:")) return std::pair{Label::final_answer, *rest};
    return std::nullopt;
}

}  // namespace

std::string_view step_kind(const TraceStep& step) {
    switch (step.index()) {
        case 0:
            return "thought";
        case 1:
            return "action";
        case 2:
            return "action_input";
        case 3:
            return "observation";
        default:
            return "final_answer";
    }
}

ActionInput make_action_input(std::string params_text) {
    ActionInput ai;
    ai.params_text = std::move(params_text);
    auto j = Json::parse(ai.params_text, nullptr, false);
    if (!j.is_discarded() && j.is_object()) ai.parsed = std::move(j);
    return ai;
}

Json step_payload(const TraceStep& step) {
    return std::visit(
        [](const auto& s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Thought>) {
                return {{"index", s.index}, {"text", s.text}};
            } else if constexpr (std::is_same_v<T, Action>) {
                return {{"tool_name", s.tool_name}};
            } else if constexpr (std::is_same_v<T, ActionInput>) {
                Json j = {{"params_text", s.params_text}};
                j["parsed"] = s.parsed ? *s.parsed : Json(nullptr);
                return j;
            } else {
                return {{"text", s.text}};
            }
        },
        step);
}

TraceStep step_from_payload(std::string_view kind, const Json& p) {
    if (kind == "thought") return Thought{p.at("index").get<int>(), p.at("text").get<std::string>()};
    if (kind == "action") return Action{p.at("tool_name").get<std::string>()};
    if (kind == "action_input") {
        ActionInput ai{p.at("params_text").get<std::string>(), std::nullopt};
        if (p.contains("parsed") && p.at("parsed").is_object()) ai.parsed = p.at("parsed");
        return ai;
    }
    if (kind == "observation") return Observation{p.at("text").get<std::string>()};
    if (kind == "final_answer") return FinalAnswer{p.at("text").get<std::string>()};
    throw ParseError("unknown step kind '" + std::string(kind) + "'");
}

std::string_view to_string(TraceStatus s) {
    switch (s) {
        case TraceStatus::completed:
            return "completed";
        case TraceStatus::step_limit:
            return "step_limit";
        case TraceStatus::parse_error:
            return "parse_error";
        case TraceStatus::gateway_error:
            return "gateway_error";
    }
    return "gateway_error";
}

TraceStatus trace_status_from_string(std::string_view s) {
    if (s == "completed") return TraceStatus::completed;
    if (s == "step_limit") return TraceStatus::step_limit;
    if (s == "parse_error") return TraceStatus::parse_error;
    if (s == "gateway_error") return TraceStatus::gateway_error;
    throw ParseError("unknown trace status '" + std::string(s) + "'");
}

bool grammar_ok(const std::vector<TraceStep>& steps, bool require_final) {
    std::size_t i = 0;
    int next_thought = 1;
    auto is = [&](std::size_t k, std::size_t kind) { return k < steps.size() && steps[k].index() == kind; };
    auto thought_ok = [&](std::size_t k) { return std::get<Thought>(steps[k]).index == next_thought; };
    while (is(i, 0) && is(i + 1, 1)) {
        if (!thought_ok(i) || !is(i + 2, 2) || !is(i + 3, 3)) return false;
        ++next_thought;
        i += 4;
    }
    if (is(i, 0)) {
        if (!thought_ok(i)) return false;
        ++i;
    }
    if (is(i, 4)) ++i;
    else if (require_final) return false;
    return i == steps.size();
}

void AgentConfig::validate() const {
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    for (const char* p : {"{context}", "{tools}", "{query}", "{scratchpad}"}) {
        if (prompt_template.find(p) == std::string::npos) {
            throw ConfigError(std::string("prompt template is missing the ") + p + " placeholder");
        }
    }
}

std::string serialize_steps(const std::vector<TraceStep>& steps) {
    std::string out;
    for (const auto& step : steps) {
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Thought>) out += "Thought: " + s.text;
                else if constexpr (std::is_same_v<T, Action>) out += "Action: " + s.tool_name;
                else if constexpr (std::is_same_v<T, ActionInput>) out += "Action Input: " + s.params_text;
                else if constexpr (std::is_same_v<T, Observation>) out += "Observation: " + s.text;
                else out += "Final Answer: " + s.text;
            },
            step);
        out += '\n';
    }
    return out;
}

std::vector<TraceStep> parse_steps(std::string_view text) {
    std::vector<TraceStep> steps;
    std::optional<Label> current;
    std::string body;
    int thoughts = 0;

    auto flush = [&] {
        if (!current) return;
        auto t = trim(body);
        switch (*current) {
            case Label::thought:
                steps.emplace_back(Thought{++thoughts, std::move(t)});
                break;
            case Label::action:
                steps.emplace_back(Action{std::move(t)});
                break;
            case Label::action_input:
                steps.emplace_back(make_action_input(std::move(t)));
                break;
            case Label::observation:
                steps.emplace_back(Observation{std::move(t)});
                break;
            case Label::final_answer:
                steps.emplace_back(FinalAnswer{std::move(t)});
                break;
        }
        body.clear();
    };

    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (auto m = match_label(line)) {
            flush();
            current = m->first;
            body = std::string(m->second);
        } else if (current) {
            body += '\n';
            body += line;
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    flush();
    return steps;
}

std::vector<TraceStep> parse_model_output(std::string_view text) {
    auto steps = parse_steps(text);
    bool action = false, final_answer = false;
    for (const auto& s : steps) {
        action = action || std::holds_alternative<Action>(s);
        final_answer = final_answer || std::holds_alternative<FinalAnswer>(s);
    }
    if (action && final_answer) {
        throw ModelOutputError(ModelOutputError::Kind::ambiguous, "model output has both an Action and a Final Answer");
    }
    if (!action && !final_answer) {
        throw ModelOutputError(ModelOutputError::Kind::no_step, "model output has neither an Action nor a Final Answer");
    }
    return steps;
}

std::vector<ChatMessage> render_prompt(const AgentConfig& config, const std::string& query,
                                       const memory::ContextBundle& context, const std::string& tools_text,
                                       const std::string& scratchpad) {
    config.validate();
    const std::string knowledge = context.rendered.empty() ? "" : "Knowledge:\n" + context.rendered + "\n\n";
    const std::pair<std::string_view, const std::string*> subs[] = {
        {"{context}", &knowledge}, {"{tools}", &tools_text}, {"{query}", &query}, {"{scratchpad}", &scratchpad}};

    // Single pass, so placeholder-like text inside the values stays literal.
    const auto& tpl = config.prompt_template;
    std::string system;
    std::size_t i = 0;
    while (i < tpl.size()) {
        bool replaced = false;
        if (tpl[i] == '{') {
            for (const auto& [key, value] : subs) {
                if (tpl.compare(i, key.size(), key) == 0) {
                    system += *value;
                    i += key.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) system += tpl[i++];
    }
    return {{Role::system, system}, {Role::user, query}};
}

CompletionRequest turn_request(const AgentConfig& config, const std::string& query,
                               const memory::ContextBundle& context, const std::string& tools_text,
                               const std::vector<TraceStep>& steps) {
    CompletionRequest request;
    request.messages = render_prompt(config, query, context, tools_text, serialize_steps(steps));
    request.temperature = 0.0;
    request.max_tokens = config.max_tokens;
    request.stop = std::vector<std::string>{"Observation:"};
    return request;
}

CompletionRequest first_turn_request(const AgentConfig& config, const std::string& query,
                                     const memory::MemoryBackend& memory, const tools::ToolRegistry& registry) {
    return turn_request(config, query, memory.retrieve(query, config.context_budget),
                        tools::describe_tools(registry, config.tools_budget), {});
}

Trace run_episode(const std::string& trace_id, const std::string& query, const memory::MemoryBackend& memory,
                  const tools::ToolRegistry& registry, const Gateway& gateway, tools::ApiClient& client,
                  const AgentConfig& config, const EpisodeHooks& hooks) {
    Trace trace;
    trace.id = trace_id;
    trace.query = query;
    trace.memory_kind = memory.kind();
    auto now = [&] { return hooks.clock ? hooks.clock() : 0.0; };
    auto push = [&](TraceStep step, double ms) {
        trace.steps.push_back(std::move(step));
        trace.durations_ms.push_back(ms);
        if (hooks.on_step) hooks.on_step(trace, trace.steps.size() - 1);
    };

    memory::ContextBundle context;
    std::string tools_text;
    try {
        config.validate();
        context = memory.retrieve(query, config.context_budget);
        tools_text = tools::describe_tools(registry, config.tools_budget);
    } catch (const std::exception& e) {
        trace.status = TraceStatus::gateway_error;
        trace.error = e.what();
        return trace;
    }

    int thoughts = 0;
    for (int iteration = 0; iteration < config.max_steps; ++iteration) {
        auto request = turn_request(config, query, context, tools_text, trace.steps);

        const double t0 = now();
        std::string text;
        try {
            text = gateway.complete(request);
        } catch (const std::exception& e) {
            trace.status = TraceStatus::gateway_error;
            trace.error = e.what();
            return trace;
        }
        const double model_ms = now() - t0;

        std::vector<TraceStep> parsed;
        try {
            parsed = parse_model_output(text);
        } catch (const ModelOutputError& e) {
            trace.status = TraceStatus::parse_error;
            trace.error = e.what();
            return trace;
        }

        std::size_t terminal = 0;
        while (!std::holds_alternative<Action>(parsed[terminal]) &&
               !std::holds_alternative<FinalAnswer>(parsed[terminal])) {
            ++terminal;
        }
        std::optional<std::string> thought;
        for (std::size_t k = 0; k < terminal && !thought; ++k) {
            if (auto* t = std::get_if<Thought>(&parsed[k])) thought = t->text;
        }

        if (auto* fa = std::get_if<FinalAnswer>(&parsed[terminal])) {
            double ms = model_ms;
            if (thought) {
                push(Thought{++thoughts, *thought}, ms);
                ms = 0;
            }
            push(*fa, ms);
            trace.status = TraceStatus::completed;
            return trace;
        }

        // An Action without a preceding Thought gets an empty one so the
        // trace keeps the (Thought, Action, Action Input, Observation) shape.
        push(Thought{++thoughts, thought.value_or("")}, model_ms);
        const auto tool_name = std::get<Action>(parsed[terminal]).tool_name;
        push(Action{tool_name}, 0);
        ActionInput input;
        if (terminal + 1 < parsed.size() && std::holds_alternative<ActionInput>(parsed[terminal + 1])) {
            input = std::get<ActionInput>(parsed[terminal + 1]);
        } else {
            input = make_action_input("");
        }
        auto params = input.parsed;
        push(std::move(input), 0);

        const double t1 = now();
        std::string observation;
        try {
            observation = tools::invoke(registry, tool_name, params, client).rendered;
        } catch (const std::exception& e) {
            observation = dump({{"error", "transport"}, {"tool", tool_name}, {"message", e.what()}});
        }
        push(Observation{observation}, now() - t1);
    }
    trace.status = TraceStatus::step_limit;
    return trace;
}

Json trace_to_json(const Trace& trace) {
    Json steps = Json::array();
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        steps.push_back({{"seq", i + 1},
                         {"kind", step_kind(trace.steps[i])},
                         {"payload", step_payload(trace.steps[i])},
                         {"duration_ms", trace.durations_ms[i]}});
    }
    return {{"id", trace.id},
            {"query", trace.query},
            {"memory_kind", memory::to_string(trace.memory_kind)},
            {"steps", steps},
            {"status", to_string(trace.status)},
            {"error", trace.error}};
}

std::string trace_to_jsonl(const Trace& trace, const AgentConfig& config) {
    std::string out;
    Json header = {{"trace_id", trace.id},
                   {"kind", "header"},
                   {"query", trace.query},
                   {"memory_kind", memory::to_string(trace.memory_kind)},
                   {"config",
                    {{"max_steps", config.max_steps},
                     {"context_budget", config.context_budget},
                     {"tools_budget", config.tools_budget}}}};
    out += dump(header) + "\n";
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        Json rec = {{"trace_id", trace.id},
                    {"seq", i + 1},
                    {"kind", step_kind(trace.steps[i])},
                    {"payload", step_payload(trace.steps[i])},
                    {"duration_ms", trace.durations_ms[i]}};
        out += dump(rec) + "\n";
    }
    Json status = {{"trace_id", trace.id}, {"kind", "status"}, {"status", to_string(trace.status)},
                   {"error", trace.error}};
    out += dump(status) + "\n";
    return out;
}

Trace trace_from_jsonl(std::string_view jsonl) {
    Trace trace;
    bool header = false, done = false;
    std::size_t line_no = 0;
    for (const auto& line : split(jsonl, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            auto j = Json::parse(line);
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "header") {
                trace.id = j.at("trace_id").get<std::string>();
                trace.query = j.at("query").get<std::string>();
                trace.memory_kind = memory::memory_kind_from_string(j.at("memory_kind").get<std::string>());
                header = true;
            } else if (kind == "status") {
                trace.status = trace_status_from_string(j.at("status").get<std::string>());
                trace.error = j.value("error", "");
                done = true;
            } else {
                if (!header) throw ParseError("trace step before header", line_no);
                trace.steps.push_back(step_from_payload(kind, j.at("payload")));
                trace.durations_ms.push_back(j.value("duration_ms", 0.0));
            }
        } catch (const Json::exception& e) {
            throw ParseError("trace log line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    if (!header || !done) throw ParseError("trace log is missing its header or status record");
    return trace;
}

}  // namespace kg2data::agent
