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

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kg2data/llm_gateway.hpp"
#include "kg2data/memory.hpp"
#include "kg2data/tools.hpp"

namespace kg2data::agent {

struct Thought {
    int index = 1;
    std::string text;
    bool operator==(const Thought&) const = default;
};
struct Action {
    std::string tool_name;
    bool operator==(const Action&) const = default;
};
struct ActionInput {
    std::string params_text;
    std::optional<Json> parsed;  // set iff params_text is a JSON object
    bool operator==(const ActionInput&) const = default;
};
struct Observation {
    std::string text;
    bool operator==(const Observation&) const = default;
};
struct FinalAnswer {
    std::string text;
    bool operator==(const FinalAnswer&) const = default;
};

using TraceStep = std::variant<Thought, Action, ActionInput, Observation, FinalAnswer>;

/// "thought", "action", "action_input", "observation", "final_answer"
std::string_view step_kind(const TraceStep& step);
ActionInput make_action_input(std::string params_text);

Json step_payload(const TraceStep& step);
TraceStep step_from_payload(std::string_view kind, const Json& payload);

enum class TraceStatus { completed, step_limit, parse_error, gateway_error };
std::string_view to_string(TraceStatus s);
TraceStatus trace_status_from_string(std::string_view s);

struct Trace {
    std::string id;
    std::string query;
    memory::MemoryKind memory_kind = memory::MemoryKind::null;
    std::vector<TraceStep> steps;
    std::vector<double> durations_ms;  // parallel to steps
    TraceStatus status = TraceStatus::step_limit;
    std::string error;  // diagnostic for parse_error / gateway_error
    bool operator==(const Trace&) const = default;
};

/// (Thought, Action, ActionInput, Observation)*, Thought?, FinalAnswer?
/// with Thought indices 1..n. A trailing FinalAnswer is required only when
/// `require_final`.
bool grammar_ok(const std::vector<TraceStep>& steps, bool require_final = false);

extern const char* const kDefaultPromptTemplate;

struct AgentConfig {
    int max_steps = 6;
    std::size_t context_budget = 400;
    std::size_t tools_budget = 6000;
    int max_tokens = 512;
    std::string prompt_template = kDefaultPromptTemplate;

    /// Throws ConfigError.
    void validate() const;
};

/// Labelled text, one segment per step: `Thought:`, `Action:`,
/// `Action Input:`, `Observation:`, `Final Answer:`.
std::string serialize_steps(const std::vector<TraceStep>& steps);

/// Splits text into labelled segments in textual order. Text before the first
/// label is ignored. Never throws.
std::vector<TraceStep> parse_steps(std::string_view text);

class ModelOutputError : public Error {
public:
    enum class Kind { ambiguous, no_step };
    ModelOutputError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// parse_steps plus the model-turn checks: an Action together with a Final
/// Answer is ambiguous; neither is a no-step error.
std::vector<TraceStep> parse_model_output(std::string_view text);

std::vector<ChatMessage> render_prompt(const AgentConfig& config, const std::string& query,
                                       const memory::ContextBundle& context, const std::string& tools_text,
                                       const std::string& scratchpad);

/// The model request for one loop iteration, given the steps so far.
CompletionRequest turn_request(const AgentConfig& config, const std::string& query,
                               const memory::ContextBundle& context, const std::string& tools_text,
                               const std::vector<TraceStep>& steps);

/// Request of the first iteration of an episode over `memory`.
CompletionRequest first_turn_request(const AgentConfig& config, const std::string& query,
                                     const memory::MemoryBackend& memory, const tools::ToolRegistry& registry);

struct EpisodeHooks {
    /// Called after each step is appended, with its index and duration.
    std::function<void(const Trace&, std::size_t)> on_step;
    /// Milliseconds since an arbitrary epoch. Unset means every duration is 0.
    std::function<double()> clock;
};

/// One ReAct episode. Failures are reported through Trace::status, never
/// thrown.
Trace run_episode(const std::string& trace_id, const std::string& query, const memory::MemoryBackend& memory,
                  const tools::ToolRegistry& registry, const Gateway& gateway, tools::ApiClient& client,
                  const AgentConfig& config, const EpisodeHooks& hooks = {});

/// Header record, one record per step, then a status record.
std::string trace_to_jsonl(const Trace& trace, const AgentConfig& config);
Trace trace_from_jsonl(std::string_view jsonl);
Json trace_to_json(const Trace& trace);

}  // namespace kg2data::agent
