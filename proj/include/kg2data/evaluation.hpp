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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kg2data/agent.hpp"
#include "kg2data/kernels.hpp"
#include "kg2data/memory.hpp"
#include "kg2data/tools.hpp"

namespace kg2data::eval {

enum class Style { explicit_, implicit_ };
std::string_view to_string(Style s);
Style style_from_string(std::string_view s);

struct InstructionCase {
    std::string id;
    std::string instruction;
    Style style = Style::explicit_;
    std::string gold_tool;
    Json gold_params = Json::object();
    std::vector<std::string> intent_tags;
    /// Dotted paths into the observation object, e.g. `total_mm` or
    /// `stats.hourly_mm.max`.
    std::vector<std::string> answer_fields;
    bool operator==(const InstructionCase&) const = default;
};

Json to_json(const InstructionCase& c);
InstructionCase case_from_json(const Json& j);

/// True when `text` names the tool or its API, ignoring case and separators.
bool mentions_name(std::string_view text, std::string_view name);

/// Throws ConfigError on an unknown gold tool, an instruction that names
/// the tool or its API, a duplicate id, or a bad style.
void validate_cases(const std::vector<InstructionCase>& cases, const tools::ToolRegistry& registry);
/// Exactly one explicit and one implicit case per registered tool.
void check_pair_coverage(const std::vector<InstructionCase>& cases, const tools::ToolRegistry& registry);

std::vector<InstructionCase> parse_cases(std::string_view jsonl, const tools::ToolRegistry& registry);
std::vector<InstructionCase> load_cases(const std::string& path, const tools::ToolRegistry& registry);
std::string serialize_cases(const std::vector<InstructionCase>& cases);

class GenerationExhaustedError : public Error {
public:
    explicit GenerationExhaustedError(const std::string& api)
        : Error("pair generation exhausted for api '" + api + "'"), api_(api) {}
    const std::string& api() const { return api_; }

private:
    std::string api_;
};

constexpr int kMaxGenerationAttempts = 3;

CompletionRequest pair_request(const ApiSpec& api, Style style, int attempt);

/// Self-instruct generation. Each model reply is a JSON object
/// `{instruction, params, intent_tags[, answer_fields]}`; replies that fail
/// to parse, name the API or carry invalid params are regenerated.
std::vector<InstructionCase> generate_pairs(const Catalog& catalog, const Gateway& llm, int per_api);

struct Flags {
    bool intent_fail = false;
    bool name_fail = false;
    bool param_fail = false;
    bool hallucination = false;
    bool answer_fail = false;
    bool operator==(const Flags&) const = default;
};

enum class Outcome { correct, failed };

struct CaseResult {
    std::string case_id;
    Flags flags;
    bool correct_call = false;
    Outcome outcome = Outcome::failed;
    bool operator==(const CaseResult&) const = default;
};

/// Key order ignored, numbers by value, strings trimmed, dates zero-padded.
Json normalize_params(const Json& params);

/// Whether every stemmed word of `tag`, in order, appears contiguously in
/// the stemmed words of `text`.
bool tag_matches(std::string_view text, std::string_view tag);

/// Scores the first Action / Action Input of the trace.
CaseResult classify_case(const agent::Trace& trace, const InstructionCase& c, const tools::ToolRegistry& registry);

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    bool operator==(const Rational&) const = default;
};
Rational make_rational(std::int64_t num, std::int64_t den);

/// Round-half-up to two decimals, e.g. "1.43%".
std::string format_percent(std::int64_t count, std::int64_t n);

enum class System { kg2data, rag2data, chat2data };
std::string_view to_string(System s);
std::string_view display_name(System s);
System system_from_string(std::string_view s);
System system_for(memory::MemoryKind k);
memory::MemoryKind memory_kind_for(System s);

enum Metric : int { FRIR = 0, FRNR, FRPR, FRHR, ACAR };
constexpr std::array<const char*, 5> kMetricNames = {"FRIR", "FRNR", "FRPR", "FRHR", "ACAR"};

struct MetricCounts {
    std::int64_t intent = 0;
    std::int64_t name = 0;
    std::int64_t param = 0;
    std::int64_t hallucination = 0;
    std::int64_t correct = 0;
    std::int64_t answer_fail = 0;
    std::int64_t count(int metric) const;
    bool operator==(const MetricCounts&) const = default;
};

struct EvalReport {
    System system = System::kg2data;
    std::int64_t n = 0;
    MetricCounts counts;
    std::string corpus_hash;
    std::uint64_t seed = 0;

    Rational rate(int metric) const { return make_rational(counts.count(metric), n); }
    std::string percent(int metric) const { return format_percent(counts.count(metric), n); }
    bool operator==(const EvalReport&) const = default;
};

EvalReport compute_metrics(System system, const MetricCounts& counts, std::int64_t n);
EvalReport compute_metrics(System system, const std::vector<CaseResult>& results);

/// Two-sided Fisher exact test on [[a, b], [c, d]].
double fisher_exact(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

struct SignificanceMark {
    std::string metric;
    double p_value = 1.0;
    std::string mark;
};
std::string mark_for(double p);

std::vector<SignificanceMark> significance(const EvalReport& a, const EvalReport& b);

struct ComparedMarks {
    System system;  // the row the marks sit beneath
    std::vector<SignificanceMark> marks;
};

/// Tab-separated table: header, then one row per report, each followed by
/// its significance row when marks exist for it.
std::string render_report(const std::vector<EvalReport>& reports, const std::vector<ComparedMarks>& marks,
                          bool extended = false);
Json report_json(const std::vector<EvalReport>& reports, const std::vector<ComparedMarks>& marks);
/// Inverse of report_json.
std::pair<std::vector<EvalReport>, std::vector<ComparedMarks>> reports_from_json(const Json& j);

struct SystemRun {
    EvalReport report;
    std::vector<agent::Trace> traces;
    std::vector<CaseResult> results;
};

struct AblationOptions {
    std::string cassette_dir;
    std::uint64_t seed = 7;
    agent::AgentConfig agent;
    kernels::Exec exec = kernels::Exec::parallel;
};

std::string cassette_path(const std::string& dir, System system, const std::string& case_id);

/// One episode per (system, case) against strict-replay cassettes. Throws
/// Error naming (system, case) when a cassette file is missing.
std::vector<SystemRun> run_ablation(const std::vector<InstructionCase>& cases, const std::vector<System>& systems,
                                    const memory::MemorySet& memories, const tools::ToolRegistry& registry,
                                    const AblationOptions& options);

/// KG2data against every other system present.
std::vector<ComparedMarks> compare_to_kg(const std::vector<EvalReport>& reports);

enum class FaultKind { fictitious_tool, wrong_tool, corrupt_input };
std::string_view to_string(FaultKind k);

/// Rewrites the reply stored under `first_turn_key` so its first Action (or
/// Action Input) is wrong in the given way. Returns false when that reply
/// is absent or has no Action.
bool inject_fault(Cassette& cassette, const std::string& first_turn_key, FaultKind kind, const InstructionCase& c,
                  const tools::ToolRegistry& registry);

}  // namespace kg2data::eval
