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

#include "kg2data/tools.hpp"

#include <algorithm>
#include <limits>

#include "httplib.h"

namespace kg2data::tools {

Json to_json(const ToolSpec& spec) {
    // Reuse the API param encoding so the registry file and catalog agree.
    ApiSpec shim;
    shim.name = spec.name;
    shim.params = spec.params;
    Json params = to_json(shim).at("params");
    return {{"name", spec.name}, {"description", spec.description}, {"params", params}, {"bound_api", spec.bound_api}};
}

ToolSpec tool_spec_from_json(const Json& j) {
    ToolSpec s;
    s.name = j.at("name").get<std::string>();
    s.description = j.value("description", "");
    s.bound_api = j.at("bound_api").get<std::string>();
    Json shim = {{"name", s.name}, {"description", ""}, {"category", "other"},
                 {"params", j.value("params", Json::array())}, {"output_fields", Json::array()}};
    s.params = api_spec_from_json(shim).params;
    return s;
}

ToolRegistry::ToolRegistry(std::shared_ptr<const Catalog> catalog) : catalog_(std::move(catalog)) {
    if (!catalog_) throw ConfigError("tool registry needs a catalog");
}

ToolRegistry ToolRegistry::from_catalog(std::shared_ptr<const Catalog> catalog) {
    ToolRegistry r(catalog);
    for (const auto& api : catalog->specs()) r.register_tool({api.name, api.description, api.params, api.name});
    return r;
}

ToolRegistry& ToolRegistry::register_tool(ToolSpec spec) {
    if (spec.name.empty()) throw ConfigError("tool name must not be empty");
    if (index_.count(spec.name)) throw ConfigError("duplicate tool name '" + spec.name + "'");
    const auto* api = catalog_->find(spec.bound_api);
    if (!api) throw ConfigError("tool '" + spec.name + "' is bound to unknown api '" + spec.bound_api + "'");
    if (spec.params != api->params) {
        throw ConfigError("tool '" + spec.name + "' params differ from api '" + spec.bound_api + "'");
    }
    index_.emplace(spec.name, tools_.size());
    tools_.push_back(std::move(spec));
    return *this;
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &tools_[it->second];
}

Json to_json(const ToolRegistry& registry) {
    Json tools = Json::array();
    for (const auto& t : registry.tools()) tools.push_back(to_json(t));
    return {{"tools", tools}};
}

ToolRegistry registry_from_json(const Json& j, std::shared_ptr<const Catalog> catalog) {
    ToolRegistry r(std::move(catalog));
    try {
        for (const auto& t : j.at("tools")) r.register_tool(tool_spec_from_json(t));
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed tool registry: ") + e.what());
    }
    return r;
}

ToolRegistry load_registry(const std::string& path, std::shared_ptr<const Catalog> catalog) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return registry_from_json(j, std::move(catalog));
}

std::string describe_tool(const ToolSpec& spec) {
    std::string out = "Tool: " + spec.name + "\n";
    out += "Description: " + spec.description + "\n";
    out += "Parameters:";
    if (spec.params.empty()) out += " none";
    out += "\n";
    for (const auto& p : spec.params) {
        out += "- " + p.name + " (" + std::string(to_string(p.kind));
        if (p.units) out += ", " + *p.units;
        out += p.required ? ", required" : ", optional";
        out += ")";
        if (p.allowed_values) out += " one of [" + join(*p.allowed_values, ", ") + "]";
        if (p.range) out += " range [" + canonical_json(p.range->min) + ", " + canonical_json(p.range->max) + "]";
        if (!p.description.empty()) out += ": " + p.description;
        out += "\n";
    }
    return out;
}

std::string describe_tools(const ToolRegistry& registry, std::size_t format_budget) {
    std::string out;
    for (const auto& t : registry.tools()) {
        if (!out.empty()) out += "\n";
        out += describe_tool(t);
    }
    const auto n = whitespace_token_count(out);
    if (n > format_budget) {
        throw ToolBudgetError("tool descriptions need " + std::to_string(n) + " tokens, budget is " +
                              std::to_string(format_budget));
    }
    return out;
}

ApiResponse InProcessApiClient::call(const std::string& api_name, const Json& params) {
    ++calls_;
    return api_response_from_json(Json::parse(serialize_response(handle_api_request(*catalog_, api_name, params, seed_))));
}

ApiResponse HttpApiClient::call(const std::string& api_name, const Json& params) {
    ++calls_;
    httplib::Client cli(host_, port_);
    cli.set_connection_timeout(timeout_seconds_, 0);
    cli.set_read_timeout(timeout_seconds_, 0);
    httplib::Headers headers = {{"X-Seed", std::to_string(seed_)}};
    auto res = cli.Post("/apis/" + api_name, headers, params.dump(), "application/json");
    if (!res) {
        throw ToolTransportError("api call " + api_name + " failed: " + httplib::to_string(res.error()));
    }
    try {
        return api_response_from_json(Json::parse(res->body));
    } catch (const std::exception& e) {
        throw ToolTransportError("api call " + api_name + " returned HTTP " + std::to_string(res->status) +
                                 " with an unreadable body: " + e.what());
    }
}

SeriesStats series_stats(const std::vector<double>& values) {
    if (values.empty()) throw EmptySeriesError();
    long double sum = 0;
    SeriesStats s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.count = values.size();
    s.mean = static_cast<double>(sum / static_cast<long double>(values.size()));
    return s;
}

std::string_view to_string(ToolOutcome o) {
    switch (o) {
        case ToolOutcome::ok:
            return "ok";
        case ToolOutcome::invalid_params:
            return "invalid_params";
        case ToolOutcome::unknown_tool:
            return "unknown_tool";
        case ToolOutcome::api_error:
            return "api_error";
    }
    return "api_error";
}

namespace {

std::optional<std::map<std::string, SeriesStats>> stats_of(const Json& payload) {
    std::map<std::string, SeriesStats> out;
    bool any_series = false;
    for (const auto& [k, v] : payload.items()) {
        if (!v.is_array()) continue;
        any_series = true;
        std::vector<double> nums;
        for (const auto& x : v) {
            if (x.is_number()) nums.push_back(x.get<double>());
        }
        if (!nums.empty()) out[k] = series_stats(nums);
    }
    if (!any_series) return std::nullopt;
    return out;
}

Json stats_json(const std::map<std::string, SeriesStats>& stats) {
    Json j = Json::object();
    for (const auto& [k, s] : stats) {
        j[k] = {{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
    }
    return j;
}

}  // namespace

std::string render_observation(const ApiResponse& response) {
    if (response.status != ResponseStatus::ok) {
        Json j = {{"error", std::string(to_string(response.status))}, {"api", response.api_name},
                  {"violations", response.errors}};
        return j.dump();
    }
    Json j = response.payload;
    if (auto stats = stats_of(response.payload)) j["stats"] = stats_json(*stats);
    return j.dump();
}

ToolResult invoke(const ToolRegistry& registry, const std::string& name, const std::optional<Json>& params,
                  ApiClient& client) {
    ToolResult r;
    r.tool_name = name;
    const auto* tool = registry.find(name);
    if (!tool) {
        r.outcome = ToolOutcome::unknown_tool;
        Json j = {{"error", "unknown_tool"}, {"tool", name}, {"message", "no tool named '" + name + "' is registered"}};
        r.rendered = j.dump();
        return r;
    }
    if (!params || !params->is_object()) {
        r.outcome = ToolOutcome::invalid_params;
        r.violations = {"action input is not a JSON object"};
    } else {
        const auto* api = registry.catalog().find(tool->bound_api);
        r.violations = validate_request(*api, *params).violations;
        if (!r.violations.empty()) r.outcome = ToolOutcome::invalid_params;
    }
    if (r.outcome == ToolOutcome::invalid_params) {
        Json j = {{"error", "invalid_params"}, {"tool", name}, {"violations", r.violations}};
        r.rendered = j.dump();
        return r;
    }

    auto response = client.call(tool->bound_api, *params);
    r.rendered = render_observation(response);
    if (response.status == ResponseStatus::ok) {
        r.extracted = response.payload;
        r.stats = stats_of(response.payload);
    } else {
        r.outcome = response.status == ResponseStatus::invalid_params ? ToolOutcome::invalid_params
                                                                       : ToolOutcome::api_error;
        r.violations = response.errors;
    }
    r.raw = std::move(response);
    return r;
}

}  // namespace kg2data::tools
