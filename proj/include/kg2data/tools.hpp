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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kg2data/api_catalog.hpp"

namespace kg2data::tools {

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
    std::string bound_api;
    bool operator==(const ToolSpec&) const = default;
};

Json to_json(const ToolSpec& spec);
ToolSpec tool_spec_from_json(const Json& j);

/// Tools in insertion order. Immutable once handed to agents.
class ToolRegistry {
public:
    explicit ToolRegistry(std::shared_ptr<const Catalog> catalog);

    /// One tool per API, named after it.
    static ToolRegistry from_catalog(std::shared_ptr<const Catalog> catalog);

    /// Throws ConfigError on a duplicate name, an unknown bound_api or a
    /// params schema differing from the bound API's.
    ToolRegistry& register_tool(ToolSpec spec);

    const ToolSpec* find(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    const std::vector<ToolSpec>& tools() const { return tools_; }
    std::size_t size() const { return tools_.size(); }
    const Catalog& catalog() const { return *catalog_; }

private:
    std::shared_ptr<const Catalog> catalog_;
    std::vector<ToolSpec> tools_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// `{ "tools": [...] }`
Json to_json(const ToolRegistry& registry);
ToolRegistry registry_from_json(const Json& j, std::shared_ptr<const Catalog> catalog);
ToolRegistry load_registry(const std::string& path, std::shared_ptr<const Catalog> catalog);

class ToolBudgetError : public Error {
public:
    using Error::Error;
};

/// One `Tool:` block per tool in registry order. Throws ToolBudgetError when
/// the text would exceed `format_budget` whitespace tokens.
std::string describe_tools(const ToolRegistry& registry, std::size_t format_budget);
std::string describe_tool(const ToolSpec& spec);

class ToolTransportError : public Error {
public:
    using Error::Error;
};

class ApiClient {
public:
    virtual ~ApiClient() = default;
    virtual ApiResponse call(const std::string& api_name, const Json& params) = 0;
    std::size_t calls() const { return calls_; }

protected:
    std::size_t calls_ = 0;
};

/// Same request path as the mock server, without the socket.
class InProcessApiClient : public ApiClient {
public:
    InProcessApiClient(std::shared_ptr<const Catalog> catalog, std::uint64_t seed)
        : catalog_(std::move(catalog)), seed_(seed) {}
    ApiResponse call(const std::string& api_name, const Json& params) override;

private:
    std::shared_ptr<const Catalog> catalog_;
    std::uint64_t seed_;
};

class HttpApiClient : public ApiClient {
public:
    HttpApiClient(std::string host, int port, std::uint64_t seed, int timeout_seconds = 10)
        : host_(std::move(host)), port_(port), seed_(seed), timeout_seconds_(timeout_seconds) {}
    ApiResponse call(const std::string& api_name, const Json& params) override;

private:
    std::string host_;
    int port_;
    std::uint64_t seed_;
    int timeout_seconds_;
};

struct SeriesStats {
    double mean = 0;
    double min = 0;
    double max = 0;
    std::size_t count = 0;
    bool operator==(const SeriesStats&) const = default;
};

class EmptySeriesError : public Error {
public:
    EmptySeriesError() : Error("series_stats of an empty series") {}
};

SeriesStats series_stats(const std::vector<double>& values);

enum class ToolOutcome { ok, invalid_params, unknown_tool, api_error };
std::string_view to_string(ToolOutcome o);

struct ToolResult {
    ToolOutcome outcome = ToolOutcome::ok;
    std::string tool_name;
    std::optional<ApiResponse> raw;
    Json extracted = Json::object();
    std::optional<std::map<std::string, SeriesStats>> stats;
    std::vector<std::string> violations;
    std::string rendered;
};

/// Observation text for a response: compact JSON of the payload fields plus
/// a `stats` object when series fields exist. Error responses render as
/// `{"error": ..., ...}`.
std::string render_observation(const ApiResponse& response);

/// `params` absent means the action input was not a JSON object. Unknown
/// names and invalid params never reach the client.
ToolResult invoke(const ToolRegistry& registry, const std::string& name, const std::optional<Json>& params,
                  ApiClient& client);

}  // namespace kg2data::tools
