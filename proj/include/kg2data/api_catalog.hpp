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
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "kg2data/common.hpp"

namespace httplib {
class Server;
}

namespace kg2data {

using Json = nlohmann::json;

enum class Category { temperature, humidity, precipitation, wind_speed, wind_direction, pressure, radiation, other };
enum class ValueKind { string, integer, number, boolean, date, enumeration, series };

std::string_view to_string(Category c);
std::string_view to_string(ValueKind k);
Category category_from_string(std::string_view s);
ValueKind value_kind_from_string(std::string_view s);

struct NumericRange {
    double min = 0;
    double max = 0;
    bool operator==(const NumericRange&) const = default;
};

struct ParamSpec {
    std::string name;
    ValueKind kind = ValueKind::string;  // never series
    std::optional<std::string> units;
    bool required = false;
    std::optional<std::vector<std::string>> allowed_values;  // iff kind == enumeration
    std::optional<NumericRange> range;                        // numeric kinds only
    std::string description;
    bool operator==(const ParamSpec&) const = default;
};

struct FieldSpec {
    std::string name;
    ValueKind kind = ValueKind::number;
    std::optional<std::string> units;
    std::optional<NumericRange> range;
    std::optional<std::vector<std::string>> allowed_values;
    // series only
    std::optional<ValueKind> element_kind;
    std::optional<std::pair<int, int>> length;
    bool operator==(const FieldSpec&) const = default;
};

struct ApiSpec {
    std::string name;
    std::string description;
    Category category = Category::other;
    std::vector<ParamSpec> params;
    std::vector<FieldSpec> output_fields;

    const ParamSpec* find_param(std::string_view param) const;
    bool operator==(const ApiSpec&) const = default;
};

/// Immutable after construction; safe to share across threads.
class Catalog {
public:
    Catalog() = default;
    /// Validates every spec invariant and name uniqueness. Throws ConfigError.
    explicit Catalog(std::vector<ApiSpec> specs);

    const ApiSpec* find(std::string_view name) const;
    const std::vector<ApiSpec>& specs() const { return specs_; }
    std::size_t size() const { return specs_.size(); }
    bool empty() const { return specs_.empty(); }

    bool operator==(const Catalog& other) const { return specs_ == other.specs_; }

private:
    std::vector<ApiSpec> specs_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

Json to_json(const ApiSpec& spec);
ApiSpec api_spec_from_json(const Json& j);
Json to_json(const Catalog& catalog);
Catalog catalog_from_json(const Json& j);

/// Parses the `{ "apis": [...] }` document. Syntax errors carry line/column.
Catalog parse_catalog(std::string_view text);
Catalog load_catalog(const std::string& path);
void write_catalog(const Catalog& catalog, const std::string& path);

struct ValidationResult {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Reports every violation, never stops at the first.
ValidationResult validate_request(const ApiSpec& spec, const Json& params);

bool is_iso_date(std::string_view s);

/// Sorted keys, integral numbers without a fraction, shortest round-trip
/// representation for everything else.
std::string canonical_json(const Json& value);

enum class ResponseStatus { ok, invalid_params, not_found };
std::string_view to_string(ResponseStatus s);
ResponseStatus response_status_from_string(std::string_view s);

struct ApiResponse {
    std::string api_name;
    ResponseStatus status = ResponseStatus::ok;
    Json payload = Json::object();
    std::vector<std::string> errors;
    bool operator==(const ApiResponse&) const = default;
};

Json to_json(const ApiResponse& r);
ApiResponse api_response_from_json(const Json& j);
/// Wire form used by the mock server and by the in-process client alike.
std::string serialize_response(const ApiResponse& r);

class ContractError : public Error {
public:
    using Error::Error;
};

/// Deterministic virtual response: a pure function of (spec.name, canonical
/// params, seed). Output fields named like a request param echo its value.
/// Throws ContractError when the params do not validate.
ApiResponse synthesize_response(const ApiSpec& spec, const Json& params, std::uint64_t seed);

/// Full request path shared by the HTTP server and the in-process client:
/// not_found / invalid_params / synthesized ok response.
ApiResponse handle_api_request(const Catalog& catalog, std::string_view name, const Json& params,
                               std::uint64_t seed);

/// HTTP front of the catalog: `GET /apis`, `POST /apis/{name}` with optional
/// `X-Seed` header. Handlers are stateless over the shared catalog.
class ApiServer {
public:
    ApiServer(std::shared_ptr<const Catalog> catalog, std::uint64_t default_seed = 0);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();
    int port() const { return port_; }

private:
    void install_routes();

    std::shared_ptr<const Catalog> catalog_;
    std::uint64_t default_seed_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace kg2data
