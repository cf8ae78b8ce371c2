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

#include "kg2data/api_catalog.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "httplib.h"

namespace kg2data {

namespace {

template <typename E, std::size_t N>
E enum_from(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
            std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == s) return value;
    }
    throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Category>, 8> kCategories{{
    {"temperature", Category::temperature},
    {"humidity", Category::humidity},
    {"precipitation", Category::precipitation},
    {"wind_speed", Category::wind_speed},
    {"wind_direction", Category::wind_direction},
    {"pressure", Category::pressure},
    {"radiation", Category::radiation},
    {"other", Category::other},
}};

constexpr std::array<std::pair<std::string_view, ValueKind>, 7> kKinds{{
    {"string", ValueKind::string},
    {"integer", ValueKind::integer},
    {"number", ValueKind::number},
    {"boolean", ValueKind::boolean},
    {"date", ValueKind::date},
    {"enum", ValueKind::enumeration},
    {"series", ValueKind::series},
}};

constexpr std::array<std::pair<std::string_view, ResponseStatus>, 3> kStatuses{{
    {"ok", ResponseStatus::ok},
    {"invalid_params", ResponseStatus::invalid_params},
    {"not_found", ResponseStatus::not_found},
}};

bool is_numeric(ValueKind k) { return k == ValueKind::integer || k == ValueKind::number; }

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
    }
    return !(s[0] >= '0' && s[0] <= '9');
}

std::string format_number(double v) {
    Json j = v;
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9007199254740992.0) {
        j = static_cast<std::int64_t>(v);
    }
    return j.dump();
}

std::optional<NumericRange> range_from_json(const Json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    const auto& r = j.at(key);
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
        throw ConfigError(std::string("'") + key + "' must be [min, max]");
    }
    return NumericRange{r[0].get<double>(), r[1].get<double>()};
}

Json range_to_json(const NumericRange& r) {
    return Json::array({r.min, r.max});
}

std::optional<std::vector<std::string>> strings_from_json(const Json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    return j.at(key).get<std::vector<std::string>>();
}

void check_param(const std::string& api, const ParamSpec& p) {
    auto where = "api " + api + ", param " + p.name + ": ";
    if (!is_identifier(p.name)) throw ConfigError(where + "name is not an identifier");
    if (p.kind == ValueKind::series) throw ConfigError(where + "series is not a parameter kind");
    if (p.allowed_values.has_value() != (p.kind == ValueKind::enumeration)) {
        throw ConfigError(where + "allowed_values must be present exactly when kind is enum");
    }
    if (p.allowed_values && p.allowed_values->empty()) throw ConfigError(where + "allowed_values is empty");
    if (p.range) {
        if (!is_numeric(p.kind)) throw ConfigError(where + "range is only valid on numeric kinds");
        if (p.range->min > p.range->max) throw ConfigError(where + "range min > max");
    }
}

void check_field(const std::string& api, const FieldSpec& f) {
    auto where = "api " + api + ", field " + f.name + ": ";
    if (!is_identifier(f.name)) throw ConfigError(where + "name is not an identifier");
    if (f.range && f.range->min > f.range->max) throw ConfigError(where + "range min > max");
    if (f.kind == ValueKind::series) {
        if (!f.element_kind || !f.length) throw ConfigError(where + "series needs element_kind and length");
        if (*f.element_kind == ValueKind::series || *f.element_kind == ValueKind::enumeration) {
            throw ConfigError(where + "unsupported series element kind");
        }
        if (f.length->first < 1 || f.length->first > f.length->second) {
            throw ConfigError(where + "length bounds must satisfy 1 <= min <= max");
        }
    } else if (f.element_kind || f.length) {
        throw ConfigError(where + "element_kind/length only valid on series fields");
    }
    if (f.kind == ValueKind::enumeration && (!f.allowed_values || f.allowed_values->empty())) {
        throw ConfigError(where + "enum field needs allowed_values");
    }
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

std::string describe_value(const Json& v) {
    return v.is_string() ? "'" + v.get<std::string>() + "'" : v.dump();
}

}  // namespace

std::string_view to_string(Category c) {
    for (const auto& [name, value] : kCategories) {
        if (value == c) return name;
    }
    return "other";
}

std::string_view to_string(ValueKind k) {
    for (const auto& [name, value] : kKinds) {
        if (value == k) return name;
    }
    return "string";
}

std::string_view to_string(ResponseStatus s) {
    for (const auto& [name, value] : kStatuses) {
        if (value == s) return name;
    }
    return "ok";
}

Category category_from_string(std::string_view s) { return enum_from(s, kCategories, "category"); }
ValueKind value_kind_from_string(std::string_view s) { return enum_from(s, kKinds, "kind"); }
ResponseStatus response_status_from_string(std::string_view s) { return enum_from(s, kStatuses, "status"); }

const ParamSpec* ApiSpec::find_param(std::string_view param) const {
    for (const auto& p : params) {
        if (p.name == param) return &p;
    }
    return nullptr;
}

Catalog::Catalog(std::vector<ApiSpec> specs) : specs_(std::move(specs)) {
    if (specs_.empty()) throw ConfigError("catalog must contain >=1 API");
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const auto& s = specs_[i];
        if (!is_identifier(s.name)) throw ConfigError("api name '" + s.name + "' is not snake_case");
        if (s.params.empty()) throw ConfigError("api " + s.name + " has no params");
        if (s.output_fields.empty()) throw ConfigError("api " + s.name + " has no output fields");
        std::set<std::string> seen;
        for (const auto& p : s.params) {
            check_param(s.name, p);
            if (!seen.insert(p.name).second) throw ConfigError("api " + s.name + ": duplicate param " + p.name);
        }
        seen.clear();
        for (const auto& f : s.output_fields) {
            check_field(s.name, f);
            if (!seen.insert(f.name).second) throw ConfigError("api " + s.name + ": duplicate field " + f.name);
        }
        if (!index_.emplace(s.name, i).second) throw ConfigError("duplicate api name '" + s.name + "'");
    }
}

const ApiSpec* Catalog::find(std::string_view name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &specs_[it->second];
}

Json to_json(const ApiSpec& spec) {
    Json params = Json::array();
    for (const auto& p : spec.params) {
        Json jp = {{"name", p.name}, {"kind", to_string(p.kind)}, {"required", p.required}};
        if (!p.description.empty()) jp["description"] = p.description;
        if (p.units) jp["units"] = *p.units;
        if (p.allowed_values) jp["allowed_values"] = *p.allowed_values;
        if (p.range) jp["range"] = range_to_json(*p.range);
        params.push_back(std::move(jp));
    }
    Json fields = Json::array();
    for (const auto& f : spec.output_fields) {
        Json jf = {{"name", f.name}, {"kind", to_string(f.kind)}};
        if (f.units) jf["units"] = *f.units;
        if (f.range) jf["range"] = range_to_json(*f.range);
        if (f.allowed_values) jf["allowed_values"] = *f.allowed_values;
        if (f.element_kind) jf["element_kind"] = to_string(*f.element_kind);
        if (f.length) jf["length"] = Json::array({f.length->first, f.length->second});
        fields.push_back(std::move(jf));
    }
    return {{"name", spec.name},
            {"description", spec.description},
            {"category", to_string(spec.category)},
            {"params", std::move(params)},
            {"output_fields", std::move(fields)}};
}

ApiSpec api_spec_from_json(const Json& j) {
    try {
        ApiSpec s;
        s.name = j.at("name").get<std::string>();
        s.description = j.value("description", "");
        s.category = category_from_string(j.at("category").get<std::string>());
        for (const auto& jp : j.at("params")) {
            ParamSpec p;
            p.name = jp.at("name").get<std::string>();
            p.kind = value_kind_from_string(jp.at("kind").get<std::string>());
            p.required = jp.value("required", false);
            p.description = jp.value("description", "");
            if (jp.contains("units")) p.units = jp.at("units").get<std::string>();
            p.allowed_values = strings_from_json(jp, "allowed_values");
            p.range = range_from_json(jp, "range");
            s.params.push_back(std::move(p));
        }
        for (const auto& jf : j.at("output_fields")) {
            FieldSpec f;
            f.name = jf.at("name").get<std::string>();
            f.kind = value_kind_from_string(jf.at("kind").get<std::string>());
            if (jf.contains("units")) f.units = jf.at("units").get<std::string>();
            f.range = range_from_json(jf, "range");
            f.allowed_values = strings_from_json(jf, "allowed_values");
            if (jf.contains("element_kind")) f.element_kind = value_kind_from_string(jf.at("element_kind").get<std::string>());
            if (jf.contains("length")) {
                const auto& l = jf.at("length");
                f.length = std::pair<int, int>{l.at(0).get<int>(), l.at(1).get<int>()};
            }
            s.output_fields.push_back(std::move(f));
        }
        return s;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed api spec: ") + e.what());
    }
}

Json to_json(const Catalog& catalog) {
    Json apis = Json::array();
    for (const auto& s : catalog.specs()) apis.push_back(to_json(s));
    return {{"apis", std::move(apis)}};
}

Catalog catalog_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("apis") || !j.at("apis").is_array()) {
        throw ConfigError("catalog document must be an object with an 'apis' array");
    }
    std::vector<ApiSpec> specs;
    for (const auto& js : j.at("apis")) specs.push_back(api_spec_from_json(js));
    return Catalog(std::move(specs));
}

Catalog parse_catalog(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, column = 1;
        std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError("catalog parse error at line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + e.what(),
                         line, column);
    }
    return catalog_from_json(j);
}

Catalog load_catalog(const std::string& path) { return parse_catalog(read_file(path)); }

void write_catalog(const Catalog& catalog, const std::string& path) {
    write_file(path, to_json(catalog).dump(2) + "\n");
}

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    int y = 0, m = 0, d = 0;
    if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) || !parse_int(s.substr(8, 2), d)) {
        return false;
    }
    if (m < 1 || m > 12 || d < 1) return false;
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    int max_day = kDays[m - 1] + (m == 2 && leap ? 1 : 0);
    return d <= max_day;
}

ValidationResult validate_request(const ApiSpec& spec, const Json& params) {
    ValidationResult r;
    if (!params.is_object()) {
        r.violations.push_back("params must be a JSON object");
        return r;
    }
    for (const auto& p : spec.params) {
        if (p.required && !params.contains(p.name)) r.violations.push_back("missing required param " + p.name);
    }
    for (auto it = params.begin(); it != params.end(); ++it) {
        const auto* p = spec.find_param(it.key());
        if (!p) {
            r.violations.push_back("unknown param " + it.key());
            continue;
        }
        const Json& v = it.value();
        auto where = "param " + p->name + ": ";
        switch (p->kind) {
            case ValueKind::string:
                if (!v.is_string()) r.violations.push_back(where + "expected string, got " + describe_value(v));
                break;
            case ValueKind::boolean:
                if (!v.is_boolean()) r.violations.push_back(where + "expected boolean, got " + describe_value(v));
                break;
            case ValueKind::date:
                if (!v.is_string() || !is_iso_date(v.get<std::string>())) {
                    r.violations.push_back(where + "invalid date " + describe_value(v) + " (expected YYYY-MM-DD)");
                }
                break;
            case ValueKind::enumeration: {
                const auto& allowed = *p->allowed_values;
                if (!v.is_string() || std::find(allowed.begin(), allowed.end(), v.get<std::string>()) == allowed.end()) {
                    r.violations.push_back(where + "value " + describe_value(v) + " not in allowed values [" +
                                           join(allowed, ", ") + "]");
                }
                break;
            }
            case ValueKind::integer:
            case ValueKind::number: {
                if (!v.is_number()) {
                    r.violations.push_back(where + "expected " + std::string(to_string(p->kind)) + ", got " +
                                           describe_value(v));
                    break;
                }
                double x = v.get<double>();
                if (p->kind == ValueKind::integer && !v.is_number_integer() && x != std::floor(x)) {
                    r.violations.push_back(where + "expected integer, got " + v.dump());
                    break;
                }
                if (p->range) {
                    if (x < p->range->min) {
                        r.violations.push_back(where + "value " + v.dump() + " below range.min " +
                                               format_number(p->range->min));
                    }
                    if (x > p->range->max) {
                        r.violations.push_back(where + "value " + v.dump() + " above range.max " +
                                               format_number(p->range->max));
                    }
                }
                break;
            }
            case ValueKind::series:
                break;
        }
    }
    return r;
}

std::string canonical_json(const Json& value) {
    switch (value.type()) {
        case Json::value_t::object: {
            std::string out = "{";
            bool first = true;
            for (auto it = value.begin(); it != value.end(); ++it) {  // keys are already sorted
                if (!first) out += ',';
                first = false;
                out += Json(it.key()).dump();
                out += ':';
                out += canonical_json(it.value());
            }
            return out + "}";
        }
        case Json::value_t::array: {
            std::string out = "[";
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (i) out += ',';
                out += canonical_json(value[i]);
            }
            return out + "]";
        }
        case Json::value_t::number_float:
            return format_number(value.get<double>());
        default:
            return value.dump();
    }
}

Json to_json(const ApiResponse& r) {
    return {{"api_name", r.api_name}, {"status", to_string(r.status)}, {"payload", r.payload}, {"errors", r.errors}};
}

ApiResponse api_response_from_json(const Json& j) {
    ApiResponse r;
    r.api_name = j.at("api_name").get<std::string>();
    r.status = response_status_from_string(j.at("status").get<std::string>());
    r.payload = j.value("payload", Json::object());
    r.errors = j.value("errors", std::vector<std::string>{});
    return r;
}

std::string serialize_response(const ApiResponse& r) { return to_json(r).dump(); }

namespace {

double round_to(double v, int decimals) {
    double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

Json synth_number(SplitMix64& rng, const std::optional<NumericRange>& range) {
    NumericRange r = range.value_or(NumericRange{0, 100});
    double v = round_to(r.min + rng.uniform() * (r.max - r.min), 1);
    return std::clamp(v, r.min, r.max);
}

Json synth_integer(SplitMix64& rng, const std::optional<NumericRange>& range) {
    NumericRange r = range.value_or(NumericRange{0, 100});
    auto lo = static_cast<std::int64_t>(std::ceil(r.min));
    auto hi = static_cast<std::int64_t>(std::floor(r.max));
    return rng.range(lo, std::max(lo, hi));
}

Json synth_date(SplitMix64& rng) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int month = static_cast<int>(rng.range(1, 12));
    int day = static_cast<int>(rng.range(1, kDays[month - 1]));
    char buf[16];
    std::snprintf(buf, sizeof buf, "2024-%02d-%02d", month, day);
    return std::string(buf);
}

Json synth_scalar(SplitMix64& rng, ValueKind kind, const FieldSpec& f) {
    switch (kind) {
        case ValueKind::number:
            return synth_number(rng, f.range);
        case ValueKind::integer:
            return synth_integer(rng, f.range);
        case ValueKind::boolean:
            return (rng.next() & 1) != 0;
        case ValueKind::enumeration: {
            const auto& allowed = *f.allowed_values;
            return allowed[static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(allowed.size()) - 1))];
        }
        case ValueKind::date:
            return synth_date(rng);
        case ValueKind::string:
            return f.name + "-" + std::to_string(rng.range(1, 999));
        case ValueKind::series:
            break;
    }
    return nullptr;
}

}  // namespace

ApiResponse synthesize_response(const ApiSpec& spec, const Json& params, std::uint64_t seed) {
    auto check = validate_request(spec, params);
    if (!check.ok()) {
        throw ContractError("synthesize_response called with invalid params for " + spec.name + ": " +
                            join(check.violations, "; "));
    }
    std::string key = spec.name + '\n' + canonical_json(params) + '\n' + std::to_string(seed);
    SplitMix64 rng(sha256_u64(key));

    ApiResponse r;
    r.api_name = spec.name;
    r.status = ResponseStatus::ok;
    for (const auto& f : spec.output_fields) {
        if (f.kind == ValueKind::series) {
            auto len = rng.range(f.length->first, f.length->second);
            Json arr = Json::array();
            for (std::int64_t i = 0; i < len; ++i) arr.push_back(synth_scalar(rng, *f.element_kind, f));
            r.payload[f.name] = std::move(arr);
        } else {
            // Draw first so fields after an echoed one keep their values.
            Json v = synth_scalar(rng, f.kind, f);
            r.payload[f.name] = params.contains(f.name) ? params.at(f.name) : std::move(v);
        }
    }
    return r;
}

ApiResponse handle_api_request(const Catalog& catalog, std::string_view name, const Json& params,
                               std::uint64_t seed) {
    const auto* spec = catalog.find(name);
    if (!spec) {
        ApiResponse r;
        r.api_name = std::string(name);
        r.status = ResponseStatus::not_found;
        r.errors.push_back("unknown api " + std::string(name));
        return r;
    }
    auto check = validate_request(*spec, params);
    if (!check.ok()) {
        ApiResponse r;
        r.api_name = spec->name;
        r.status = ResponseStatus::invalid_params;
        r.errors = std::move(check.violations);
        return r;
    }
    return synthesize_response(*spec, params, seed);
}

ApiServer::ApiServer(std::shared_ptr<const Catalog> catalog, std::uint64_t default_seed)
    : catalog_(std::move(catalog)), default_seed_(default_seed), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::install_routes() {
    server_->Get("/apis", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(to_json(*catalog_).dump(), "application/json");
    });
    server_->Post(R"(/apis/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::string name = req.matches[1];
        std::uint64_t seed = default_seed_;
        if (req.has_header("X-Seed")) {
            try {
                seed = std::stoull(req.get_header_value("X-Seed"));
            } catch (const std::exception&) {
                ApiResponse bad{name, ResponseStatus::invalid_params, Json::object(), {"X-Seed must be an integer"}};
                res.status = 400;
                res.set_content(serialize_response(bad), "application/json");
                return;
            }
        }
        Json params;
        try {
            params = req.body.empty() ? Json::object() : Json::parse(req.body);
        } catch (const Json::parse_error& e) {
            ApiResponse bad{name, ResponseStatus::invalid_params, Json::object(),
                            {std::string("malformed body: ") + e.what()}};
            res.status = 400;
            res.set_content(serialize_response(bad), "application/json");
            return;
        }
        auto r = handle_api_request(*catalog_, name, params, seed);
        res.status = r.status == ResponseStatus::ok ? 200 : r.status == ResponseStatus::not_found ? 404 : 400;
        res.set_content(serialize_response(r), "application/json");
    });
}

int ApiServer::start(const std::string& host, int port) {
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
    } else {
        port_ = server_->bind_to_port(host, port) ? port : -1;
    }
    if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void ApiServer::listen(const std::string& host, int port) {
    port_ = port;
    if (!server_->listen(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
}

void ApiServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace kg2data
