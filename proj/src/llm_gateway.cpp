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

#include "kg2data/llm_gateway.hpp"

#include <atomic>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace kg2data {

namespace {

std::atomic<bool> g_forbid_network{false};
std::atomic<std::size_t> g_remote_attempts{0};

bool env_forbids_network() {
    const char* v = std::getenv("KG2DATA_FORBID_NETWORK");
    return v && std::string_view(v) == "1";
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace

std::string_view to_string(Role r) {
    switch (r) {
        case Role::system:
            return "system";
        case Role::user:
            return "user";
        case Role::assistant:
            return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw ConfigError("unknown role '" + std::string(s) + "'");
}

Json canonical_request(const CompletionRequest& request) {
    Json messages = Json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"content", rtrim(m.content)}, {"role", to_string(m.role)}});
    }
    Json j = {{"max_tokens", request.max_tokens}, {"messages", std::move(messages)},
              {"temperature", request.temperature}};
    if (request.stop) j["stop"] = *request.stop;
    return j;
}

std::string request_key(const CompletionRequest& request) {
    return sha256_hex(canonical_json(canonical_request(request)));
}

std::string request_digest(const CompletionRequest& request) {
    std::string last_user;
    for (const auto& m : request.messages) {
        if (m.role == Role::user) last_user = m.content;
    }
    auto words = whitespace_tokens(last_user);
    if (words.size() > 16) words.resize(16);
    return std::to_string(request.messages.size()) + " msgs; user: " + join(words, " ");
}

Cassette Cassette::parse(std::string_view jsonl, CassetteMode mode) {
    Cassette c(mode);
    std::size_t line_no = 0;
    for (const auto& line : split(jsonl, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            auto j = Json::parse(line);
            c.entries_[j.at("key").get<std::string>()] =
                Entry{j.value("request_digest", ""), j.at("response").get<std::string>()};
        } catch (const Json::exception& e) {
            throw ParseError("cassette line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    return c;
}

Cassette Cassette::load(const std::string& path, CassetteMode mode) {
    try {
        return parse(read_file(path), mode);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line());
    }
}

std::string Cassette::serialize() const {
    std::string out;
    for (const auto& [key, entry] : entries_) {
        Json j = {{"key", key}, {"request_digest", entry.request_digest}, {"response", entry.response}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

void Cassette::save(const std::string& path) const { write_file(path, serialize()); }

std::optional<std::string> Cassette::lookup(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.response;
}

void Cassette::record(const CompletionRequest& request, const std::string& response) {
    if (mode_ != CassetteMode::record) throw CassetteModeError("cassette is not in record mode");
    entries_[request_key(request)] = Entry{request_digest(request), response};
}

void Cassette::merge(const Cassette& other) {
    for (const auto& [k, e] : other.entries_) entries_[k] = e;
}

void set_network_forbidden(bool forbidden) { g_forbid_network = forbidden; }
bool network_forbidden() { return g_forbid_network || env_forbids_network(); }
std::size_t remote_attempt_count() { return g_remote_attempts; }

RemoteConfig remote_config_from_env() {
    RemoteConfig c;
    c.endpoint = env_or("KG2DATA_LLM_ENDPOINT", c.endpoint);
    c.model = env_or("KG2DATA_LLM_MODEL", c.model);
    c.api_key = env_or("KG2DATA_LLM_API_KEY", c.api_key);
    c.timeout_seconds = std::stoi(env_or("KG2DATA_LLM_TIMEOUT", std::to_string(c.timeout_seconds)));
    return c;
}

std::string RemoteBackend::complete(const CompletionRequest& request) {
    if (network_forbidden()) throw NetworkForbiddenError("network access is forbidden in this mode");

    // Split "scheme://host[:port]/path".
    auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + config_.endpoint);
    auto path_start = config_.endpoint.find('/', scheme_end + 3);
    std::string origin = config_.endpoint.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

    Json body = canonical_request(request);
    if (!config_.model.empty()) body["model"] = config_.model;

    httplib::Client client(origin);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto delay = config_.backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        ++g_remote_attempts;
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "remote status " + std::to_string(res->status);
            if (attempt == config_.retries) throw GatewayError(last_error, res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw GatewayError("remote status " + std::to_string(res->status) + ": " + res->body, res->status);
        }
        try {
            auto j = Json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const Json::exception& e) {
            throw GatewayError(std::string("malformed completion response: ") + e.what(), res->status);
        }
    }
    throw GatewayError(last_error + " after " + std::to_string(config_.retries) + " retries");
}

CassetteBackend::CassetteBackend(std::shared_ptr<Cassette> cassette, std::shared_ptr<LlmBackend> inner)
    : cassette_(std::move(cassette)), inner_(std::move(inner)) {
    if (cassette_->mode() != CassetteMode::replay_strict && !inner_) {
        throw ConfigError("record and fallthrough cassettes need an inner backend");
    }
}

std::string CassetteBackend::complete(const CompletionRequest& request) {
    auto key = request_key(request);
    if (cassette_->mode() != CassetteMode::record) {
        std::optional<std::string> hit;
        {
            std::lock_guard lock(mutex_);
            hit = cassette_->lookup(key);
        }
        if (hit) return *hit;
        if (cassette_->mode() == CassetteMode::replay_strict) throw CassetteMissError(key);
        return inner_->complete(request);
    }
    auto response = inner_->complete(request);
    std::lock_guard lock(mutex_);
    cassette_->record(request, response);
    return response;
}

std::string apply_stop(std::string text, const std::optional<std::vector<std::string>>& stop) {
    if (!stop) return text;
    std::size_t cut = text.size();
    for (const auto& s : *stop) {
        if (s.empty()) continue;
        auto pos = text.find(s);
        if (pos != std::string::npos) cut = std::min(cut, pos);
    }
    text.resize(cut);
    return text;
}

std::string Gateway::complete(const CompletionRequest& request) const {
    if (request.messages.empty()) throw ConfigError("completion request has no messages");
    for (const auto& m : request.messages) {
        if (m.role != Role::assistant && trim(m.content).empty()) {
            throw ConfigError("system/user message content must be non-empty");
        }
    }
    if (request.temperature < 0) throw ConfigError("temperature must be >= 0");
    return apply_stop(backend_->complete(request), request.stop);
}

}  // namespace kg2data
