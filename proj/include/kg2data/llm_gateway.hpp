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

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kg2data/api_catalog.hpp"

namespace kg2data {

enum class Role { system, user, assistant };
std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 512;
    std::optional<std::vector<std::string>> stop;
};

/// Sorted-field form with trailing whitespace trimmed from every message.
Json canonical_request(const CompletionRequest& request);
/// SHA-256 over the canonical form; identical on every platform.
std::string request_key(const CompletionRequest& request);
/// Short human-readable hint stored next to the key in cassette files.
std::string request_digest(const CompletionRequest& request);

class GatewayError : public Error {
public:
    explicit GatewayError(const std::string& what, int status = 0) : Error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class CassetteMissError : public GatewayError {
public:
    explicit CassetteMissError(std::string key)
        : GatewayError("cassette miss for request key " + key), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

class CassetteModeError : public Error {
public:
    using Error::Error;
};

class NetworkForbiddenError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

enum class CassetteMode { record, replay_strict, replay_fallthrough };

/// Request-key -> response mapping. Cassette files are JSON Lines of
/// `{key, request_digest, response}` written in key order.
class Cassette {
public:
    struct Entry {
        std::string request_digest;
        std::string response;
        bool operator==(const Entry&) const = default;
    };

    explicit Cassette(CassetteMode mode = CassetteMode::replay_strict) : mode_(mode) {}

    static Cassette load(const std::string& path, CassetteMode mode);
    static Cassette parse(std::string_view jsonl, CassetteMode mode);
    void save(const std::string& path) const;
    std::string serialize() const;

    CassetteMode mode() const { return mode_; }
    void set_mode(CassetteMode mode) { mode_ = mode; }

    std::optional<std::string> lookup(const std::string& key) const;
    /// Stores under the canonical key, last write wins. Only in record mode.
    void record(const CompletionRequest& request, const std::string& response);
    /// Raw insert; used for merging and fixture mutation.
    void put(const std::string& key, Entry entry) { entries_[key] = std::move(entry); }
    void merge(const Cassette& other);

    const std::map<std::string, Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    CassetteMode mode_;
    std::map<std::string, Entry> entries_;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
};

/// Global switch asserting offline operation. While set, RemoteBackend throws
/// before opening any connection. Also enabled by KG2DATA_FORBID_NETWORK=1.
void set_network_forbidden(bool forbidden);
bool network_forbidden();
/// Number of remote calls attempted since process start.
std::size_t remote_attempt_count();

struct RemoteConfig {
    std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
    std::string model;
    std::string api_key;
    int timeout_seconds = 60;
    int retries = 3;
    std::chrono::milliseconds backoff{500};
};

/// Reads endpoint/model/token/timeout from KG2DATA_LLM_* environment
/// variables, falling back to the defaults above.
RemoteConfig remote_config_from_env();

/// Chat-completion JSON over HTTP(S).
class RemoteBackend : public LlmBackend {
public:
    explicit RemoteBackend(RemoteConfig config) : config_(std::move(config)) {}
    std::string complete(const CompletionRequest& request) override;

private:
    RemoteConfig config_;
};

/// Serves from a cassette. record: always calls `inner` and stores the result;
/// replay_strict: misses throw; replay_fallthrough: misses go to `inner`.
class CassetteBackend : public LlmBackend {
public:
    CassetteBackend(std::shared_ptr<Cassette> cassette, std::shared_ptr<LlmBackend> inner = nullptr);
    std::string complete(const CompletionRequest& request) override;

    const Cassette& cassette() const { return *cassette_; }

private:
    std::shared_ptr<Cassette> cassette_;
    std::shared_ptr<LlmBackend> inner_;
    std::mutex mutex_;  // serializes cassette writes
};

/// Wraps a callable. Used to author fixtures and in tests.
class ScriptedBackend : public LlmBackend {
public:
    using Script = std::function<std::string(const CompletionRequest&)>;
    explicit ScriptedBackend(Script script) : script_(std::move(script)) {}
    std::string complete(const CompletionRequest& request) override { return script_(request); }

private:
    Script script_;
};

/// The single entry point for model calls. Validates requests and applies stop
/// sequences uniformly, whatever the backend.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<LlmBackend> backend) : backend_(std::move(backend)) {}
    std::string complete(const CompletionRequest& request) const;

private:
    std::shared_ptr<LlmBackend> backend_;
};

/// Cuts `text` at the first occurrence of any stop sequence.
std::string apply_stop(std::string text, const std::optional<std::vector<std::string>>& stop);

}  // namespace kg2data
