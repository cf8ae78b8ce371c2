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

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kg2data/agent.hpp"
#include "kg2data/memory.hpp"
#include "kg2data/tools.hpp"

namespace httplib {
class Server;
}

namespace kg2data::service {

struct ServiceConfig {
    std::shared_ptr<const memory::MemorySet> memories;
    std::shared_ptr<const tools::ToolRegistry> registry;
    std::shared_ptr<const Gateway> gateway;
    std::uint64_t api_seed = 7;
    agent::AgentConfig agent;
    std::string trace_dir;    // trace logs are written here when set
    std::string report_path;  // served by GET /v1/reports/latest
    std::function<double()> clock;
    int long_poll_ms = 25000;
};

enum class SessionStatus { idle, running };

class NotFound : public Error {
public:
    using Error::Error;
};
class Busy : public Error {
public:
    using Error::Error;
};

/// Sessions, episodes and their event streams. Every session runs at most one
/// episode at a time, on its own worker thread. Event `seq` numbers are
/// 1-based and strictly increasing per session, hence per trace.
class SessionService {
public:
    explicit SessionService(ServiceConfig config);
    ~SessionService();
    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    Json create_session(memory::MemoryKind kind);
    /// Starts an episode; returns its trace id. Throws NotFound or Busy.
    std::string post_message(const std::string& session_id, const std::string& text);
    /// Events with seq > after. Waits up to `wait_ms` for at least one when
    /// none are ready and an episode is running.
    std::vector<Json> events(const std::string& session_id, std::uint64_t after, int wait_ms);
    bool running(const std::string& session_id);
    /// Current state of a trace; `status` is "running" until it ends.
    Json trace(const std::string& trace_id);
    /// Blocks until the session is idle.
    void wait_idle(const std::string& session_id);

    int start(const std::string& host, int port);
    void listen(const std::string& host, int port);
    void stop();
    int port() const { return port_; }

private:
    struct Session {
        std::string id;
        memory::MemoryKind kind;
        std::string created_at;
        std::vector<std::string> traces;
        SessionStatus status = SessionStatus::idle;
        std::vector<Json> events;
        std::thread worker;
    };

    Session& session_locked(const std::string& id);
    Json session_json_locked(const Session& s) const;
    void run(Session& s, std::string trace_id, std::string text);
    void install_routes();

    ServiceConfig config_;
    std::mutex mutex_;
    std::condition_variable changed_;
    std::map<std::string, std::unique_ptr<Session>> sessions_;
    std::map<std::string, agent::Trace> traces_;
    std::map<std::string, bool> finished_;
    std::uint64_t next_session_ = 1;
    bool stopping_ = false;

    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = -1;
};

/// Event record for one trace step; `terminal` is "final" on a Final Answer.
Json step_event(const std::string& session_id, const agent::Trace& trace, std::size_t index, std::uint64_t seq);

/// Rebuilds the step list of `trace_id` from an event sequence.
std::vector<agent::TraceStep> steps_from_events(const std::vector<Json>& events, const std::string& trace_id);

}  // namespace kg2data::service
