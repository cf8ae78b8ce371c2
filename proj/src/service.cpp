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

#include "kg2data/service.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>

#include "httplib.h"

namespace kg2data::service {

namespace {

std::string dump(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(dump(body), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

std::string sse_frame(const Json& event) {
    return "id: " + std::to_string(event.at("seq").get<std::uint64_t>()) + "\nevent: " +
           event.at("kind").get<std::string>() + "\ndata: " + dump(event) + "\n\n";
}

}  // namespace

Json step_event(const std::string& session_id, const agent::Trace& trace, std::size_t index, std::uint64_t seq) {
    const auto& step = trace.steps[index];
    Json e = {{"session_id", session_id},
              {"trace_id", trace.id},
              {"seq", seq},
              {"kind", agent::step_kind(step)},
              {"payload", agent::step_payload(step)},
              {"duration_ms", trace.durations_ms[index]},
              {"terminal", nullptr}};
    if (std::holds_alternative<agent::FinalAnswer>(step)) e["terminal"] = "final";
    return e;
}

std::vector<agent::TraceStep> steps_from_events(const std::vector<Json>& events, const std::string& trace_id) {
    std::vector<agent::TraceStep> steps;
    for (const auto& e : events) {
        if (e.at("trace_id") != trace_id || e.at("kind") == "error") continue;
        steps.push_back(agent::step_from_payload(e.at("kind").get<std::string>(), e.at("payload")));
    }
    return steps;
}

SessionService::SessionService(ServiceConfig config) : config_(std::move(config)) {
    if (!config_.memories || !config_.registry || !config_.gateway) {
        throw ConfigError("session service needs memories, a tool registry and a gateway");
    }
    config_.agent.validate();
}

SessionService::~SessionService() { stop(); }

SessionService::Session& SessionService::session_locked(const std::string& id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
    return *it->second;
}

Json SessionService::session_json_locked(const Session& s) const {
    return {{"id", s.id},
            {"memory_kind", memory::to_string(s.kind)},
            {"created_at", s.created_at},
            {"traces", s.traces},
            {"status", s.status == SessionStatus::running ? "running" : "idle"}};
}

Json SessionService::create_session(memory::MemoryKind kind) {
    std::lock_guard lock(mutex_);
    auto s = std::make_unique<Session>();
    s->id = "s" + std::to_string(next_session_++);
    s->kind = kind;
    s->created_at = now_iso8601();
    auto j = session_json_locked(*s);
    sessions_.emplace(s->id, std::move(s));
    return j;
}

std::string SessionService::post_message(const std::string& session_id, const std::string& text) {
    std::unique_lock lock(mutex_);
    if (stopping_) throw Busy("service is stopping");
    auto& s = session_locked(session_id);
    if (s.status == SessionStatus::running) throw Busy("session " + session_id + " is running an episode");
    if (s.worker.joinable()) s.worker.join();  // previous episode already finished
    const auto trace_id = s.id + "-t" + std::to_string(s.traces.size() + 1);
    s.traces.push_back(trace_id);
    s.status = SessionStatus::running;
    agent::Trace pending;
    pending.id = trace_id;
    pending.query = text;
    pending.memory_kind = s.kind;
    traces_[trace_id] = pending;
    finished_[trace_id] = false;
    s.worker = std::thread([this, &s, trace_id, text] { run(s, trace_id, text); });
    return trace_id;
}

void SessionService::run(Session& s, std::string trace_id, std::string text) {
    agent::EpisodeHooks hooks;
    hooks.clock = config_.clock;
    hooks.on_step = [&](const agent::Trace& t, std::size_t index) {
        std::lock_guard lock(mutex_);
        s.events.push_back(step_event(s.id, t, index, s.events.size() + 1));
        traces_[trace_id] = t;
        changed_.notify_all();
    };
    tools::InProcessApiClient client(std::shared_ptr<const Catalog>(std::shared_ptr<const Catalog>{},
                                                                    &config_.registry->catalog()),
                                     config_.api_seed);
    agent::Trace trace;
    try {
        trace = agent::run_episode(trace_id, text, *config_.memories->get(s.kind), *config_.registry,
                                   *config_.gateway, client, config_.agent, hooks);
    } catch (const std::exception& e) {
        trace.id = trace_id;
        trace.query = text;
        trace.memory_kind = s.kind;
        trace.status = agent::TraceStatus::gateway_error;
        trace.error = e.what();
    }
    if (!config_.trace_dir.empty()) {
        try {
            std::filesystem::create_directories(config_.trace_dir);
            write_file((std::filesystem::path(config_.trace_dir) / (trace_id + ".jsonl")).string(),
                       agent::trace_to_jsonl(trace, config_.agent));
        } catch (const std::exception&) {
            // Persistence is best effort; the trace stays available in memory.
        }
    }
    std::lock_guard lock(mutex_);
    if (trace.status != agent::TraceStatus::completed) {
        s.events.push_back({{"session_id", s.id},
                            {"trace_id", trace_id},
                            {"seq", s.events.size() + 1},
                            {"kind", "error"},
                            {"payload", {{"status", agent::to_string(trace.status)}, {"error", trace.error}}},
                            {"duration_ms", 0.0},
                            {"terminal", "error"}});
    }
    traces_[trace_id] = std::move(trace);
    finished_[trace_id] = true;
    s.status = SessionStatus::idle;
    changed_.notify_all();
}

std::vector<Json> SessionService::events(const std::string& session_id, std::uint64_t after, int wait_ms) {
    std::unique_lock lock(mutex_);
    auto* s = &session_locked(session_id);
    changed_.wait_for(lock, std::chrono::milliseconds(std::max(0, wait_ms)), [&] {
        return stopping_ || s->events.size() > after || s->status == SessionStatus::idle;
    });
    std::vector<Json> out;
    for (auto i = after; i < s->events.size(); ++i) out.push_back(s->events[i]);
    return out;
}

bool SessionService::running(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    return session_locked(session_id).status == SessionStatus::running;
}

void SessionService::wait_idle(const std::string& session_id) {
    std::unique_lock lock(mutex_);
    auto* s = &session_locked(session_id);
    changed_.wait(lock, [&] { return s->status == SessionStatus::idle; });
}

Json SessionService::trace(const std::string& trace_id) {
    std::lock_guard lock(mutex_);
    auto it = traces_.find(trace_id);
    if (it == traces_.end()) throw NotFound("unknown trace '" + trace_id + "'");
    auto j = agent::trace_to_json(it->second);
    if (!finished_[trace_id]) j["status"] = "running";
    return j;
}

void SessionService::install_routes() {
    auto& srv = *server_;

    srv.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        auto body = Json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "body must be a JSON object");
        try {
            auto kind = memory::memory_kind_from_string(body.value("memory_kind", Json("kg")).is_string()
                                                            ? body.value("memory_kind", "kg")
                                                            : std::string("?"));
            send_json(res, 200, create_session(kind));
        } catch (const ConfigError& e) {
            send_error(res, 400, e.what());
        }
    });

    srv.Post(R"(/v1/sessions/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto id = req.matches[1].str();
        auto body = Json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body.at("text").is_string() ||
            trim(body.at("text").get<std::string>()).empty()) {
            try {
                std::lock_guard lock(mutex_);
                session_locked(id);
            } catch (const NotFound& e) {
                return send_error(res, 404, e.what());
            }
            return send_error(res, 400, "body must be {\"text\": non-empty string}");
        }
        try {
            send_json(res, 200, {{"trace_id", post_message(id, body.at("text").get<std::string>())}});
        } catch (const NotFound& e) {
            send_error(res, 404, e.what());
        } catch (const Busy& e) {
            send_error(res, 409, e.what());
        }
    });

    srv.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mutex_);
        try {
            send_json(res, 200, session_json_locked(session_locked(req.matches[1].str())));
        } catch (const NotFound& e) {
            send_error(res, 404, e.what());
        }
    });

    srv.Get(R"(/v1/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto id = req.matches[1].str();
        std::uint64_t after = 0;
        try {
            if (req.has_param("after")) after = std::stoull(req.get_param_value("after"));
            else if (req.has_header("Last-Event-ID")) after = std::stoull(req.get_header_value("Last-Event-ID"));
        } catch (const std::exception&) {
            return send_error(res, 400, "after must be a non-negative integer");
        }
        {
            std::lock_guard lock(mutex_);
            if (!sessions_.count(id)) return send_error(res, 404, "unknown session '" + id + "'");
        }
        const auto accept = req.get_header_value("Accept");
        if (accept.find("text/event-stream") == std::string::npos &&
            accept.find("application/json") != std::string::npos) {
            int wait = config_.long_poll_ms;
            if (req.has_param("wait_ms")) wait = std::atoi(req.get_param_value("wait_ms").c_str());
            return send_json(res, 200, {{"events", events(id, after, wait)}});
        }
        auto cursor = std::make_shared<std::uint64_t>(after);
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, id, cursor](std::size_t, httplib::DataSink& sink) {
            auto batch = events(id, *cursor, 1000);
            for (const auto& e : batch) {
                const auto frame = sse_frame(e);
                if (!sink.write(frame.data(), frame.size())) return false;
                *cursor = e.at("seq").get<std::uint64_t>();
            }
            bool idle;
            std::size_t total;
            {
                std::lock_guard lock(mutex_);
                auto& s = session_locked(id);
                idle = s.status == SessionStatus::idle;
                total = s.events.size();
                if (stopping_) idle = true;
            }
            if (idle && *cursor >= total) sink.done();
            return true;
        });
    });

    srv.Get(R"(/v1/traces/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, 200, trace(req.matches[1].str()));
        } catch (const NotFound& e) {
            send_error(res, 404, e.what());
        }
    });

    srv.Get("/v1/reports/latest", [this](const httplib::Request&, httplib::Response& res) {
        if (config_.report_path.empty() || !std::filesystem::exists(config_.report_path)) {
            return send_error(res, 404, "no report available");
        }
        auto j = Json::parse(read_file(config_.report_path), nullptr, false);
        if (j.is_discarded()) return send_error(res, 500, "report file is not valid JSON");
        send_json(res, 200, j);
    });
}

int SessionService::start(const std::string& host, int port) {
    server_ = std::make_unique<httplib::Server>();
    install_routes();
    port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error("cannot bind session service to " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void SessionService::listen(const std::string& host, int port) {
    server_ = std::make_unique<httplib::Server>();
    install_routes();
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind session service to " + host + ":" + std::to_string(port));
    port_ = port;
    server_->listen_after_bind();
}

void SessionService::stop() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
        changed_.notify_all();
    }
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
    for (auto& [id, s] : sessions_) {
        if (s->worker.joinable()) s->worker.join();
    }
}

}  // namespace kg2data::service
