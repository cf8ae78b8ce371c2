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

#include <atomic>
#include <thread>

#include "doctest.h"
#include "httplib.h"

#include "kg2data/llm_gateway.hpp"
#include "support.hpp"

using namespace kg2data;

namespace {

CompletionRequest request(const std::string& user, double temperature = 0.0) {
    CompletionRequest r;
    r.messages = {{Role::system, "You are terse."}, {Role::user, user}};
    r.temperature = temperature;
    r.stop = std::vector<std::string>{"Observation:"};
    return r;
}

std::shared_ptr<LlmBackend> echo() {
    return std::make_shared<ScriptedBackend>(
        [](const CompletionRequest& r) { return "echo: " + r.messages.back().content; });
}

// Local stand-in for a chat-completions endpoint.
struct FakeEndpoint {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};
    int fail_first = 0;

    FakeEndpoint() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            if (hits++ < fail_first) {
                res.status = 503;
                return;
            }
            auto body = Json::parse(req.body);
            Json reply = {{"choices", Json::array({{{"message", {{"content", "ok " + body.at("model").get<std::string>()}}}}})}};
            res.set_content(reply.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeEndpoint() {
        server.stop();
        thread.join();
    }
    RemoteConfig config() const {
        RemoteConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
        c.model = "m1";
        c.timeout_seconds = 5;
        c.retries = 2;
        c.backoff = std::chrono::milliseconds(1);
        return c;
    }
};

}  // namespace

TEST_SUITE("llm_gateway") {

TEST_CASE("request keys ignore trailing whitespace but nothing else") {
    auto a = request("How much rain?");
    auto b = request("How much rain?  \n");
    CHECK(request_key(a) == request_key(b));
    CHECK(request_key(a) != request_key(request("How much rain")));
    CHECK(request_key(a) != request_key(request("How much rain?", 0.5)));
    auto c = a;
    c.stop.reset();
    CHECK(request_key(a) != request_key(c));
    CHECK(request_key(a).size() == 64);
    // Frozen: the key is part of the cassette file format.
    CompletionRequest fixed;
    fixed.messages = {{Role::user, "hi"}};
    CHECK(canonical_json(canonical_request(fixed)) ==
          R"({"max_tokens":512,"messages":[{"content":"hi","role":"user"}],"temperature":0})");
    CHECK(request_key(fixed) == sha256_hex(canonical_json(canonical_request(fixed))));
}

TEST_CASE("sha256 of known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("record then strict replay") {
    auto rec = std::make_shared<Cassette>(CassetteMode::record);
    Gateway recorder(std::make_shared<CassetteBackend>(rec, echo()));
    CHECK(recorder.complete(request("a")) == "echo: a");
    CHECK(recorder.complete(request("b")) == "echo: b");
    CHECK(rec->size() == 2);

    auto text = rec->serialize();
    auto replay = std::make_shared<Cassette>(Cassette::parse(text, CassetteMode::replay_strict));
    Gateway player(std::make_shared<CassetteBackend>(replay));
    CHECK(player.complete(request("b")) == "echo: b");
    CHECK_THROWS_AS(player.complete(request("c")), CassetteMissError);
    CHECK(replay->serialize() == text);
}

TEST_CASE("fallthrough serves misses from the inner backend") {
    auto c = std::make_shared<Cassette>(CassetteMode::replay_fallthrough);
    c->put(request_key(request("a")), {"digest", "stored"});
    Gateway g(std::make_shared<CassetteBackend>(c, echo()));
    CHECK(g.complete(request("a")) == "stored");
    CHECK(g.complete(request("z")) == "echo: z");
    CHECK(c->size() == 1);
}

TEST_CASE("cassette mode errors") {
    Cassette strict(CassetteMode::replay_strict);
    CHECK_THROWS_AS(strict.record(request("a"), "x"), CassetteModeError);
    CHECK_THROWS_AS(CassetteBackend(std::make_shared<Cassette>(CassetteMode::record)), ConfigError);
    CHECK_THROWS_AS(Cassette::parse("{not json}\n", CassetteMode::replay_strict), ParseError);
}

TEST_CASE("cassette files round trip") {
    auto dir = testing::scratch_dir("cassette");
    Cassette c(CassetteMode::record);
    c.record(request("a"), "one");
    c.record(request("b"), "two\nlines");
    c.save((dir / "x.jsonl").string());
    auto back = Cassette::load((dir / "x.jsonl").string(), CassetteMode::replay_strict);
    CHECK(back.entries() == c.entries());
    CHECK(*back.lookup(request_key(request("b"))) == "two\nlines");
}

TEST_CASE("gateway validates and applies stop sequences") {
    Gateway g(std::make_shared<ScriptedBackend>(
        [](const CompletionRequest&) { return std::string("Action: x\nObservation: made up\nmore"); }));
    CHECK(g.complete(request("q")) == "Action: x\n");
    CompletionRequest empty;
    CHECK_THROWS_AS(g.complete(empty), ConfigError);
    CHECK_THROWS_AS(g.complete(request("   ")), ConfigError);
    CHECK_THROWS_AS(g.complete(request("q", -1)), ConfigError);
    CHECK(apply_stop("abcabc", std::vector<std::string>{"c", "b"}) == "a");
    CHECK(apply_stop("abc", std::nullopt) == "abc");
}

TEST_CASE("remote backend retries server errors") {
    FakeEndpoint ep;
    ep.fail_first = 2;
    RemoteBackend remote(ep.config());
    set_network_forbidden(false);
    CHECK(remote.complete(request("q")) == "ok m1");
    CHECK(ep.hits == 3);
}

TEST_CASE("remote backend gives up after its retries") {
    FakeEndpoint ep;
    ep.fail_first = 100;
    RemoteBackend remote(ep.config());
    try {
        remote.complete(request("q"));
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.status() == 503);
    }
    CHECK(ep.hits == 3);
}

TEST_CASE("offline mode forbids remote calls") {
    const auto before = remote_attempt_count();
    set_network_forbidden(true);
    RemoteBackend remote(RemoteConfig{});
    CHECK_THROWS_AS(remote.complete(request("q")), NetworkForbiddenError);
    set_network_forbidden(false);
    CHECK(remote_attempt_count() == before);
}

}  // TEST_SUITE
