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
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "kg2data/agent.hpp"
#include "kg2data/api_catalog.hpp"
#include "kg2data/evaluation.hpp"
#include "kg2data/fixtures.hpp"
#include "kg2data/kg/leiden.hpp"
#include "kg2data/kg/retrieval.hpp"
#include "kg2data/memory.hpp"
#include "kg2data/service.hpp"
#include "kg2data/tools.hpp"

namespace fs = std::filesystem;
using namespace kg2data;

namespace {

struct Paths {
    std::string catalog = "data/catalog.json";
    std::string corpus = "data/corpus";
    std::string graph = "data/graph.jsonl";
    std::string aliases = "data/aliases.tsv";
    std::string synonyms = "data/synonyms.tsv";
    std::string cases = "data/cases.jsonl";
    std::string lexicon = "data/fixtures/lexicon.tsv";
};

struct LlmOptions {
    std::string cassette;
    std::string mode = "replay";
};

void add_llm_options(CLI::App* cmd, LlmOptions& o) {
    cmd->add_option("--cassette", o.cassette, "Cassette file or directory of cassettes");
    cmd->add_option("--mode", o.mode, "replay | replay-or-live | record | live")
        ->check(CLI::IsMember({"replay", "replay-or-live", "record", "live"}));
}

// Every *.jsonl under `path` (or the file itself), merged.
std::shared_ptr<Cassette> load_cassettes(const std::string& path, CassetteMode mode) {
    auto merged = std::make_shared<Cassette>(mode);
    if (path.empty() || !fs::exists(path)) return merged;
    if (fs::is_regular_file(path)) {
        merged->merge(Cassette::load(path, mode));
        return merged;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) merged->merge(Cassette::load(f.string(), mode));
    return merged;
}

struct LlmHandle {
    std::shared_ptr<Gateway> gateway;
    std::shared_ptr<Cassette> cassette;  // set when recording
    std::string save_path;

    void finish() const {
        if (cassette && !save_path.empty()) {
            if (fs::path(save_path).has_parent_path()) fs::create_directories(fs::path(save_path).parent_path());
            cassette->save(save_path);
        }
    }
};

LlmHandle make_llm(const LlmOptions& o) {
    LlmHandle h;
    if (o.mode == "live") {
        h.gateway = std::make_shared<Gateway>(std::make_shared<RemoteBackend>(remote_config_from_env()));
        return h;
    }
    if (o.cassette.empty()) throw ConfigError("--cassette is required unless --mode live");
    if (o.mode == "record") {
        if (fs::is_directory(o.cassette)) throw ConfigError("--mode record needs a cassette file path");
        h.cassette = std::make_shared<Cassette>(CassetteMode::record);
        h.save_path = o.cassette;
        h.gateway = std::make_shared<Gateway>(std::make_shared<CassetteBackend>(
            h.cassette, std::make_shared<RemoteBackend>(remote_config_from_env())));
        return h;
    }
    if (!fs::exists(o.cassette)) throw ConfigError("cassette not found: " + o.cassette);
    if (o.mode == "replay-or-live") {
        auto c = load_cassettes(o.cassette, CassetteMode::replay_fallthrough);
        h.gateway = std::make_shared<Gateway>(
            std::make_shared<CassetteBackend>(c, std::make_shared<RemoteBackend>(remote_config_from_env())));
        return h;
    }
    h.gateway = std::make_shared<Gateway>(
        std::make_shared<CassetteBackend>(load_cassettes(o.cassette, CassetteMode::replay_strict)));
    return h;
}

struct World {
    std::shared_ptr<const Catalog> catalog;
    std::shared_ptr<const tools::ToolRegistry> registry;
    std::shared_ptr<const memory::MemorySet> memories;
};

World load_world(const Paths& p, bool with_memories) {
    World w;
    w.catalog = std::make_shared<const Catalog>(load_catalog(p.catalog));
    w.registry = std::make_shared<const tools::ToolRegistry>(tools::ToolRegistry::from_catalog(w.catalog));
    if (with_memories) {
        auto docs = kg::load_corpus(p.corpus);
        auto graph = std::make_shared<const kg::KnowledgeGraph>(kg::load_snapshot(p.graph));
        w.memories = std::make_shared<const memory::MemorySet>(memory::MemorySet::build(docs, graph));
    }
    return w;
}

void add_world_paths(CLI::App* cmd, Paths& p, bool memories) {
    cmd->add_option("--catalog", p.catalog, "API catalog JSON");
    if (memories) {
        cmd->add_option("--corpus", p.corpus, "Directory of *.txt documents");
        cmd->add_option("--graph", p.graph, "Knowledge graph snapshot");
    }
}

std::vector<eval::System> parse_systems(const std::string& list) {
    std::vector<eval::System> out;
    for (const auto& s : split(list, ',')) {
        if (!trim(s).empty()) out.push_back(eval::system_from_string(trim(s)));
    }
    if (out.empty()) throw ConfigError("--systems needs at least one of kg, vector, null");
    return out;
}

std::atomic<service::SessionService*> g_service{nullptr};
std::atomic<ApiServer*> g_api_server{nullptr};

void on_signal(int) {
    if (auto* s = g_service.load()) s->stop();
    if (auto* s = g_api_server.load()) s->stop();
}

double steady_ms() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// Builds the knowledge graph, vector memory inputs, pair and gold cassettes
// from the authoring stand-ins.
void record_fixtures(const Paths& p, const std::string& data_dir, std::uint64_t seed) {
    auto catalog = std::make_shared<const Catalog>(load_catalog(p.catalog));
    auto registry = tools::ToolRegistry::from_catalog(catalog);
    auto cases = eval::load_cases(p.cases, registry);
    eval::check_pair_coverage(cases, registry);
    auto tables = kg::CurationTables::load(p.aliases, p.synonyms);
    auto docs = kg::load_corpus(p.corpus);
    const fs::path cassettes = fs::path(data_dir) / "cassettes";

    auto build_cassette = std::make_shared<Cassette>(CassetteMode::record);
    Gateway build_llm(std::make_shared<CassetteBackend>(
        build_cassette, fixtures::graph_author(fixtures::load_lexicon(p.lexicon), tables)));
    auto graph = kg::build_graph(docs, build_llm, tables, kg::PipelineOptions{});
    fs::create_directories(cassettes);
    build_cassette->save((cassettes / "kg_build.jsonl").string());
    kg::save_snapshot(graph, p.graph);
    std::cout << "graph: " << graph.entities().size() << " entities, " << graph.triples().size() << " triples\n";

    auto pair_cassette = std::make_shared<Cassette>(CassetteMode::record);
    Gateway pair_llm(std::make_shared<CassetteBackend>(pair_cassette, fixtures::pair_author(cases)));
    auto generated = eval::generate_pairs(*catalog, pair_llm, 2);
    if (eval::serialize_cases(generated) != eval::serialize_cases(cases)) {
        throw Error("pair generation does not reproduce " + p.cases);
    }
    pair_cassette->save((cassettes / "pairs.jsonl").string());

    auto memories = memory::MemorySet::build(docs, std::make_shared<const kg::KnowledgeGraph>(std::move(graph)));
    agent::AgentConfig config;
    for (auto kind : {memory::MemoryKind::kg, memory::MemoryKind::vector, memory::MemoryKind::null}) {
        const auto dir = cassettes / "gold" / std::string(memory::to_string(kind));
        fs::remove_all(dir);
        fs::create_directories(dir);
        for (const auto& c : cases) {
            auto cassette = std::make_shared<Cassette>(CassetteMode::record);
            Gateway llm(std::make_shared<CassetteBackend>(cassette, fixtures::gold_agent(cases)));
            tools::InProcessApiClient client(catalog, seed);
            auto trace = agent::run_episode(c.id, c.instruction, *memories.get(kind), registry, llm, client, config);
            if (trace.status != agent::TraceStatus::completed) {
                throw Error("gold episode for " + c.id + " ended with " + std::string(agent::to_string(trace.status)) +
                            ": " + trace.error);
            }
            cassette->save((dir / (c.id + ".jsonl")).string());
        }
    }
    std::cout << "recorded " << cases.size() << " gold episodes per memory kind\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KG2data: knowledge-graph grounded API calling for meteorological data"};
    app.set_config("--config", "", "INI/TOML file with option defaults");
    app.require_subcommand(1);
    Paths paths;

    // serve-apis
    auto* serve_apis = app.add_subcommand("serve-apis", "Serve the virtual API catalog over HTTP");
    std::string host = "127.0.0.1";
    int port = 8080;
    std::uint64_t seed = 7;
    add_world_paths(serve_apis, paths, false);
    serve_apis->add_option("--host", host);
    serve_apis->add_option("--port", port);
    serve_apis->add_option("--seed", seed, "Default seed when a request carries no X-Seed header");

    // call-api
    auto* call_api = app.add_subcommand("call-api", "Call one virtual API in process and print the response");
    std::string api_name, params_text = "{}";
    add_world_paths(call_api, paths, false);
    call_api->add_option("--name", api_name)->required();
    call_api->add_option("--params", params_text, "JSON object");
    call_api->add_option("--seed", seed);

    // build-kg
    auto* build_kg = app.add_subcommand("build-kg", "Build the knowledge graph snapshot from a corpus");
    std::string corpus_dir, out_path;
    LlmOptions build_llm;
    kg::PipelineOptions pipeline;
    build_kg->add_option("--corpus", corpus_dir, "Directory of *.txt documents")->required();
    build_kg->add_option("--out", out_path, "Snapshot path")->required();
    build_kg->add_option("--aliases", paths.aliases);
    build_kg->add_option("--synonyms", paths.synonyms);
    build_kg->add_option("--target-tokens", pipeline.target_tokens);
    build_kg->add_option("--overlap", pipeline.overlap);
    build_kg->add_option("--resolution", pipeline.resolution);
    build_kg->add_option("--seed", pipeline.seed);
    build_kg->add_option("--max-levels", pipeline.max_levels);
    add_llm_options(build_kg, build_llm);

    // gen-pairs
    auto* gen_pairs = app.add_subcommand("gen-pairs", "Generate instruction-answer pairs per API");
    int per_api = 2;
    std::string pairs_out;
    LlmOptions pairs_llm;
    add_world_paths(gen_pairs, paths, false);
    gen_pairs->add_option("--per-api", per_api);
    gen_pairs->add_option("--out", pairs_out, "Case file to write (stdout when omitted)");
    add_llm_options(gen_pairs, pairs_llm);

    // chat
    auto* chat = app.add_subcommand("chat", "Conversational loop: one episode per input line");
    std::string memory_kind = "kg";
    LlmOptions chat_llm;
    add_world_paths(chat, paths, true);
    chat->add_option("--memory", memory_kind)->check(CLI::IsMember({"kg", "vector", "null"}));
    chat->add_option("--seed", seed, "Seed for virtual API responses");
    add_llm_options(chat, chat_llm);

    // eval
    auto* evalc = app.add_subcommand("eval", "Run the ablation over recorded episodes and report metrics");
    std::string systems = "kg,vector,null", cassette_dir = "data/cassettes/gold", report_out, json_out, traces_out;
    bool serial = false, extended = false;
    add_world_paths(evalc, paths, true);
    evalc->add_option("--cases", paths.cases);
    evalc->add_option("--systems", systems, "Comma-separated memory kinds: kg,vector,null");
    evalc->add_option("--cassettes", cassette_dir, "Directory with <kind>/<case>.jsonl cassettes");
    evalc->add_option("--seed", seed);
    evalc->add_option("--out", report_out, "Write the text table here");
    evalc->add_option("--json", json_out, "Write the report JSON here");
    evalc->add_option("--traces", traces_out, "Write trace logs here");
    evalc->add_flag("--serial", serial, "Run episodes on one thread");
    evalc->add_flag("--extended", extended, "Add the answer-failure column");

    // report
    auto* report = app.add_subcommand("report", "Render a report JSON as a table");
    std::string report_json_path;
    report->add_option("--json", report_json_path)->required();
    report->add_flag("--extended", extended);

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP session service for the chat client");
    LlmOptions serve_llm;
    std::string trace_dir, report_path;
    add_world_paths(serve, paths, true);
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--seed", seed);
    serve->add_option("--traces", trace_dir);
    serve->add_option("--report", report_path);
    add_llm_options(serve, serve_llm);

    // record-fixtures
    auto* record = app.add_subcommand("record-fixtures", "Re-record the shipped cassettes and graph snapshot");
    std::string data_dir = "data";
    record->add_option("--data", data_dir);
    record->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cerr, std::cerr);
        return 1;
    }

    try {
        if (*serve_apis) {
            auto catalog = std::make_shared<const Catalog>(load_catalog(paths.catalog));
            ApiServer server(catalog, seed);
            g_api_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving " << catalog->size() << " APIs on " << host << ":" << port << "\n";
            server.listen(host, port);
            g_api_server = nullptr;
        } else if (*call_api) {
            auto catalog = load_catalog(paths.catalog);
            auto params = Json::parse(params_text, nullptr, false);
            if (params.is_discarded()) throw ConfigError("--params is not valid JSON");
            std::cout << serialize_response(handle_api_request(catalog, api_name, params, seed)) << "\n";
        } else if (*build_kg) {
            auto llm = make_llm(build_llm);
            auto docs = kg::load_corpus(corpus_dir);
            auto tables = kg::CurationTables::load(paths.aliases, paths.synonyms);
            auto graph = kg::build_graph(docs, *llm.gateway, tables, pipeline);
            llm.finish();
            kg::save_snapshot(graph, out_path);
            std::cout << "wrote " << out_path << ": " << graph.entities().size() << " entities, "
                      << graph.triples().size() << " triples\n";
        } else if (*gen_pairs) {
            auto catalog = load_catalog(paths.catalog);
            auto llm = make_llm(pairs_llm);
            auto cases = eval::generate_pairs(catalog, *llm.gateway, per_api);
            llm.finish();
            const auto text = eval::serialize_cases(cases);
            if (pairs_out.empty()) std::cout << text;
            else write_file(pairs_out, text);
        } else if (*chat) {
            auto world = load_world(paths, true);
            auto llm = make_llm(chat_llm);
            const auto kind = memory::memory_kind_from_string(memory_kind);
            agent::AgentConfig config;
            tools::InProcessApiClient client(world.catalog, seed);
            agent::EpisodeHooks hooks;
            hooks.on_step = [](const agent::Trace& t, std::size_t i) {
                std::cout << agent::serialize_steps({t.steps[i]}) << std::flush;
            };
            std::string line;
            int turn = 0;
            while (std::getline(std::cin, line)) {
                if (trim(line).empty()) continue;
                auto trace = agent::run_episode("chat-" + std::to_string(++turn), trim(line),
                                                *world.memories->get(kind), *world.registry, *llm.gateway, client,
                                                config, hooks);
                std::cout << "[" << agent::to_string(trace.status) << "]";
                if (!trace.error.empty()) std::cout << " " << trace.error;
                std::cout << "\n" << std::flush;
            }
            llm.finish();
        } else if (*evalc) {
            auto world = load_world(paths, true);
            auto cases = eval::load_cases(paths.cases, *world.registry);
            eval::AblationOptions options;
            options.cassette_dir = cassette_dir;
            options.seed = seed;
            options.exec = serial ? kernels::Exec::serial : kernels::Exec::parallel;
            auto runs = eval::run_ablation(cases, parse_systems(systems), *world.memories, *world.registry, options);
            std::vector<eval::EvalReport> reports;
            for (const auto& r : runs) reports.push_back(r.report);
            auto marks = eval::compare_to_kg(reports);
            const auto table = eval::render_report(reports, marks, extended);
            std::cout << table;
            if (!report_out.empty()) write_file(report_out, table);
            if (!json_out.empty()) write_file(json_out, eval::report_json(reports, marks).dump(2) + "\n");
            if (!traces_out.empty()) {
                fs::create_directories(traces_out);
                for (const auto& r : runs) {
                    std::string all;
                    for (const auto& t : r.traces) all += agent::trace_to_jsonl(t, options.agent);
                    write_file((fs::path(traces_out) / (std::string(eval::to_string(r.report.system)) + ".jsonl")).string(),
                               all);
                }
            }
        } else if (*report) {
            auto [reports, marks] = eval::reports_from_json(Json::parse(read_file(report_json_path)));
            std::cout << eval::render_report(reports, marks, extended);
        } else if (*serve) {
            auto world = load_world(paths, true);
            auto llm = make_llm(serve_llm);
            service::ServiceConfig config;
            config.memories = world.memories;
            config.registry = world.registry;
            config.gateway = llm.gateway;
            config.api_seed = seed;
            config.trace_dir = trace_dir;
            config.report_path = report_path;
            config.clock = steady_ms;
            service::SessionService svc(config);
            g_service = &svc;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "session service on " << host << ":" << port << "\n";
            svc.listen(host, port);
            g_service = nullptr;
            llm.finish();
        } else if (*record) {
            Paths p = paths;
            auto in = [&](const std::string& rel) { return (fs::path(data_dir) / rel).string(); };
            p.catalog = in("catalog.json");
            p.corpus = in("corpus");
            p.graph = in("graph.jsonl");
            p.aliases = in("aliases.tsv");
            p.synonyms = in("synonyms.tsv");
            p.cases = in("cases.jsonl");
            p.lexicon = in("fixtures/lexicon.tsv");
            record_fixtures(p, data_dir, seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
