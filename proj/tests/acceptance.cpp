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

// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "kg2data/agent.hpp"
#include "kg2data/evaluation.hpp"
#include "kg2data/kg/leiden.hpp"
#include "support.hpp"

using namespace kg2data;
using namespace kg2data::eval;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr double kTableSeconds = 1.0;
constexpr double kGoldReplaySeconds = 30.0;
constexpr double kLeidenLargeSeconds = 10.0;
constexpr double kFisherRelTol = 1e-9;
constexpr double kMonotoneSlack = 1e-12;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Criterion {
    std::string name;
    std::function<std::string(bool&)> run;  // returns detail text, clears ok on failure
};

std::string run_cli(const std::string& args, int& code) {
    const std::string cmd = "cd '" + std::string(KG2DATA_SOURCE_DIR) + "' && '" + KG2DATA_CLI + "' " + args + " 2>&1";
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        code = -1;
        return out;
    }
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
    const int status = pclose(pipe);
    code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

using Edges = std::vector<std::tuple<std::size_t, std::size_t, double>>;

double modularity_oracle(std::size_t n, const Edges& edges, const std::vector<std::size_t>& c) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (auto [u, v, w] : edges) {
        if (u == v) {
            a[u][u] += 2 * w;
        } else {
            a[u][v] += w;
            a[v][u] += w;
        }
    }
    std::vector<double> k(n, 0.0);
    double two_m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
        two_m += k[i];
    }
    double q = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (c[i] == c[j]) q += a[i][j] - k[i] * k[j] / two_m;
        }
    }
    return q / two_m;
}

// Restricted growth strings enumerate every partition once.
std::vector<std::size_t> exhaustive_best(std::size_t n, const Edges& edges) {
    std::vector<std::size_t> rgs(n, 0), best;
    double best_q = -1e9;
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t used) {
        if (i == n) {
            const double q = modularity_oracle(n, edges, rgs);
            if (q > best_q + 1e-12) {
                best_q = q;
                best = rgs;
            }
            return;
        }
        for (std::size_t c = 0; c <= used && c < n; ++c) {
            rgs[i] = c;
            rec(i + 1, std::max(used, c + 1));
        }
    };
    rec(1, 1);
    return best;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) return false;
    std::map<std::size_t, std::size_t> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
        if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
    }
    return true;
}

Edges random_edges(SplitMix64& rng, std::size_t n, std::size_t m) {
    Edges e;
    for (std::size_t i = 0; i < m; ++i) {
        auto u = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
        auto v = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(n) - 1));
        if (u != v) e.emplace_back(u, v, 1.0 + static_cast<double>(rng.range(0, 3)));
    }
    return e;
}

std::string table_arithmetic(bool& ok) {
    const auto t0 = Clock::now();
    auto kg = compute_metrics(System::kg2data, MetricCounts{0, 1, 2, 0, 62, 0}, 70);
    const auto table = render_report({kg}, {});
    const std::string expected = "KG2data\t0.00%\t1.43%\t2.86%\t0.00%\t88.57%";
    const double secs = seconds_since(t0);
    ok = table.find("\n" + expected + "\n") != std::string::npos && secs < kTableSeconds;
    std::ostringstream d;
    d << "row \"" << expected << "\" " << (ok ? "found" : "missing") << ", " << secs << " s";
    return d.str();
}

std::string gold_replay(bool& ok) {
    const auto& s = testing::shipped();
    AblationOptions opt;
    opt.cassette_dir = testing::data_path("cassettes/gold");
    const auto t0 = Clock::now();
    auto a = run_ablation(s.cases, {System::kg2data}, *s.memories, *s.registry, opt)[0].report;
    auto b = run_ablation(s.cases, {System::kg2data}, *s.memories, *s.registry, opt)[0].report;
    const double secs = seconds_since(t0) / 2;
    bool zero = true;
    for (int m : {FRIR, FRNR, FRPR, FRHR}) zero = zero && a.percent(m) == "0.00%";
    const bool same = report_json({a}, {}).dump() == report_json({b}, {}).dump();
    ok = a.n == 70 && a.percent(ACAR) == "100.00%" && zero && same && secs < kGoldReplaySeconds;
    std::ostringstream d;
    d << "ACAR " << a.percent(ACAR) << ", failures " << a.percent(FRIR) << "/" << a.percent(FRNR) << "/"
      << a.percent(FRPR) << "/" << a.percent(FRHR) << ", identical=" << same << ", " << secs << " s per run";
    return d.str();
}

std::string fault_injection(bool& ok) {
    const auto& s = testing::shipped();
    std::ostringstream d;
    ok = true;
    const std::pair<FaultKind, int> kinds[] = {
        {FaultKind::fictitious_tool, FRHR}, {FaultKind::wrong_tool, FRNR}, {FaultKind::corrupt_input, FRPR}};
    for (auto [kind, metric] : kinds) {
        for (int k : {1, 3, 7}) {
            auto dir = testing::scratch_dir("acceptance_fault");
            fs::copy(testing::data_path("cassettes/gold"), dir, fs::copy_options::recursive);
            for (int i = 0; i < k; ++i) {
                const auto& c = s.cases[static_cast<std::size_t>(i) * 9];
                const auto path = cassette_path(dir.string(), System::kg2data, c.id);
                auto cassette = Cassette::load(path, CassetteMode::replay_strict);
                const auto key = request_key(agent::first_turn_request({}, c.instruction, *s.memories->kg, *s.registry));
                if (!inject_fault(cassette, key, kind, c, *s.registry)) ok = false;
                cassette.save(path);
            }
            AblationOptions opt;
            opt.cassette_dir = dir.string();
            auto r = run_ablation(s.cases, {System::kg2data}, *s.memories, *s.registry, opt)[0].report;
            bool exact = r.rate(metric) == make_rational(k, 70);
            for (int other : {FRIR, FRNR, FRPR, FRHR}) {
                if (other != metric) exact = exact && r.counts.count(other) == 0;
            }
            exact = exact && r.rate(ACAR) == make_rational(70 - k, 70);
            ok = ok && exact;
            d << to_string(kind) << " k=" << k << ": " << kMetricNames[static_cast<std::size_t>(metric)] << " "
              << r.rate(metric).num << "/" << r.rate(metric).den << (exact ? "" : " MISMATCH") << "; ";
        }
    }
    return d.str();
}

std::string leiden_oracle(bool& ok) {
    using namespace kg2data::kg;
    std::ostringstream d;
    Edges cliques;
    for (std::size_t base : {0u, 5u}) {
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = i + 1; j < 5; ++j) cliques.emplace_back(base + i, base + j, 1.0);
        }
    }
    cliques.emplace_back(4, 5, 1.0);
    WeightedGraph g(10, cliques);
    auto r = leiden(g, LeidenOptions{});
    const std::vector<std::size_t> halves = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    const bool two = same_partition(r.membership, halves) && same_partition(exhaustive_best(10, cliques), halves);
    d << "two cliques " << (two ? "ok" : "WRONG");

    SplitMix64 rng(2024);
    bool monotone = true, connected = communities_connected(g, r.membership);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(rng.range(2, 200));
        auto edges = random_edges(rng, n, n * static_cast<std::size_t>(rng.range(1, 4)));
        WeightedGraph rg(n, edges);
        if (rg.total_weight() == 0) continue;
        LeidenOptions opt;
        opt.seed = static_cast<std::uint64_t>(trial);
        auto res = leiden(rg, opt);
        for (std::size_t i = 1; i < res.pass_qualities.size(); ++i) {
            if (res.pass_qualities[i] < res.pass_qualities[i - 1] - kMonotoneSlack) monotone = false;
        }
        connected = connected && communities_connected(rg, res.membership);
    }
    d << ", monotone " << (monotone ? "ok" : "VIOLATED") << ", connected " << (connected ? "ok" : "VIOLATED");

    SplitMix64 big_rng(99);
    Edges big;
    while (big.size() < 50000) {
        auto u = static_cast<std::size_t>(big_rng.range(0, 9999));
        auto v = static_cast<std::size_t>(big_rng.range(0, 9999));
        if (u != v) big.emplace_back(u, v, 1.0);
    }
    WeightedGraph bg(10000, big);
    const auto t0 = Clock::now();
    auto br = leiden(bg, LeidenOptions{});
    const double secs = seconds_since(t0);
    const bool fast = secs < kLeidenLargeSeconds && communities_connected(bg, br.membership);
    d << ", 10k/50k in " << secs << " s (" << br.community_count << " communities)";
    ok = two && monotone && connected && fast;
    return d.str();
}

std::string chunking(bool& ok) {
    SplitMix64 rng(77);
    static const char* words[] = {"rain", "gauge", "wind", "vane", "pressure", "fog", "dew"};
    static const char* gaps[] = {" ", "  ", "\n", "\t"};
    int good = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto target = static_cast<std::size_t>(rng.range(1, 60));
        const auto overlap = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(target) - 1));
        const auto total = static_cast<std::size_t>(rng.range(0, 400));
        std::string text;
        for (std::size_t i = 0; i < total; ++i) {
            if (i) text += gaps[rng.range(0, 3)];
            text += words[rng.range(0, 6)];
        }
        auto chunks = kg::chunk_corpus({{"d", text}}, target, overlap);
        const std::size_t expected =
            total <= target ? 1 : (total - overlap + (target - overlap) - 1) / (target - overlap);
        const auto tokens = whitespace_tokens(text);
        std::vector<std::string> rebuilt;
        std::size_t next = 0;
        for (const auto& c : chunks) {
            auto ct = whitespace_tokens(c.text);
            for (auto i = next; i < c.span_end; ++i) rebuilt.push_back(ct[i - c.span_start]);
            next = std::max(next, c.span_end);
        }
        if (chunks.size() == expected && rebuilt == tokens) ++good;
    }
    ok = good == 100;
    return std::to_string(good) + "/100 triples";
}

std::string random_words(SplitMix64& rng) {
    static const char* words[] = {"rain", "the", "station", "54511", "is", "wet", "12.5", "mm"};
    std::string s;
    const auto n = rng.range(1, 6);
    for (std::int64_t i = 0; i < n; ++i) {
        if (i) s += " ";
        s += words[rng.range(0, 7)];
    }
    return s;
}

std::string parser(bool& ok) {
    using namespace kg2data::agent;
    static const std::vector<std::string> pieces = {"Thought:", "Action:", "Action Input:", "Observation:",
                                                    "Final Answer:", "\n", "{", "}", "\"", " ", "\xff",
                                                    std::string(1, '\0'), "Thought 2:", "\r\n"};
    SplitMix64 rng(0xACCE);
    int parsed = 0, rejected = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string s;
        const auto n = rng.range(0, 40);
        for (std::int64_t j = 0; j < n; ++j) {
            if (rng.range(0, 2) == 0) s += static_cast<char>(rng.range(0, 255));
            else s += pieces[static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(pieces.size()) - 1))];
        }
        try {
            parse_model_output(s);
            ++parsed;
        } catch (const ModelOutputError&) {
            ++rejected;
        }
    }
    int round_trips = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<TraceStep> steps;
        int thought = 0;
        const auto rounds = rng.range(0, 4);
        for (std::int64_t r = 0; r < rounds; ++r) {
            steps.emplace_back(Thought{++thought, random_words(rng)});
            steps.emplace_back(Action{"get_" + std::to_string(rng.range(0, 99))});
            steps.emplace_back(make_action_input(Json{{"station", std::to_string(rng.range(1, 99999))}}.dump()));
            steps.emplace_back(Observation{Json{{"value", rng.range(0, 100)}}.dump()});
        }
        if (rng.range(0, 1)) steps.emplace_back(Thought{++thought, random_words(rng)});
        if (rng.range(0, 1)) steps.emplace_back(FinalAnswer{random_words(rng)});
        if (grammar_ok(steps) && parse_steps(serialize_steps(steps)) == steps) ++round_trips;
    }
    ok = parsed + rejected == 10000 && round_trips == 1000;
    return "fuzz " + std::to_string(parsed) + " parsed + " + std::to_string(rejected) + " rejected, round trip " +
           std::to_string(round_trips) + "/1000";
}

std::string directional(bool& ok) {
    const auto& s = testing::shipped();
    const agent::AgentConfig config;
    int total = 0, kg_hits = 0, vec_hits = 0;
    for (const auto& c : s.cases) {
        if (c.style != Style::implicit_) continue;
        ++total;
        const auto* api = s.catalog->find(s.registry->find(c.gold_tool)->bound_api);
        auto hit = [&](const memory::MemoryBackend& m) {
            const auto ctx = m.retrieve(c.instruction, config.context_budget).rendered;
            return ctx.find(api->name) != std::string::npos || ctx.find(api->description) != std::string::npos;
        };
        kg_hits += hit(*s.memories->kg);
        vec_hits += hit(*s.memories->vector);
    }
    ok = total > 0 && kg_hits >= vec_hits;
    return "implicit cases " + std::to_string(total) + ": kg " + format_percent(kg_hits, total) + ", vector " +
           format_percent(vec_hits, total);
}

std::string determinism(bool& ok) {
    auto dir = testing::scratch_dir("acceptance_det");
    int c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    run_cli("eval --seed 7 --json " + (dir / "a.json").string(), c1);
    run_cli("eval --seed 7 --json " + (dir / "b.json").string(), c2);
    const bool same_report = c1 == 0 && c2 == 0 && read_file((dir / "a.json").string()) == read_file((dir / "b.json").string());
    const std::string call =
        "call-api --name get_hourly_precipitation --params '{\"station\":\"54511\",\"date\":\"2024-07-01\"}' --seed 7";
    const auto r1 = run_cli(call, c3), r2 = run_cli(call, c4);
    const bool same_api = c3 == 0 && c4 == 0 && r1 == r2;
    ok = same_report && same_api;
    return std::string("report json ") + (same_report ? "identical" : "DIFFERENT") + ", api response " +
           (same_api ? "identical" : "DIFFERENT");
}

struct FisherRow {
    std::int64_t a, n1, b, n2;
    double p;
    const char* mark;
};

// Two-sided Fisher exact p-values from a reference statistics package.
const FisherRow kFisherTable[] = {
    {0, 70, 0, 70, 1.0, ""},
    {0, 70, 7, 70, 0.013349904018391121, "**"},
    {1, 70, 3, 70, 0.6195452397206324, ""},
    {0, 70, 1, 70, 1.0, ""},
    {1, 70, 12, 70, 0.002207897646205021, "**"},
    {2, 70, 9, 70, 0.05516223984034892, "*"},
    {0, 70, 5, 70, 0.0580528278107441, "*"},
    {0, 70, 4, 70, 0.11962400882213936, ""},
    {62, 70, 50, 70, 0.019033593360663965, "**"},
    {62, 70, 51, 70, 0.030902388614949493, "**"},
    {62, 70, 45, 70, 0.001220013472970154, "**"},
    {62, 70, 70, 70, 0.006323638745553691, "**"},
    {3, 70, 8, 70, 0.2076090916892666, ""},
    {0, 70, 3, 70, 0.24460431654676262, ""},
    {2, 70, 6, 70, 0.27463914385203325, ""},
    {10, 70, 20, 70, 0.06264428751460512, "*"},
    {35, 70, 45, 70, 0.12396268472616914, ""},
    {5, 70, 11, 70, 0.1828761359299373, ""},
    {0, 70, 70, 70, 2.1317196000437887e-41, "**"},
    {1, 140, 10, 140, 0.010228679124766363, "**"},
};

std::string fisher(bool& ok) {
    int good = 0;
    for (const auto& row : kFisherTable) {
        const double p = fisher_exact(row.a, row.n1 - row.a, row.b, row.n2 - row.b);
        if (std::abs(p - row.p) <= kFisherRelTol * row.p && mark_for(p) == row.mark) ++good;
    }
    ok = good == 20;
    return std::to_string(good) + "/20 rows";
}

}  // namespace

int main() {
    set_network_forbidden(true);
    const std::vector<Criterion> criteria = {
        {"table arithmetic", table_arithmetic},
        {"gold replay end-to-end", gold_replay},
        {"fault injection exactness", fault_injection},
        {"leiden oracle", leiden_oracle},
        {"chunking arithmetic", chunking},
        {"parser robustness", parser},
        {"directional ablation", directional},
        {"determinism", determinism},
        {"significance marking", fisher},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        bool ok = false;
        std::string detail;
        try {
            detail = c.run(ok);
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        std::cout << (ok ? "PASS" : "FAIL") << "  " << c.name << ": " << detail << std::endl;
        failed += ok ? 0 : 1;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
