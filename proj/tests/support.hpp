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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "kg2data/api_catalog.hpp"
#include "kg2data/evaluation.hpp"
#include "kg2data/kg/chunking.hpp"
#include "kg2data/kg/graph.hpp"
#include "kg2data/memory.hpp"
#include "kg2data/tools.hpp"

namespace testing {

inline std::string source_path(const std::string& rel) { return std::string(KG2DATA_SOURCE_DIR) + "/" + rel; }
inline std::string data_path(const std::string& rel) { return source_path("data/" + rel); }

// The shipped dataset, loaded once per process.
struct Shipped {
    std::shared_ptr<const kg2data::Catalog> catalog;
    std::shared_ptr<const kg2data::tools::ToolRegistry> registry;
    std::vector<kg2data::kg::Document> docs;
    std::shared_ptr<const kg2data::kg::KnowledgeGraph> graph;
    std::shared_ptr<const kg2data::memory::MemorySet> memories;
    std::vector<kg2data::eval::InstructionCase> cases;
};

inline const Shipped& shipped() {
    static const Shipped s = [] {
        using namespace kg2data;
        Shipped w;
        w.catalog = std::make_shared<const Catalog>(load_catalog(data_path("catalog.json")));
        w.registry = std::make_shared<const tools::ToolRegistry>(tools::ToolRegistry::from_catalog(w.catalog));
        w.docs = kg::load_corpus(data_path("corpus"));
        w.graph = std::make_shared<const kg::KnowledgeGraph>(kg::load_snapshot(data_path("graph.jsonl")));
        w.memories = std::make_shared<const memory::MemorySet>(memory::MemorySet::build(w.docs, w.graph));
        w.cases = eval::load_cases(data_path("cases.jsonl"), *w.registry);
        return w;
    }();
    return s;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("kg2data_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

// Random params that satisfy the spec. Optional params are included half the time.
inline kg2data::Json random_valid_params(const kg2data::ApiSpec& spec, kg2data::SplitMix64& rng) {
    using namespace kg2data;
    Json params = Json::object();
    for (const auto& p : spec.params) {
        if (!p.required && rng.range(0, 1) == 0) continue;
        switch (p.kind) {
            case ValueKind::string:
                params[p.name] = "S" + std::to_string(rng.range(1, 99999));
                break;
            case ValueKind::date: {
                char buf[16];
                std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", static_cast<int>(rng.range(1990, 2030)),
                              static_cast<int>(rng.range(1, 12)), static_cast<int>(rng.range(1, 28)));
                params[p.name] = buf;
                break;
            }
            case ValueKind::enumeration:
                params[p.name] = (*p.allowed_values)[static_cast<std::size_t>(
                    rng.range(0, static_cast<std::int64_t>(p.allowed_values->size()) - 1))];
                break;
            case ValueKind::integer: {
                auto r = p.range.value_or(NumericRange{0, 100});
                params[p.name] = rng.range(static_cast<std::int64_t>(r.min), static_cast<std::int64_t>(r.max));
                break;
            }
            case ValueKind::number: {
                auto r = p.range.value_or(NumericRange{0, 100});
                params[p.name] = r.min + rng.uniform() * (r.max - r.min);
                break;
            }
            case ValueKind::boolean:
                params[p.name] = rng.range(0, 1) == 1;
                break;
            case ValueKind::series:
                break;
        }
    }
    return params;
}

}  // namespace testing
