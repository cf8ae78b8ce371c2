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
#include <span>
#include <vector>

#include "kg2data/kernels.hpp"
#include "kg2data/kg/graph.hpp"
#include "kg2data/kg/weighted_graph.hpp"

namespace kg2data::kg {

struct LeidenOptions {
    double resolution = 1.0;
    std::uint64_t seed = 0;
    /// Refinement randomness (theta). Smaller is greedier.
    double randomness = 0.01;
    /// Full Leiden iterations; stops early once the partition is stable.
    int max_iterations = 20;
    kernels::Exec exec = kernels::Exec::parallel;
};

struct LeidenResult {
    /// Community per node, relabelled 0..k-1 in order of first appearance.
    std::vector<std::size_t> membership;
    std::size_t community_count = 0;
    /// Modularity after every local-moving pass, in execution order.
    std::vector<double> pass_qualities;
    double quality = 0;
};

/// Local moving, refinement and aggregation until no node moves. Every
/// returned community induces a connected subgraph.
LeidenResult leiden(const WeightedGraph& graph, const LeidenOptions& options);

/// Aggregates `graph` by `membership`: one node per community, summed edges,
/// internal weight as self-loops.
WeightedGraph aggregate(const WeightedGraph& graph, std::span<const std::size_t> membership,
                        std::size_t community_count);

/// True if every community induces a connected subgraph (union-find).
bool communities_connected(const WeightedGraph& graph, std::span<const std::size_t> membership);

struct HierarchyOptions {
    LeidenOptions leiden;
    int max_levels = 3;
    /// Resolution multiplier applied per coarser level.
    double level_factor = 0.5;
};

/// Level 0 from Leiden at the base resolution; each further level runs Leiden
/// on the aggregated graph of the previous level at a lower resolution, so its
/// communities are unions of the previous level's. Stops when a level merges
/// nothing or a single community remains. Level l > 0 memberships are
/// indexed by level l-1 community ids, not by node.
std::vector<LeidenResult> leiden_levels(const WeightedGraph& graph, const HierarchyOptions& options);

/// Undirected weighted view of the knowledge graph: one node per entity in id
/// order, triple weights summed per entity pair.
WeightedGraph to_weighted_graph(const KnowledgeGraph& graph);

/// Community hierarchy keyed by entity id. A graph with one entity yields one
/// community. Throws on an empty graph.
CommunityHierarchy leiden_partition(const KnowledgeGraph& graph, double resolution, std::uint64_t seed,
                                    int max_levels);

}  // namespace kg2data::kg
