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

#include "kg2data/kg/leiden.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "kg2data/common.hpp"

namespace kg2data::kg {

namespace {

constexpr double kEps = 1e-12;

void shuffle(std::vector<std::size_t>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.range(0, static_cast<std::int64_t>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

/// Relabels to 0..k-1 in order of first appearance; returns k.
std::size_t relabel(std::vector<std::size_t>& membership) {
    std::vector<std::size_t> map(membership.size(), SIZE_MAX);
    std::size_t next = 0;
    for (auto& c : membership) {
        if (map[c] == SIZE_MAX) map[c] = next++;
        c = map[c];
    }
    return next;
}

// Queue-based local moving. Nodes whose neighbourhood changed are revisited.
void move_nodes_fast(const WeightedGraph& g, std::vector<std::size_t>& community, double resolution,
                     SplitMix64& rng) {
    const std::size_t n = g.size();
    const double two_m = 2 * g.total_weight();
    if (two_m <= 0) return;

    std::vector<double> community_degree(n, 0.0);
    std::vector<std::size_t> community_size(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        community_degree[community[v]] += g.degree(v);
        ++community_size[community[v]];
    }
    std::vector<std::size_t> empty;
    for (std::size_t c = n; c-- > 0;) {
        if (community_size[c] == 0) empty.push_back(c);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::deque<std::size_t> queue(order.begin(), order.end());
    std::vector<char> queued(n, 1);

    std::vector<double> link(n, 0.0);
    std::vector<std::size_t> touched;
    while (!queue.empty()) {
        std::size_t v = queue.front();
        queue.pop_front();
        queued[v] = 0;

        const std::size_t current = community[v];
        const double kv = g.degree(v);
        auto nbrs = g.neighbors(v);
        auto ws = g.weights(v);
        touched.clear();
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            std::size_t c = community[nbrs[k]];
            if (link[c] == 0.0) touched.push_back(c);
            link[c] += ws[k];
        }

        community_degree[current] -= kv;
        --community_size[current];
        if (community_size[current] == 0) empty.push_back(current);

        std::size_t best = current;
        double best_gain = link[current] - resolution * kv * community_degree[current] / two_m;
        for (std::size_t c : touched) {
            double gain = link[c] - resolution * kv * community_degree[c] / two_m;
            if (gain > best_gain + kEps) {
                best_gain = gain;
                best = c;
            }
        }
        if (best_gain < -kEps && !empty.empty()) {
            best = empty.back();  // an empty community has gain 0
        }
        if (community_size[best] == 0) {
            auto it = std::find(empty.begin(), empty.end(), best);
            if (it != empty.end()) empty.erase(it);
        }
        community_degree[best] += kv;
        ++community_size[best];
        community[v] = best;

        for (std::size_t c : touched) link[c] = 0.0;

        if (best != current) {
            for (std::size_t u : nbrs) {
                if (!queued[u] && community[u] != best) {
                    queued[u] = 1;
                    queue.push_back(u);
                }
            }
        }
    }
}

// Refines each community of `partition` starting from singletons, merging
// only well-connected nodes into well-connected clusters. Merge targets are
// drawn with probability proportional to exp(gain / randomness).
std::vector<std::size_t> refine(const WeightedGraph& g, const std::vector<std::size_t>& partition, double resolution,
                                double randomness, SplitMix64& rng) {
    const std::size_t n = g.size();
    const double m = g.total_weight();
    const double two_m = 2 * m;
    std::vector<std::size_t> refined(n);
    std::iota(refined.begin(), refined.end(), 0);
    if (m <= 0) return refined;

    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t v = 0; v < n; ++v) members[partition[v]].push_back(v);

    std::vector<double> cluster_degree(n), cluster_external(n), node_external(n, 0.0);
    std::vector<std::size_t> cluster_size(n, 1);
    for (std::size_t v = 0; v < n; ++v) cluster_degree[v] = g.degree(v);

    std::vector<double> link(n, 0.0);
    std::vector<std::size_t> touched;
    std::vector<double> weights;
    for (auto& nodes : members) {
        if (nodes.size() < 2) continue;
        const std::size_t s = partition[nodes.front()];
        double community_degree = 0.0;
        for (std::size_t v : nodes) {
            community_degree += g.degree(v);
            double ext = 0.0;
            auto nbrs = g.neighbors(v);
            auto ws = g.weights(v);
            for (std::size_t k = 0; k < nbrs.size(); ++k) {
                if (partition[nbrs[k]] == s) ext += ws[k];
            }
            node_external[v] = ext;
            cluster_external[v] = ext;
        }

        std::vector<std::size_t> order = nodes;
        shuffle(order, rng);
        for (std::size_t v : order) {
            if (cluster_size[refined[v]] != 1) continue;
            const double kv = g.degree(v);
            if (node_external[v] < resolution * kv * (community_degree - kv) / two_m) continue;

            touched.clear();
            auto nbrs = g.neighbors(v);
            auto ws = g.weights(v);
            for (std::size_t k = 0; k < nbrs.size(); ++k) {
                std::size_t u = nbrs[k];
                if (partition[u] != s) continue;
                std::size_t c = refined[u];
                if (link[c] == 0.0) touched.push_back(c);
                link[c] += ws[k];
            }

            const std::size_t own = refined[v];
            // Candidates: own singleton (gain 0) and every well-connected cluster with gain >= 0.
            std::vector<std::size_t> candidates{own};
            weights.assign(1, 0.0);
            double max_gain = 0.0;
            for (std::size_t c : touched) {
                if (c == own) continue;
                double kc = cluster_degree[c];
                if (cluster_external[c] < resolution * kc * (community_degree - kc) / two_m) continue;
                double gain = (link[c] - resolution * kv * kc / two_m) / m;
                if (gain < 0) continue;
                candidates.push_back(c);
                weights.push_back(gain);
                max_gain = std::max(max_gain, gain);
            }
            for (std::size_t c : touched) link[c] = 0.0;
            if (candidates.size() == 1) continue;

            double total = 0.0;
            for (auto& w : weights) {
                w = std::exp((w - max_gain) / randomness);
                total += w;
            }
            double pick = rng.uniform() * total;
            std::size_t chosen = candidates.back();
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (pick < weights[i]) {
                    chosen = candidates[i];
                    break;
                }
                pick -= weights[i];
            }
            if (chosen == own) continue;

            double w_to_chosen = 0.0;
            for (std::size_t k = 0; k < nbrs.size(); ++k) {
                if (partition[nbrs[k]] == s && refined[nbrs[k]] == chosen) w_to_chosen += ws[k];
            }
            refined[v] = chosen;
            --cluster_size[own];
            ++cluster_size[chosen];
            cluster_degree[chosen] += kv;
            cluster_external[chosen] += node_external[v] - 2 * w_to_chosen;
        }
    }
    return refined;
}

// Splits communities that do not induce connected subgraphs into their
// components. Splitting a disconnected community never lowers modularity.
std::size_t split_disconnected(const WeightedGraph& g, std::vector<std::size_t>& membership) {
    const std::size_t n = g.size();
    std::vector<std::size_t> out(n, SIZE_MAX);
    std::size_t next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t root = 0; root < n; ++root) {
        if (out[root] != SIZE_MAX) continue;
        out[root] = next;
        stack.assign(1, root);
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            for (std::size_t u : g.neighbors(v)) {
                if (out[u] == SIZE_MAX && membership[u] == membership[root]) {
                    out[u] = next;
                    stack.push_back(u);
                }
            }
        }
        ++next;
    }
    membership = std::move(out);
    return next;
}

}  // namespace

WeightedGraph aggregate(const WeightedGraph& graph, std::span<const std::size_t> membership,
                        std::size_t community_count) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
    edges.reserve(graph.edge_count() + graph.size());
    for (std::size_t v = 0; v < graph.size(); ++v) {
        if (graph.self_weight(v) > 0) edges.emplace_back(membership[v], membership[v], graph.self_weight(v));
        auto nbrs = graph.neighbors(v);
        auto ws = graph.weights(v);
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
            if (v < nbrs[k]) edges.emplace_back(membership[v], membership[nbrs[k]], ws[k]);
        }
    }
    return WeightedGraph(community_count, edges);
}

bool communities_connected(const WeightedGraph& graph, std::span<const std::size_t> membership) {
    const std::size_t n = graph.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t u : graph.neighbors(v)) {
            if (membership[u] == membership[v]) parent[find(u)] = find(v);
        }
    }
    // Each community must map to exactly one union-find root.
    std::vector<std::size_t> root_of(n, SIZE_MAX);
    for (std::size_t v = 0; v < n; ++v) {
        std::size_t c = membership[v];
        if (c >= n) return false;
        std::size_t r = find(v);
        if (root_of[c] == SIZE_MAX) {
            root_of[c] = r;
        } else if (root_of[c] != r) {
            return false;
        }
    }
    return true;
}

LeidenResult leiden(const WeightedGraph& graph, const LeidenOptions& options) {
    if (options.resolution <= 0) throw ConfigError("resolution must be positive");
    const std::size_t n = graph.size();
    LeidenResult result;
    result.membership.resize(n);
    std::iota(result.membership.begin(), result.membership.end(), 0);
    if (n == 0) return result;

    SplitMix64 rng(options.seed ^ 0x5eedc0ffee15ULL);
    auto quality_of = [&](const WeightedGraph& g, const std::vector<std::size_t>& p) {
        return kernels::modularity(g, p, options.resolution, options.exec);
    };

    std::vector<std::size_t> flat = result.membership;
    for (int iteration = 0; iteration < std::max(1, options.max_iterations); ++iteration) {
        const std::vector<std::size_t> before = flat;

        WeightedGraph level = graph;
        std::vector<std::size_t> partition = flat;       // community of each level node
        std::vector<std::size_t> node_of(n);             // original node -> level node
        std::iota(node_of.begin(), node_of.end(), 0);
        relabel(partition);

        while (true) {
            move_nodes_fast(level, partition, options.resolution, rng);
            result.pass_qualities.push_back(quality_of(level, partition));
            std::size_t communities = relabel(partition);
            if (communities == level.size()) break;

            auto refined = refine(level, partition, options.resolution, options.randomness, rng);
            std::size_t clusters = relabel(refined);
            if (clusters == level.size()) break;  // refinement merged nothing; aggregation would be a no-op

            std::vector<std::size_t> next_partition(clusters);
            for (std::size_t v = 0; v < level.size(); ++v) next_partition[refined[v]] = partition[v];
            level = aggregate(level, refined, clusters);
            for (auto& x : node_of) x = refined[x];
            partition = std::move(next_partition);
        }
        for (std::size_t v = 0; v < n; ++v) flat[v] = partition[node_of[v]];
        relabel(flat);
        if (flat == before) break;
    }

    result.community_count = split_disconnected(graph, flat);
    result.membership = std::move(flat);
    result.quality = quality_of(graph, result.membership);
    result.pass_qualities.push_back(result.quality);
    return result;
}

std::vector<LeidenResult> leiden_levels(const WeightedGraph& graph, const HierarchyOptions& options) {
    std::vector<LeidenResult> levels;
    levels.push_back(leiden(graph, options.leiden));
    WeightedGraph current = graph;
    std::size_t count = levels.back().community_count;
    double resolution = options.leiden.resolution;
    for (int level = 1; level < options.max_levels && count > 1; ++level) {
        resolution *= options.level_factor;
        current = aggregate(current, levels.back().membership, levels.back().community_count);
        LeidenOptions opts = options.leiden;
        opts.resolution = resolution;
        opts.seed = options.leiden.seed + static_cast<std::uint64_t>(level);
        auto coarse = leiden(current, opts);
        if (coarse.community_count == count) break;
        levels.push_back(std::move(coarse));
        count = levels.back().community_count;
    }
    return levels;
}

WeightedGraph to_weighted_graph(const KnowledgeGraph& graph) {
    std::map<std::string, std::size_t, std::less<>> index;
    for (const auto& e : graph.entities()) index.emplace(e.id, index.size());
    std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
    for (const auto& t : graph.triples()) {
        edges.emplace_back(index.at(t.subject), index.at(t.object), t.weight);
    }
    return WeightedGraph(index.size(), edges);
}

CommunityHierarchy leiden_partition(const KnowledgeGraph& graph, double resolution, std::uint64_t seed,
                                    int max_levels) {
    if (graph.entities().empty()) throw ConfigError("cannot partition an empty graph");
    HierarchyOptions options;
    options.leiden.resolution = resolution;
    options.leiden.seed = seed;
    options.max_levels = std::max(1, max_levels);
    auto wg = to_weighted_graph(graph);
    auto levels = leiden_levels(wg, options);

    CommunityHierarchy h;
    std::vector<std::size_t> entity_community(graph.entities().size());
    std::iota(entity_community.begin(), entity_community.end(), 0);
    double res = resolution;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        for (auto& c : entity_community) c = levels[l].membership[c];
        std::map<std::string, int> level;
        for (std::size_t i = 0; i < graph.entities().size(); ++i) {
            level[graph.entities()[i].id] = static_cast<int>(entity_community[i]);
        }
        h.levels.push_back(std::move(level));
        h.resolutions.push_back(res);
        h.pass_qualities.push_back(levels[l].pass_qualities);
        res *= options.level_factor;
    }
    return h;
}

}  // namespace kg2data::kg
