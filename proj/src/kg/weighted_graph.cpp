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

#include "kg2data/kg/weighted_graph.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace kg2data::kg {

WeightedGraph::WeightedGraph(std::size_t n,
                             const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges)
    : self_(n, 0.0), degree_(n, 0.0) {
    std::vector<std::map<std::size_t, double>> adj(n);
    for (const auto& [u, v, w] : edges) {
        if (u >= n || v >= n) throw std::out_of_range("edge endpoint out of range");
        if (w <= 0) throw std::invalid_argument("edge weights must be positive");
        if (u == v) {
            self_[u] += w;
        } else {
            adj[u][v] += w;
            adj[v][u] += w;
        }
        total_ += w;
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] = offsets_[v] + adj[v].size();
    targets_.reserve(offsets_[n]);
    weights_.reserve(offsets_[n]);
    for (std::size_t v = 0; v < n; ++v) {
        double d = 2 * self_[v];
        for (const auto& [u, w] : adj[v]) {
            targets_.push_back(u);
            weights_.push_back(w);
            d += w;
        }
        degree_[v] = d;
    }
}

}  // namespace kg2data::kg
