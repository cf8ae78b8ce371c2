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

#include <cstddef>
#include <span>
#include <tuple>
#include <vector>

namespace kg2data::kg {

/// Undirected weighted graph in CSR form. Parallel edges are summed; a
/// self-loop of weight w adds 2w to the node's degree, as in the adjacency
/// convention A_ii = 2w.
class WeightedGraph {
public:
    WeightedGraph() = default;
    WeightedGraph(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges);

    std::size_t size() const { return self_.size(); }
    std::span<const std::size_t> neighbors(std::size_t v) const {
        return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }
    std::span<const double> weights(std::size_t v) const {
        return {weights_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }
    double self_weight(std::size_t v) const { return self_[v]; }
    double degree(std::size_t v) const { return degree_[v]; }
    /// Sum of all edge weights, each undirected edge once (m).
    double total_weight() const { return total_; }
    std::size_t edge_count() const { return targets_.size() / 2; }

private:
    std::vector<std::size_t> offsets_{0};
    std::vector<std::size_t> targets_;
    std::vector<double> weights_;
    std::vector<double> self_;
    std::vector<double> degree_;
    double total_ = 0;
};

}  // namespace kg2data::kg
