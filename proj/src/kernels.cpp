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

#include "kg2data/kernels.hpp"

#include <exception>
#include <mutex>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace kg2data::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

// Per-node internal weight: half of every same-community incident edge plus
// the self-loop, so summing over nodes counts each internal edge once.
double node_internal(const kg::WeightedGraph& g, std::span<const std::size_t> membership, std::size_t v) {
    double in = g.self_weight(v);
    auto nbrs = g.neighbors(v);
    auto ws = g.weights(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
        if (membership[nbrs[k]] == membership[v]) in += 0.5 * ws[k];
    }
    return in;
}

double combine(const kg::WeightedGraph& g, std::span<const std::size_t> membership, std::span<const double> internal,
               double resolution) {
    const double m = g.total_weight();
    if (m <= 0) return 0.0;
    const std::size_t n = g.size();
    std::vector<double> community_in(n, 0.0), community_deg(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        community_in[membership[v]] += internal[v];
        community_deg[membership[v]] += g.degree(v);
    }
    double q = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        if (community_deg[c] == 0 && community_in[c] == 0) continue;
        double frac = community_deg[c] / (2 * m);
        q += community_in[c] / m - resolution * frac * frac;
    }
    return q;
}

}  // namespace

double modularity(const kg::WeightedGraph& g, std::span<const std::size_t> membership, double resolution, Exec exec) {
    const std::size_t n = g.size();
    if (membership.size() != n) throw std::invalid_argument("membership size does not match graph");
    for (auto c : membership) {
        if (c >= n) throw std::invalid_argument("community ids must be < node count");
    }
    std::vector<double> internal(n);
    if (exec == Exec::serial) {
        for (std::size_t v = 0; v < n; ++v) internal[v] = node_internal(g, membership, v);
    } else {
        const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t v = 0; v < sn; ++v) {
            internal[static_cast<std::size_t>(v)] = node_internal(g, membership, static_cast<std::size_t>(v));
        }
    }
    return combine(g, membership, internal, resolution);
}

void dot_scores(std::span<const float> rows, std::size_t dim, std::span<const float> query, std::span<double> out,
                Exec exec) {
    if (query.size() != dim || rows.size() != out.size() * dim) {
        throw std::invalid_argument("dot_scores: dimension mismatch");
    }
    auto row_dot = [&](std::size_t i) {
        const float* r = rows.data() + i * dim;
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) s += static_cast<double>(r[k]) * static_cast<double>(query[k]);
        out[i] = s;
    };
    const std::size_t n = out.size();
    if (exec == Exec::serial) {
        for (std::size_t i = 0; i < n; ++i) row_dot(i);
        return;
    }
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sn; ++i) row_dot(static_cast<std::size_t>(i));
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Exec exec) {
    if (exec == Exec::serial) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr first;
    std::size_t first_index = n;
    std::mutex mu;
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(mu);
            if (static_cast<std::size_t>(i) < first_index) {
                first_index = static_cast<std::size_t>(i);
                first = std::current_exception();
            }
        }
    }
    if (first) std::rethrow_exception(first);
}

}  // namespace kg2data::kernels
