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
#include <functional>
#include <span>

#include "kg2data/kg/weighted_graph.hpp"

// Data-parallel inner loops. Each kernel has an OpenMP path and a serial
// reference path; both produce bit-identical results (floating-point sums are
// always combined in index order) so the serial path doubles as the oracle.
namespace kg2data::kernels {

enum class Exec { serial, parallel };

int max_threads();

/// Newman modularity with a resolution parameter:
///   Q = sum_c [ in_c / m - resolution * (K_c / 2m)^2 ]
/// where in_c counts each internal edge once and K_c is the degree sum.
double modularity(const kg::WeightedGraph& g, std::span<const std::size_t> membership, double resolution,
                  Exec exec = Exec::parallel);

/// out[i] = dot(rows[i*dim .. (i+1)*dim), query).
void dot_scores(std::span<const float> rows, std::size_t dim, std::span<const float> query, std::span<double> out,
                Exec exec = Exec::parallel);

/// Runs fn(i) for i in [0, n). The parallel path uses dynamic scheduling; the
/// exception of the lowest failing index is rethrown after all tasks finish.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Exec exec = Exec::parallel);

}  // namespace kg2data::kernels
