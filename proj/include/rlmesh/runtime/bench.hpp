// Copyright 2026 The rlmesh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RLMESH_RUNTIME_BENCH_HPP_
#define RLMESH_RUNTIME_BENCH_HPP_

#include <string>
#include <vector>

#include "rlmesh/runtime/experiment.hpp"

namespace rlmesh {

struct BenchRow {
  std::string topology;
  uint64_t frames = 0;
  uint64_t updates = 0;
  uint64_t ticks = 0;
  double frames_per_ktick = 0.0;
  double updates_per_ktick = 0.0;
  double mean_lag = 0.0;
  uint64_t max_lag = 0;
};

// Runs every config on the simulated clock under its shared delay table and
// returns one row per topology. All configs must share the environment and
// frame budget (HeterogeneousEnvs otherwise).
std::vector<BenchRow> BenchTopologies(const std::vector<ExperimentConfig>& configs);

// Base config fanned out over a list of topology kinds.
std::vector<ExperimentConfig> ExpandBenchMatrix(const ExperimentConfig& base,
                                                const std::vector<std::string>& kinds);

std::string FormatBenchTable(const std::vector<BenchRow>& rows);

}  // namespace rlmesh

#endif  // RLMESH_RUNTIME_BENCH_HPP_
