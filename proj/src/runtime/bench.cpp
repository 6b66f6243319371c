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

#include "rlmesh/runtime/bench.hpp"

#include <iomanip>
#include <sstream>

namespace rlmesh {

std::vector<ExperimentConfig> ExpandBenchMatrix(const ExperimentConfig& base,
                                                const std::vector<std::string>& kinds) {
  std::vector<ExperimentConfig> out;
  for (const std::string& kind : kinds) {
    ExperimentConfig cfg = base;
    cfg.topology.kind = ParseTopologyKind(kind);
    // Kind-scoped knobs revert to defaults unless they apply.
    if (cfg.topology.kind != TopologyKind::kSyncQuorum) cfg.topology.quorum_fraction = 1.0;
    if (cfg.topology.kind != TopologyKind::kBundledAllreduce) cfg.topology.drop_fraction = 0.0;
    if (cfg.topology.kind == TopologyKind::kReplayQlearning) {
      cfg.learn.algorithm = "qlearning";
      cfg.policy_arch = "tabular";
    } else if (cfg.learn.algorithm == "qlearning") {
      cfg.learn.algorithm = "a2c";
    }
    out.push_back(std::move(cfg));
  }
  return out;
}

std::vector<BenchRow> BenchTopologies(const std::vector<ExperimentConfig>& configs) {
  RLMESH_CHECK(!configs.empty(), "no configs to bench");
  for (const ExperimentConfig& cfg : configs) {
    if (cfg.env_id != configs.front().env_id || cfg.frames != configs.front().frames)
      Throw(ErrorCode::kHeterogeneousEnvs,
            "bench configs must share env and frame budget");
  }
  std::vector<BenchRow> rows;
  for (const ExperimentConfig& cfg : configs) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.transport = "in_process";  // deterministic simulated clock
    run_cfg.metrics_file.clear();
    RunResult r = RunExperiment(run_cfg);
    BenchRow row;
    row.topology = TopologyKindName(cfg.topology.kind);
    row.frames = r.frames_produced;
    row.updates = r.updates_applied;
    row.ticks = r.sim_ticks;
    double kticks = static_cast<double>(r.sim_ticks) / 1000.0;
    if (kticks > 0.0) {
      row.frames_per_ktick = static_cast<double>(r.frames_produced) / kticks;
      row.updates_per_ktick = static_cast<double>(r.updates_applied) / kticks;
    }
    row.mean_lag = r.lag.mean;
    row.max_lag = r.max_lag;
    rows.push_back(row);
  }
  return rows;
}

std::string FormatBenchTable(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "topology" << std::right << std::setw(10)
     << "frames" << std::setw(10) << "updates" << std::setw(12) << "ticks"
     << std::setw(14) << "frames/kt" << std::setw(14) << "updates/kt"
     << std::setw(10) << "lag.mean" << std::setw(9) << "lag.max" << "\n";
  for (const BenchRow& r : rows) {
    os << std::left << std::setw(20) << r.topology << std::right << std::setw(10)
       << r.frames << std::setw(10) << r.updates << std::setw(12) << r.ticks
       << std::setw(14) << std::fixed << std::setprecision(2) << r.frames_per_ktick
       << std::setw(14) << r.updates_per_ktick << std::setw(10)
       << std::setprecision(3) << r.mean_lag << std::setw(9) << r.max_lag << "\n";
  }
  return os.str();
}

}  // namespace rlmesh
