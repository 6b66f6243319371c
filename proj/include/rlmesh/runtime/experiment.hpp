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

#ifndef RLMESH_RUNTIME_EXPERIMENT_HPP_
#define RLMESH_RUNTIME_EXPERIMENT_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rlmesh/coord/coordinator.hpp"
#include "rlmesh/runtime/config.hpp"
#include "rlmesh/runtime/metrics.hpp"

namespace rlmesh {

struct RunResult {
  uint64_t frames_produced = 0;  // agent transitions collected by actors
  uint64_t trajectories_submitted = 0;
  uint64_t updates_applied = 0;
  uint64_t episodes_completed = 0;
  uint64_t sim_ticks = 0;
  double wall_seconds = 0.0;

  std::map<std::string, uint64_t> final_versions;
  std::map<std::string, uint64_t> final_checksums;
  std::map<std::string, PolicyParameters> final_params;

  LagTracker::Summary lag;
  uint64_t max_lag = 0;
  FrameAccounting accounting;
  std::vector<MetricsRecord> metrics;

  bool deadlock = false;
  bool worker_crashed = false;
  std::string diagnostic;
  std::filesystem::path league_file;
};

// Runs one experiment to its frame budget. With the in_process transport the
// whole run executes on a deterministic simulated clock; with sockets, actor
// worker processes connect over localhost TCP on the wall clock.
RunResult RunExperiment(const ExperimentConfig& config);

// Implementation of the sockets transport (socket_transport.cpp).
RunResult RunSocketsExperiment(const ExperimentConfig& config);

// Entry point for a spawned actor worker process; returns its exit code.
int RunSocketActorWorker(const ExperimentConfig& config, const std::string& worker_id,
                         int port);

// Gradient dispatch shared by the in-process learner and the socket parent.
GradientUpdate ComputeAlgorithmGradient(const LearnParams& learn,
                                        const PolicyParameters& params,
                                        std::span<const Trajectory> batch,
                                        const std::string& producer);

// The config rendered back as a parseable key=value document (used to hand
// the experiment to spawned worker processes).
std::string RenderConfig(const ExperimentConfig& config);

}  // namespace rlmesh

#endif  // RLMESH_RUNTIME_EXPERIMENT_HPP_
