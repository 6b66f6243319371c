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

#ifndef RLMESH_RUNTIME_CONFIG_HPP_
#define RLMESH_RUNTIME_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rlmesh/coord/coordinator.hpp"
#include "rlmesh/league/league.hpp"

namespace rlmesh {

enum class DelayOp { kEnvStep, kInference, kFetch, kSubmit, kLearn };
const char* DelayOpName(DelayOp op);
DelayOp ParseDelayOp(const std::string& name);

// Seeded delay draw added on top of an operation's base cost.
struct DelayDistribution {
  enum class Kind { kConstant, kUniform, kExponential };
  Kind kind = Kind::kConstant;
  double a = 0.0;
  double b = 0.0;

  // "const:N" | "uniform:LO:HI" | "exp:MEAN"
  static DelayDistribution Parse(const std::string& text);
  uint64_t Draw(Rng& rng) const;
};

struct LearnParams {
  std::string algorithm = "a2c";  // a2c | ppo_dualclip | vtrace_ac | qlearning
  double gamma = 0.99;
  double lr = 0.1;
  double clip_eps = 0.2;
  double dual_clip_c = 3.0;
  double rho_bar = 1.0;
  double c_bar = 1.0;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double alpha = 0.1;           // q-learning step size
  double epsilon_greedy = 0.1;  // q-learning exploration
};

struct LeagueParams {
  std::string strategy = "none";  // none | naive_self | self_80_20 | pfsp | ...
  uint64_t snapshot_every = 0;    // frames; 0 disables snapshots
  int eval_games = 0;             // games per pair at each snapshot
  std::string file;               // league persistence path; empty disables
  double pfsp_exponent = 2.0;
  // Training players for 2-player environments: one id for self-play, two
  // comma-separated ids for population runs. Empty derives "main".
  std::vector<std::string> players;
};

// One experiment: topology, environment, hyperparameters, league wiring,
// delay injection, and transport. Every field has a default; unknown keys
// are rejected.
struct ExperimentConfig {
  uint64_t seed = 0;
  std::string transport = "in_process";  // in_process (simulated clock) | sockets
  uint64_t frames = 10000;               // total environment frames budget
  int unroll = 16;                       // steps per trajectory segment
  std::string env_id = "chain_mdp";
  TopologyConfig topology;
  LearnParams learn;
  std::string policy_arch = "tabular";  // tabular | linear | mlp1
  int policy_hidden = 16;
  double policy_init_scale = 0.05;
  LeagueParams league;
  CooperationMode cooperation;
  std::string metrics_file;
  uint64_t metrics_cadence = 1000;  // ticks (simulated) or ms (wall)
  // worker id -> op -> extra delay
  std::map<std::string, std::map<DelayOp, DelayDistribution>> delays;
  std::map<std::string, uint64_t> crash_after_frames;  // sockets fault injection
  std::map<std::string, uint64_t> halt_after_frames;   // worker goes silent
  size_t replay_capacity = 16384;
  bool replay_prioritized = true;
  int sockets_port = 0;        // 0 picks a free port
  uint64_t max_wall_ms = 120000;

  static ExperimentConfig FromFile(const std::filesystem::path& path);
  static ExperimentConfig FromString(const std::string& text);

  // RLMESH_SECTION_KEY=value environment variables override config keys by
  // prefix-matched name (dots become underscores, case-insensitive).
  void ApplyEnvOverrides();

  void Validate() const;
  ArchSpec ResolveArch() const;

  // Training player ids: "main" for 1-player environments, "red"/"blue" for
  // 2-player population runs, or "main" alone for 2-player self-play.
  std::vector<std::string> TrainingPlayers() const;

 private:
  void SetKey(const std::string& key, const std::string& value);
};

}  // namespace rlmesh

#endif  // RLMESH_RUNTIME_CONFIG_HPP_
