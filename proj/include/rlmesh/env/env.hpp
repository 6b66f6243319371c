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

#ifndef RLMESH_ENV_ENV_HPP_
#define RLMESH_ENV_ENV_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rlmesh/core/error.hpp"

namespace rlmesh {

// Observations for every agent controlled by one player.
struct JointObservation {
  std::vector<std::vector<float>> per_agent_obs;
  // action_mask[agent][action] != 0 means the action is legal.
  std::vector<std::vector<uint8_t>> action_mask;
  int episode_step = 0;
};

// actions[player][agent] = discrete action id.
using JointAction = std::vector<std::vector<int>>;

struct StepResult {
  std::vector<JointObservation> observation;  // one per player
  std::vector<std::vector<float>> rewards;    // [player][agent]
  bool done = false;
  std::map<std::string, double> info;
};

struct EnvSpec {
  std::string env_id;
  int players = 1;
  int agents_per_player = 1;
  int obs_dim = 0;
  int action_dim = 0;
  int max_episode_steps = 0;
};

// Deterministic, seedable multi-player multi-agent environment. Instances are
// confined to one worker at a time; they hold mutable episode state.
class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  bool done() const { return done_; }
  int episode_step() const { return episode_step_; }

  std::vector<JointObservation> Reset(uint64_t seed);
  StepResult Step(const JointAction& actions);

 protected:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) {}

  virtual void DoReset(uint64_t seed) = 0;
  // Advances the fixed dynamics; fills rewards/done/info of the result.
  virtual StepResult DoStep(const JointAction& actions) = 0;
  virtual std::vector<JointObservation> Observe() const = 0;

  EnvSpec spec_;
  bool done_ = true;  // Step before the first Reset is illegal.
  int episode_step_ = 0;
};

// env_id in {matrix_rps, matching_pennies, chain_mdp, grid_capture}.
std::unique_ptr<Env> MakeEnv(const std::string& env_id);
EnvSpec SpecForEnv(const std::string& env_id);

}  // namespace rlmesh

#endif  // RLMESH_ENV_ENV_HPP_
