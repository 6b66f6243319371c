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

#include "rlmesh/env/env.hpp"

#include <cmath>

namespace rlmesh {

std::vector<JointObservation> Env::Reset(uint64_t seed) {
  done_ = false;
  episode_step_ = 0;
  DoReset(seed);
  auto obs = Observe();
  for (auto& o : obs) o.episode_step = 0;
  return obs;
}

StepResult Env::Step(const JointAction& actions) {
  if (done_)
    Throw(ErrorCode::kSteppedAfterDone, spec_.env_id + ": episode is done, reset first");
  if (static_cast<int>(actions.size()) != spec_.players)
    Throw(ErrorCode::kShapeMismatch, "joint action must cover every player");
  const auto masks = Observe();
  for (int p = 0; p < spec_.players; ++p) {
    if (static_cast<int>(actions[p].size()) != spec_.agents_per_player)
      Throw(ErrorCode::kShapeMismatch, "joint action must cover every agent");
    for (int a = 0; a < spec_.agents_per_player; ++a) {
      int act = actions[p][a];
      if (act < 0 || act >= spec_.action_dim)
        Throw(ErrorCode::kIllegalAction, "action id out of range");
      if (!masks[p].action_mask[a][act])
        Throw(ErrorCode::kIllegalAction, "action is masked");
    }
  }

  StepResult result = DoStep(actions);
  ++episode_step_;
  if (!result.done && episode_step_ >= spec_.max_episode_steps) result.done = true;
  done_ = result.done;
  result.observation = Observe();
  for (auto& o : result.observation) o.episode_step = episode_step_;
  for (const auto& per_player : result.rewards)
    for (float r : per_player)
      RLMESH_CHECK(std::isfinite(r), "environment emitted non-finite reward");
  return result;
}

std::unique_ptr<Env> MakeMatrixGame(const std::string& env_id);
std::unique_ptr<Env> MakeChainMdp();
std::unique_ptr<Env> MakeGridCapture();

std::unique_ptr<Env> MakeEnv(const std::string& env_id) {
  if (env_id == "matrix_rps" || env_id == "matching_pennies")
    return MakeMatrixGame(env_id);
  if (env_id == "chain_mdp") return MakeChainMdp();
  if (env_id == "grid_capture") return MakeGridCapture();
  Throw(ErrorCode::kConfigInvalid, "unknown env id: " + env_id);
}

EnvSpec SpecForEnv(const std::string& env_id) { return MakeEnv(env_id)->spec(); }

}  // namespace rlmesh
