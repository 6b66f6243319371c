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

namespace rlmesh {
namespace {

// Five-state corridor. The agent starts at state 0; action 1 moves right,
// action 0 moves left (state 0 bounces in place). Entering state 4 pays +1
// and ends the episode; every other step pays 0.
class ChainMdp final : public Env {
 public:
  static constexpr int kNumStates = 5;
  static constexpr int kActionLeft = 0;
  static constexpr int kActionRight = 1;

  ChainMdp()
      : Env(EnvSpec{.env_id = "chain_mdp",
                    .players = 1,
                    .agents_per_player = 1,
                    .obs_dim = kNumStates,
                    .action_dim = 2,
                    .max_episode_steps = 20}) {}

 protected:
  void DoReset(uint64_t /*seed*/) override { state_ = 0; }

  StepResult DoStep(const JointAction& actions) override {
    int act = actions[0][0];
    state_ += (act == kActionRight) ? 1 : -1;
    if (state_ < 0) state_ = 0;
    StepResult r;
    float reward = 0.0f;
    if (state_ == kNumStates - 1) {
      reward = 1.0f;
      r.done = true;
    }
    r.rewards = {{reward}};
    return r;
  }

  std::vector<JointObservation> Observe() const override {
    JointObservation o;
    std::vector<float> onehot(kNumStates, 0.0f);
    onehot[static_cast<size_t>(state_)] = 1.0f;
    o.per_agent_obs = {std::move(onehot)};
    o.action_mask = {{1, 1}};
    return {std::move(o)};
  }

 private:
  int state_ = 0;
};

}  // namespace

std::unique_ptr<Env> MakeChainMdp() { return std::make_unique<ChainMdp>(); }

}  // namespace rlmesh
