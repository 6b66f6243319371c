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

// One-shot zero-sum matrix games. Observations carry no features; both
// players act simultaneously and the episode ends after one step.
class MatrixGame final : public Env {
 public:
  explicit MatrixGame(const std::string& env_id)
      : Env(EnvSpec{.env_id = env_id,
                    .players = 2,
                    .agents_per_player = 1,
                    .obs_dim = 0,
                    .action_dim = env_id == "matrix_rps" ? 3 : 2,
                    .max_episode_steps = 1}),
        rps_(env_id == "matrix_rps") {}

 protected:
  void DoReset(uint64_t /*seed*/) override {}

  StepResult DoStep(const JointAction& actions) override {
    int a = actions[0][0];
    int b = actions[1][0];
    StepResult r;
    float payoff = rps_ ? RpsPayoff(a, b) : PenniesPayoff(a, b);
    r.rewards = {{payoff}, {-payoff}};
    r.done = true;
    return r;
  }

  std::vector<JointObservation> Observe() const override {
    JointObservation o;
    o.per_agent_obs = {{}};
    o.action_mask = {std::vector<uint8_t>(static_cast<size_t>(spec_.action_dim), 1)};
    return {o, o};
  }

 private:
  // Actions: 0 = Rock, 1 = Paper, 2 = Scissors. Returns player 0's payoff.
  static float RpsPayoff(int a, int b) {
    if (a == b) return 0.0f;
    return ((a - b + 3) % 3 == 1) ? 1.0f : -1.0f;
  }

  // Player 0 wins on a match, loses on a mismatch.
  static float PenniesPayoff(int a, int b) { return a == b ? 1.0f : -1.0f; }

  bool rps_;
};

}  // namespace

std::unique_ptr<Env> MakeMatrixGame(const std::string& env_id) {
  return std::make_unique<MatrixGame>(env_id);
}

}  // namespace rlmesh
