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

#include "rlmesh/env/vec_env.hpp"

#include "rlmesh/core/rng.hpp"

namespace rlmesh {

VecEnv::VecEnv(const std::string& env_id, size_t count, uint64_t seed)
    : env_id_(env_id), seed_(seed), episode_counter_(count, 0) {
  RLMESH_CHECK(count >= 1, "VecEnv needs at least one sub-environment");
  envs_.reserve(count);
  for (size_t i = 0; i < count; ++i) envs_.push_back(MakeEnv(env_id));
}

uint64_t VecEnv::SubSeed(size_t index, uint64_t episode) const {
  return HashCombine(seed_, (static_cast<uint64_t>(index) << 32) | episode);
}

std::vector<std::vector<JointObservation>> VecEnv::ResetAll() {
  std::vector<std::vector<JointObservation>> out;
  out.reserve(envs_.size());
  for (size_t i = 0; i < envs_.size(); ++i) {
    episode_counter_[i] = 0;
    out.push_back(envs_[i]->Reset(SubSeed(i, 0)));
  }
  return out;
}

std::vector<StepResult> VecEnv::VectorStep(const std::vector<JointAction>& batched_actions) {
  if (batched_actions.size() != envs_.size())
    Throw(ErrorCode::kBatchSizeMismatch,
          "got " + std::to_string(batched_actions.size()) + " action sets for " +
              std::to_string(envs_.size()) + " environments");
  std::vector<StepResult> out;
  out.reserve(envs_.size());
  for (size_t i = 0; i < envs_.size(); ++i) {
    StepResult r = envs_[i]->Step(batched_actions[i]);
    if (r.done) {
      ++episode_counter_[i];
      r.observation = envs_[i]->Reset(SubSeed(i, episode_counter_[i]));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace rlmesh
