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

#ifndef RLMESH_ENV_VEC_ENV_HPP_
#define RLMESH_ENV_VEC_ENV_HPP_

#include <memory>
#include <vector>

#include "rlmesh/env/env.hpp"

namespace rlmesh {

// Owns a batch of identical sub-environments stepped in lockstep so that one
// inference pass can serve every copy. Finished sub-environments reset
// themselves with a fresh derived seed; the done flag is still reported for
// trajectory cutting. Single-threaded: concurrency happens across VecEnv
// instances, never within one.
class VecEnv {
 public:
  VecEnv(const std::string& env_id, size_t count, uint64_t seed);

  size_t size() const { return envs_.size(); }
  const EnvSpec& spec() const { return envs_.front()->spec(); }

  // Fresh observations for every sub-environment (all reset).
  std::vector<std::vector<JointObservation>> ResetAll();

  // One StepResult per sub-environment, in input order. For sub-environments
  // that finish this step, the returned observation is the reset observation
  // of the next episode while done=true is preserved.
  std::vector<StepResult> VectorStep(const std::vector<JointAction>& batched_actions);

 private:
  uint64_t SubSeed(size_t index, uint64_t episode) const;

  std::string env_id_;
  uint64_t seed_;
  std::vector<std::unique_ptr<Env>> envs_;
  std::vector<uint64_t> episode_counter_;
};

}  // namespace rlmesh

#endif  // RLMESH_ENV_VEC_ENV_HPP_
