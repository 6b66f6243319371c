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

#include "rlmesh/coord/inference_batcher.hpp"

#include "rlmesh/policy/policy.hpp"

namespace rlmesh {

InferenceBatcher::InferenceBatcher(ParameterStore& store, std::string player_id,
                                   size_t batch_max, uint64_t seed)
    : store_(store),
      player_id_(std::move(player_id)),
      batch_max_(batch_max),
      rng_(seed) {
  RLMESH_CHECK(batch_max_ >= 1, "batch_max must be >= 1");
}

bool InferenceBatcher::SubmitRequest(std::vector<float> obs, std::vector<uint8_t> mask,
                                     Callback cb) {
  std::lock_guard lock(mu_);
  if (closed_) Throw(ErrorCode::kTimeout, "inference batcher is shut down");
  pending_.push_back({std::move(obs), std::move(mask), std::move(cb)});
  return pending_.size() >= batch_max_;
}

size_t InferenceBatcher::Flush() {
  // Flushes are serialized so the rng draw order is well defined; callbacks
  // run outside the state lock and may submit follow-up requests.
  std::lock_guard flush_lock(flush_mu_);
  std::vector<Pending> batch;
  ParamsRef params;
  {
    std::lock_guard lock(mu_);
    if (pending_.empty()) return 0;
    batch.swap(pending_);
    params = store_.FetchLatest(player_id_);
    ++inference_calls_;
    batch_sizes_.push_back(batch.size());
  }
  // One pass over the whole batch against a single snapshot. Requests are
  // answered in arrival order so the rng draw sequence is deterministic.
  for (Pending& p : batch) {
    InferResult r = Infer(*params, p.obs, p.mask, rng_);
    Reply reply{r.action, r.log_prob, r.value, params->version};
    p.cb(reply);
  }
  return batch.size();
}

void InferenceBatcher::Shutdown() {
  Flush();
  std::lock_guard lock(mu_);
  closed_ = true;
}

size_t InferenceBatcher::PendingCount() const {
  std::lock_guard lock(mu_);
  return pending_.size();
}

uint64_t InferenceBatcher::inference_calls() const {
  std::lock_guard lock(mu_);
  return inference_calls_;
}

}  // namespace rlmesh
