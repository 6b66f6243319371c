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

#ifndef RLMESH_COORD_INFERENCE_BATCHER_HPP_
#define RLMESH_COORD_INFERENCE_BATCHER_HPP_

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "rlmesh/coord/store.hpp"
#include "rlmesh/core/rng.hpp"

namespace rlmesh {

// Learner-side inference service: actors send observations and masks, the
// batcher accumulates them until the batch limit is reached or the driver
// decides the timeout elapsed, then answers every request from one snapshot.
// Behavior log-probs and values are computed here, so actors never hold
// parameters. Flush scheduling (the timeout) belongs to the surrounding
// runtime; this class only accumulates and answers.
class InferenceBatcher {
 public:
  struct Reply {
    int action = 0;
    double log_prob = 0.0;
    double value = 0.0;
    uint64_t params_version = 0;
  };
  using Callback = std::function<void(const Reply&)>;

  InferenceBatcher(ParameterStore& store, std::string player_id, size_t batch_max,
                   uint64_t seed);

  // Returns true when the accumulated batch reached batch_max and should be
  // flushed now. Throws Timeout once the batcher is shut down.
  bool SubmitRequest(std::vector<float> obs, std::vector<uint8_t> mask, Callback cb);

  // Answers all pending requests with one batched inference pass on the
  // latest snapshot; returns the batch size (0 when nothing was pending).
  size_t Flush();

  void Shutdown();

  size_t PendingCount() const;
  uint64_t inference_calls() const;
  const std::vector<size_t>& batch_sizes() const { return batch_sizes_; }

 private:
  struct Pending {
    std::vector<float> obs;
    std::vector<uint8_t> mask;
    Callback cb;
  };

  ParameterStore& store_;
  std::string player_id_;
  size_t batch_max_;
  Rng rng_;  // guarded by flush_mu_

  std::mutex flush_mu_;
  mutable std::mutex mu_;
  bool closed_ = false;
  std::vector<Pending> pending_;
  uint64_t inference_calls_ = 0;
  std::vector<size_t> batch_sizes_;
};

}  // namespace rlmesh

#endif  // RLMESH_COORD_INFERENCE_BATCHER_HPP_
