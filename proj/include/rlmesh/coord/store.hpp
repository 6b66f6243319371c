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

#ifndef RLMESH_COORD_STORE_HPP_
#define RLMESH_COORD_STORE_HPP_

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "rlmesh/policy/policy.hpp"

namespace rlmesh {

using ParamsRef = std::shared_ptr<const PolicyParameters>;

// Versioned snapshot store, one slot per player. Readers always receive a
// complete immutable snapshot; versions per player strictly increase.
// Many concurrent readers, single writer per player.
class ParameterStore {
 public:
  // Called after each publish with (player_id, new version). Registered
  // callbacks run on the publishing thread; used by the simulation driver to
  // wake parked tasks.
  using PublishHook = std::function<void(const std::string&, uint64_t)>;

  // Publishing version 1 registers the player; otherwise params.version must
  // equal the current version + 1.
  uint64_t Publish(const std::string& player_id, PolicyParameters params);

  ParamsRef FetchLatest(const std::string& player_id) const;
  uint64_t CurrentVersion(const std::string& player_id) const;
  bool HasPlayer(const std::string& player_id) const;
  std::vector<std::string> PlayerIds() const;

  // Non-blocking: empty until the requested version exists.
  ParamsRef TryFetchAtLeast(const std::string& player_id, uint64_t version) const;

  // Blocking barrier primitive for thread transports; throws WaitTimeout.
  ParamsRef WaitFor(const std::string& player_id, uint64_t version,
                    std::chrono::milliseconds timeout) const;

  void AddPublishHook(PublishHook hook);

 private:
  ParamsRef FetchLatestLocked(const std::string& player_id) const;

  mutable std::mutex mu_;
  mutable std::condition_variable published_;
  std::map<std::string, ParamsRef> snapshots_;
  std::vector<PublishHook> hooks_;
};

}  // namespace rlmesh

#endif  // RLMESH_COORD_STORE_HPP_
