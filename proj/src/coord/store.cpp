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

#include "rlmesh/coord/store.hpp"

namespace rlmesh {

uint64_t ParameterStore::Publish(const std::string& player_id, PolicyParameters params) {
  std::vector<PublishHook> hooks;
  uint64_t version = params.version;
  {
    std::lock_guard lock(mu_);
    auto it = snapshots_.find(player_id);
    uint64_t current = it == snapshots_.end() ? 0 : it->second->version;
    if (version != current + 1)
      Throw(ErrorCode::kVersionRegression,
            "publish version " + std::to_string(version) + " after " +
                std::to_string(current));
    snapshots_[player_id] = std::make_shared<const PolicyParameters>(std::move(params));
    hooks = hooks_;
  }
  published_.notify_all();
  for (const auto& hook : hooks) hook(player_id, version);
  return version;
}

ParamsRef ParameterStore::FetchLatestLocked(const std::string& player_id) const {
  auto it = snapshots_.find(player_id);
  if (it == snapshots_.end())
    Throw(ErrorCode::kUnknownPlayer, "no snapshot for player " + player_id);
  return it->second;
}

ParamsRef ParameterStore::FetchLatest(const std::string& player_id) const {
  std::lock_guard lock(mu_);
  return FetchLatestLocked(player_id);
}

uint64_t ParameterStore::CurrentVersion(const std::string& player_id) const {
  std::lock_guard lock(mu_);
  return FetchLatestLocked(player_id)->version;
}

bool ParameterStore::HasPlayer(const std::string& player_id) const {
  std::lock_guard lock(mu_);
  return snapshots_.contains(player_id);
}

std::vector<std::string> ParameterStore::PlayerIds() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  ids.reserve(snapshots_.size());
  for (const auto& [id, snap] : snapshots_) ids.push_back(id);
  return ids;
}

ParamsRef ParameterStore::TryFetchAtLeast(const std::string& player_id,
                                          uint64_t version) const {
  std::lock_guard lock(mu_);
  ParamsRef snap = FetchLatestLocked(player_id);
  return snap->version >= version ? snap : nullptr;
}

ParamsRef ParameterStore::WaitFor(const std::string& player_id, uint64_t version,
                                  std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  ParamsRef snap = FetchLatestLocked(player_id);  // validates registration
  bool ok = published_.wait_for(lock, timeout, [&] {
    auto it = snapshots_.find(player_id);
    return it != snapshots_.end() && it->second->version >= version;
  });
  if (!ok)
    Throw(ErrorCode::kWaitTimeout,
          "version " + std::to_string(version) + " of " + player_id +
              " not published in time");
  return snapshots_.at(player_id);
}

void ParameterStore::AddPublishHook(PublishHook hook) {
  std::lock_guard lock(mu_);
  hooks_.push_back(std::move(hook));
}

}  // namespace rlmesh
