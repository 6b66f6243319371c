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

#include "rlmesh/runtime/sim_clock.hpp"

namespace rlmesh {

void SimClock::ScheduleAt(uint64_t at, Task fn) {
  RLMESH_CHECK(at >= now_, "cannot schedule into the past");
  heap_.push({at, seq_++, std::move(fn)});
}

bool SimClock::RunOne() {
  if (heap_.empty()) return false;
  Event ev = heap_.top();
  heap_.pop();
  now_ = ev.at;
  ev.fn();
  return true;
}

void SimClock::RunUntilIdle() {
  while (RunOne()) {
  }
}

void DelayModel::DeclareWorker(const std::string& worker_id) {
  injected_.try_emplace(worker_id);
}

bool DelayModel::HasWorker(const std::string& worker_id) const {
  return injected_.contains(worker_id);
}

void DelayModel::Inject(const std::string& worker_id, DelayOp op,
                        DelayDistribution dist) {
  auto it = injected_.find(worker_id);
  if (it == injected_.end())
    Throw(ErrorCode::kUnknownWorker, "no worker named " + worker_id);
  it->second[op] = dist;
}

uint64_t DelayModel::Cost(const std::string& worker_id, DelayOp op) {
  uint64_t cost = kBaseCost;
  auto it = injected_.find(worker_id);
  if (it == injected_.end()) return cost;
  auto dit = it->second.find(op);
  if (dit == it->second.end()) return cost;
  auto key = std::make_pair(worker_id, op);
  auto [stream, inserted] = streams_.try_emplace(
      key, Rng(HashCombine(seed_, HashString(worker_id + "/" + DelayOpName(op)))));
  return cost + dit->second.Draw(stream->second);
}

}  // namespace rlmesh
