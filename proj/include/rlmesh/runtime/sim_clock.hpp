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

#ifndef RLMESH_RUNTIME_SIM_CLOCK_HPP_
#define RLMESH_RUNTIME_SIM_CLOCK_HPP_

#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "rlmesh/core/rng.hpp"
#include "rlmesh/runtime/config.hpp"

namespace rlmesh {

// Single-threaded discrete-event scheduler. Events at equal ticks run in
// schedule order (tick, sequence), so a run is a pure function of the
// schedule calls made against it.
class SimClock {
 public:
  using Task = std::function<void()>;

  uint64_t now() const { return now_; }

  void ScheduleAfter(uint64_t delay, Task fn) { ScheduleAt(now_ + delay, std::move(fn)); }
  void ScheduleAt(uint64_t at, Task fn);

  bool RunOne();
  void RunUntilIdle();
  size_t pending() const { return heap_.size(); }

 private:
  struct Event {
    uint64_t at;
    uint64_t seq;
    Task fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  uint64_t now_ = 0;
  uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

// Per-(worker, operation) cost model: every operation costs one base tick
// plus a seeded draw from the injected distribution, if any. Identical seeds
// give identical schedules; a constant injection of 0 reproduces the
// no-injection schedule exactly.
class DelayModel {
 public:
  static constexpr uint64_t kBaseCost = 1;

  explicit DelayModel(uint64_t seed) : seed_(seed) {}

  void DeclareWorker(const std::string& worker_id);
  bool HasWorker(const std::string& worker_id) const;

  // Throws UnknownWorker for undeclared workers.
  void Inject(const std::string& worker_id, DelayOp op, DelayDistribution dist);

  uint64_t Cost(const std::string& worker_id, DelayOp op);

 private:
  uint64_t seed_;
  std::map<std::string, std::map<DelayOp, DelayDistribution>> injected_;
  std::map<std::pair<std::string, DelayOp>, Rng> streams_;
};

}  // namespace rlmesh

#endif  // RLMESH_RUNTIME_SIM_CLOCK_HPP_
