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

#ifndef RLMESH_BUFFER_REPLAY_HPP_
#define RLMESH_BUFFER_REPLAY_HPP_

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rlmesh/core/rng.hpp"
#include "rlmesh/learn/learn.hpp"

namespace rlmesh {

using TrajectoryRef = std::shared_ptr<const Trajectory>;

// Bounded FIFO of trajectories. Oldest entries are evicted once capacity is
// exceeded. Sampling is uniform without replacement.
class FifoBuffer {
 public:
  explicit FifoBuffer(size_t capacity = 4096);

  uint64_t Push(Trajectory traj);
  std::vector<std::pair<uint64_t, TrajectoryRef>> Sample(size_t k, Rng& rng) const;

  size_t size() const;
  size_t capacity() const { return capacity_; }
  uint64_t evicted_count() const;

 private:
  struct Entry {
    uint64_t id;
    TrajectoryRef payload;
  };

  mutable std::mutex mu_;
  size_t capacity_;
  uint64_t next_id_ = 1;
  uint64_t evicted_ = 0;
  std::deque<Entry> entries_;
};

// Complete binary tree over slot priorities; every internal node holds the
// exact sum of its children (parents are recomputed from children on each
// write, so the audit is an equality check, not a tolerance check).
class SumTree {
 public:
  explicit SumTree(size_t capacity);

  void Set(size_t slot, double value);
  double Get(size_t slot) const { return tree_[base_ + slot]; }
  double Total() const { return tree_[1]; }

  // Slot whose cumulative-priority interval contains u, for u in [0, Total).
  size_t FindPrefix(double u) const;

  size_t capacity() const { return capacity_; }
  bool Audit() const;

 private:
  size_t capacity_;
  size_t base_;  // index of the first leaf
  std::vector<double> tree_;
};

// Proportional prioritized replay. Eviction is oldest-first (lowest insert
// time) to bound sample staleness; sampling draws k independent entries with
// replacement with P(i) proportional to priority.
class PrioritizedBuffer {
 public:
  explicit PrioritizedBuffer(size_t capacity = 16384);

  uint64_t Push(Trajectory traj, double priority);
  std::vector<std::pair<uint64_t, TrajectoryRef>> Sample(size_t k, Rng& rng) const;
  void UpdatePriorities(std::span<const uint64_t> ids,
                        std::span<const double> new_priorities);

  size_t size() const;
  size_t capacity() const { return capacity_; }
  uint64_t evicted_count() const;
  double TotalPriority() const;
  bool AuditTree() const;

 private:
  struct Slot {
    uint64_t id = 0;
    TrajectoryRef payload;
  };

  mutable std::mutex mu_;
  size_t capacity_;
  uint64_t next_id_ = 1;
  uint64_t evicted_ = 0;
  size_t live_ = 0;
  std::vector<Slot> slots_;
  std::map<uint64_t, size_t> id_to_slot_;
  SumTree tree_;
};

// Per-episode accumulation: transitions grow under their episode key and
// become visible to consumers only when the episode is finished, at which
// point the whole trajectory moves atomically to the finished queue.
class EpisodeBuffer {
 public:
  void AppendStep(const std::string& episode_key, Transition step);

  // Moves the assembled trajectory to the finished queue, stamps the
  // bootstrap value, removes the key, and returns a copy.
  Trajectory Finish(const std::string& episode_key, float bootstrap_value);

  std::optional<Trajectory> PopFinished();

  size_t unfinished_count() const;
  size_t finished_count() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<Transition>> unfinished_;
  std::deque<Trajectory> finished_;
};

}  // namespace rlmesh

#endif  // RLMESH_BUFFER_REPLAY_HPP_
