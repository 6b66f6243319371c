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

#ifndef RLMESH_COORD_COORDINATOR_HPP_
#define RLMESH_COORD_COORDINATOR_HPP_

#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rlmesh/coord/store.hpp"
#include "rlmesh/learn/learn.hpp"

namespace rlmesh {

enum class TopologyKind {
  kAsyncGradient,
  kAsyncTrajectory,
  kCentralInference,
  kSyncBarrier,
  kSyncQuorum,
  kBundledAllreduce,
  kReplayQlearning,
};

const char* TopologyKindName(TopologyKind kind);
TopologyKind ParseTopologyKind(const std::string& name);
bool IsSyncKind(TopologyKind kind);

inline constexpr uint64_t kUnlimitedStaleness = std::numeric_limits<uint64_t>::max();

struct TopologyConfig {
  TopologyKind kind = TopologyKind::kAsyncTrajectory;
  int actor_count = 1;
  int learner_count = 1;
  double quorum_fraction = 1.0;  // sync_quorum only
  double drop_fraction = 0.0;    // bundled_allreduce only
  uint64_t max_staleness = kUnlimitedStaleness;
  size_t inference_batch_max = 8;
  uint64_t inference_timeout = 20;  // simulated ticks or milliseconds
  size_t batch_size = 2;
  size_t queue_capacity = 64;

  // Throws ConfigInvalid on out-of-range or misapplied fields.
  void Validate() const;
};

struct SubmitResult {
  enum class Status { kApplied, kQueued, kHeld, kDropped };
  Status status = Status::kQueued;
  uint64_t version = 0;  // new version for kApplied
  std::string reason;    // "stale" | "late" | "preempted" for kDropped

  bool applied() const { return status == Status::kApplied; }
  bool dropped() const { return status == Status::kDropped; }
};

// Mean of the submitted updates' per-sample gradients, accumulated in double
// in producer_id order so sync averaging is bitwise reproducible. The result
// carries sample_count 1: it is the effective step to apply.
GradientUpdate AverageUpdates(std::span<const GradientUpdate> updates);

// Excludes the slowest floor(drop_fraction * n) units by arrival order and
// averages the rest. All units must share a base version (MixedVersions).
GradientUpdate AllreduceApply(
    std::span<const std::pair<GradientUpdate, uint64_t>> units, double drop_fraction);

// Parameter-lag bookkeeping over a sliding window of consumed samples.
class LagTracker {
 public:
  explicit LagTracker(size_t window = 4096) : window_(window) {}

  void Record(uint64_t actor_version, uint64_t learner_version, uint64_t timestamp);

  struct Summary {
    size_t count = 0;
    uint64_t min = 0;
    uint64_t max = 0;
    double mean = 0.0;
    std::map<uint64_t, size_t> histogram;
  };
  Summary Stats() const;

 private:
  size_t window_;
  std::deque<uint64_t> deltas_;
};

// Pipeline frame accounting. "Frames" are environment transitions; every
// produced frame must end up consumed, still queued, or dropped.
struct FrameAccounting {
  uint64_t produced = 0;
  uint64_t consumed = 0;
  uint64_t queued = 0;
  uint64_t dropped = 0;
};

// Coordinates gradient and trajectory exchange for one player under one
// topology. State transitions are serialized by an internal mutex; in the
// simulated-clock runtime every call happens on the scheduler thread.
class Coordinator {
 public:
  Coordinator(const TopologyConfig& config, ParameterStore& store,
              std::string player_id, double learning_rate);

  const TopologyConfig& config() const { return config_; }
  ParameterStore& store() { return store_; }
  const std::string& player_id() const { return player_id_; }

  // Gradient path (async_gradient, sync_barrier, sync_quorum).
  SubmitResult SubmitGradient(const GradientUpdate& update);

  // Bundled-unit path (bundled_allreduce): an epoch applies once the fastest
  // (1 - drop_fraction) share of units has arrived; stragglers of that epoch
  // are preempted when they eventually submit.
  SubmitResult SubmitUnitGradient(const GradientUpdate& update, int unit_id);

  // Trajectory path (async_trajectory, central_inference, replay_qlearning).
  // Returns kQueued or kDropped(stale); throws QueueFull at capacity.
  SubmitResult SubmitTrajectory(Trajectory traj);
  std::optional<std::vector<Trajectory>> TryPopBatch();
  size_t QueueDepth() const;

  // Learner-side application for trajectory topologies: averages the single
  // update, applies it to the latest snapshot, and publishes.
  SubmitResult ApplyLearnerUpdate(const GradientUpdate& update);
  // Direct publish for learners that replace parameters wholesale
  // (tabular Q-learning); counts as an applied update.
  uint64_t PublishParams(PolicyParameters next);

  // Lag recording happens when a learner consumes a sample.
  void RecordConsumedLag(uint64_t sample_version, uint64_t timestamp);
  LagTracker::Summary LagStats() const;
  uint64_t MaxObservedLag() const;

  FrameAccounting Accounting() const;
  uint64_t updates_applied() const;

  // Fires after every publish triggered through this coordinator.
  void SetPublishCallback(std::function<void(uint64_t)> cb);
  // Fires whenever a trajectory is queued.
  void SetEnqueueCallback(std::function<void()> cb);

 private:
  SubmitResult ApplyEffective(const GradientUpdate& effective);
  SubmitResult ApplyAveraged(std::vector<GradientUpdate> pending);
  void RecordLagLocked(uint64_t sample_version, uint64_t timestamp);

  TopologyConfig config_;
  ParameterStore& store_;
  std::string player_id_;
  double learning_rate_;

  mutable std::mutex mu_;
  std::vector<GradientUpdate> pending_gradients_;  // barrier/quorum epoch state
  uint64_t quorum_epoch_version_ = 0;
  bool quorum_met_this_epoch_ = false;

  std::vector<std::pair<GradientUpdate, uint64_t>> pending_units_;  // allreduce
  uint64_t unit_arrival_counter_ = 0;
  uint64_t allreduce_epoch_version_ = 0;

  std::deque<Trajectory> queue_;
  uint64_t queued_frames_ = 0;

  LagTracker lag_;
  uint64_t max_lag_ = 0;
  FrameAccounting frames_;
  uint64_t updates_applied_ = 0;

  std::function<void(uint64_t)> on_publish_;
  std::function<void()> on_enqueue_;
};

}  // namespace rlmesh

#endif  // RLMESH_COORD_COORDINATOR_HPP_
