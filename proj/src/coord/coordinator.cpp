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

#include "rlmesh/coord/coordinator.hpp"

#include <algorithm>
#include <cmath>

namespace rlmesh {

const char* TopologyKindName(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kAsyncGradient: return "async_gradient";
    case TopologyKind::kAsyncTrajectory: return "async_trajectory";
    case TopologyKind::kCentralInference: return "central_inference";
    case TopologyKind::kSyncBarrier: return "sync_barrier";
    case TopologyKind::kSyncQuorum: return "sync_quorum";
    case TopologyKind::kBundledAllreduce: return "bundled_allreduce";
    case TopologyKind::kReplayQlearning: return "replay_qlearning";
  }
  return "unknown";
}

TopologyKind ParseTopologyKind(const std::string& name) {
  for (TopologyKind k :
       {TopologyKind::kAsyncGradient, TopologyKind::kAsyncTrajectory,
        TopologyKind::kCentralInference, TopologyKind::kSyncBarrier,
        TopologyKind::kSyncQuorum, TopologyKind::kBundledAllreduce,
        TopologyKind::kReplayQlearning}) {
    if (name == TopologyKindName(k)) return k;
  }
  Throw(ErrorCode::kConfigInvalid, "unknown topology kind: " + name);
}

bool IsSyncKind(TopologyKind kind) {
  return kind == TopologyKind::kSyncBarrier || kind == TopologyKind::kSyncQuorum ||
         kind == TopologyKind::kBundledAllreduce;
}

void TopologyConfig::Validate() const {
  if (actor_count < 1) Throw(ErrorCode::kConfigInvalid, "actor_count must be >= 1");
  if (learner_count < 1) Throw(ErrorCode::kConfigInvalid, "learner_count must be >= 1");
  if (quorum_fraction <= 0.0 || quorum_fraction > 1.0)
    Throw(ErrorCode::kConfigInvalid, "quorum_fraction must be in (0, 1]");
  if (drop_fraction < 0.0 || drop_fraction >= 1.0)
    Throw(ErrorCode::kConfigInvalid, "drop_fraction must be in [0, 1)");
  if (kind != TopologyKind::kSyncQuorum && quorum_fraction != 1.0)
    Throw(ErrorCode::kConfigInvalid, "quorum_fraction applies to sync_quorum only");
  if (kind != TopologyKind::kBundledAllreduce && drop_fraction != 0.0)
    Throw(ErrorCode::kConfigInvalid, "drop_fraction applies to bundled_allreduce only");
  if (batch_size < 1) Throw(ErrorCode::kConfigInvalid, "batch_size must be >= 1");
  if (queue_capacity < 1) Throw(ErrorCode::kConfigInvalid, "queue_capacity must be >= 1");
  if (inference_batch_max < 1)
    Throw(ErrorCode::kConfigInvalid, "inference_batch_max must be >= 1");
}

GradientUpdate AverageUpdates(std::span<const GradientUpdate> updates) {
  RLMESH_CHECK(!updates.empty(), "nothing to average");
  const size_t len = updates.front().grad.size();
  std::vector<const GradientUpdate*> sorted;
  sorted.reserve(updates.size());
  for (const auto& u : updates) {
    if (u.grad.size() != len)
      Throw(ErrorCode::kShapeMismatch, "gradient lengths differ across updates");
    sorted.push_back(&u);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->producer_id < b->producer_id;
  });

  std::vector<double> acc(len, 0.0);
  for (const GradientUpdate* u : sorted) {
    double inv = 1.0 / static_cast<double>(u->sample_count);
    for (size_t i = 0; i < len; ++i) acc[i] += static_cast<double>(u->grad[i]) * inv;
  }
  GradientUpdate mean;
  mean.grad.resize(len);
  double inv_n = 1.0 / static_cast<double>(sorted.size());
  for (size_t i = 0; i < len; ++i) mean.grad[i] = static_cast<float>(acc[i] * inv_n);
  mean.base_version = sorted.front()->base_version;
  mean.sample_count = 1;
  mean.producer_id = "mean";
  return mean;
}

GradientUpdate AllreduceApply(
    std::span<const std::pair<GradientUpdate, uint64_t>> units, double drop_fraction) {
  RLMESH_CHECK(!units.empty(), "no units to reduce");
  uint64_t base = units.front().first.base_version;
  for (const auto& [update, order] : units) {
    if (update.base_version != base)
      Throw(ErrorCode::kMixedVersions, "allreduce units disagree on base version");
  }
  size_t drop = static_cast<size_t>(std::floor(drop_fraction * units.size()));
  RLMESH_CHECK(drop < units.size(), "drop_fraction would drop every unit");
  std::vector<std::pair<GradientUpdate, uint64_t>> by_arrival(units.begin(), units.end());
  std::sort(by_arrival.begin(), by_arrival.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<GradientUpdate> kept;
  kept.reserve(units.size() - drop);
  for (size_t i = 0; i + drop < by_arrival.size(); ++i)
    kept.push_back(by_arrival[i].first);
  return AverageUpdates(kept);
}

void LagTracker::Record(uint64_t actor_version, uint64_t learner_version,
                        uint64_t /*timestamp*/) {
  RLMESH_CHECK(learner_version >= actor_version, "negative parameter lag");
  deltas_.push_back(learner_version - actor_version);
  while (deltas_.size() > window_) deltas_.pop_front();
}

LagTracker::Summary LagTracker::Stats() const {
  Summary s;
  if (deltas_.empty()) return s;
  s.count = deltas_.size();
  s.min = deltas_.front();
  s.max = deltas_.front();
  double total = 0.0;
  for (uint64_t d : deltas_) {
    s.min = std::min(s.min, d);
    s.max = std::max(s.max, d);
    total += static_cast<double>(d);
    s.histogram[d]++;
  }
  s.mean = total / static_cast<double>(s.count);
  return s;
}

Coordinator::Coordinator(const TopologyConfig& config, ParameterStore& store,
                         std::string player_id, double learning_rate)
    : config_(config),
      store_(store),
      player_id_(std::move(player_id)),
      learning_rate_(learning_rate) {
  config_.Validate();
}

SubmitResult Coordinator::ApplyEffective(const GradientUpdate& effective) {
  ParamsRef current = store_.FetchLatest(player_id_);
  PolicyParameters next = ApplyGradient(*current, effective, learning_rate_);
  uint64_t version = store_.Publish(player_id_, std::move(next));
  ++updates_applied_;
  if (on_publish_) on_publish_(version);
  return {SubmitResult::Status::kApplied, version, ""};
}

SubmitResult Coordinator::ApplyAveraged(std::vector<GradientUpdate> pending) {
  GradientUpdate mean = AverageUpdates(pending);
  for (const GradientUpdate& u : pending)
    frames_.consumed += static_cast<uint64_t>(u.sample_count);
  return ApplyEffective(mean);
}

SubmitResult Coordinator::SubmitGradient(const GradientUpdate& update) {
  std::lock_guard lock(mu_);
  const uint64_t current = store_.CurrentVersion(player_id_);
  if (update.grad.size() != store_.FetchLatest(player_id_)->values.size())
    Throw(ErrorCode::kShapeMismatch, "gradient does not match parameter shape");

  switch (config_.kind) {
    case TopologyKind::kAsyncGradient: {
      uint64_t staleness = current - std::min(update.base_version, current);
      frames_.produced += static_cast<uint64_t>(update.sample_count);
      if (staleness > config_.max_staleness) {
        frames_.dropped += static_cast<uint64_t>(update.sample_count);
        return {SubmitResult::Status::kDropped, 0, "stale"};
      }
      RecordLagLocked(update.base_version, 0);
      frames_.consumed += static_cast<uint64_t>(update.sample_count);
      std::vector<GradientUpdate> one = {update};
      return ApplyEffective(AverageUpdates(one));
    }
    case TopologyKind::kSyncBarrier:
    case TopologyKind::kSyncQuorum: {
      if (update.base_version != current) {
        frames_.produced += static_cast<uint64_t>(update.sample_count);
        frames_.dropped += static_cast<uint64_t>(update.sample_count);
        return {SubmitResult::Status::kDropped, 0, "late"};
      }
      frames_.produced += static_cast<uint64_t>(update.sample_count);
      RecordLagLocked(update.base_version, 0);
      pending_gradients_.push_back(update);
      size_t need = config_.kind == TopologyKind::kSyncBarrier
                        ? static_cast<size_t>(config_.actor_count)
                        : static_cast<size_t>(std::ceil(config_.quorum_fraction *
                                                        config_.actor_count));
      if (pending_gradients_.size() < need) return {SubmitResult::Status::kHeld, 0, ""};
      std::vector<GradientUpdate> batch = std::move(pending_gradients_);
      pending_gradients_.clear();
      return ApplyAveraged(std::move(batch));
    }
    default:
      Throw(ErrorCode::kConfigInvalid,
            std::string("topology ") + TopologyKindName(config_.kind) +
                " does not accept plain gradients");
  }
}

SubmitResult Coordinator::SubmitUnitGradient(const GradientUpdate& update,
                                             int /*unit_id*/) {
  std::lock_guard lock(mu_);
  RLMESH_CHECK(config_.kind == TopologyKind::kBundledAllreduce,
               "unit gradients belong to bundled_allreduce");
  const uint64_t current = store_.CurrentVersion(player_id_);
  frames_.produced += static_cast<uint64_t>(update.sample_count);
  if (update.base_version != current) {
    frames_.dropped += static_cast<uint64_t>(update.sample_count);
    return {SubmitResult::Status::kDropped, 0, "preempted"};
  }
  RecordLagLocked(update.base_version, 0);
  pending_units_.emplace_back(update, unit_arrival_counter_++);
  size_t drop = static_cast<size_t>(
      std::floor(config_.drop_fraction * config_.actor_count));
  size_t need = static_cast<size_t>(config_.actor_count) - drop;
  if (pending_units_.size() < need) return {SubmitResult::Status::kHeld, 0, ""};

  std::vector<GradientUpdate> kept;
  kept.reserve(pending_units_.size());
  for (auto& [u, order] : pending_units_) kept.push_back(std::move(u));
  pending_units_.clear();
  return ApplyAveraged(std::move(kept));
}

SubmitResult Coordinator::SubmitTrajectory(Trajectory traj) {
  std::function<void()> notify;
  SubmitResult result;
  {
    std::lock_guard lock(mu_);
    ValidateTrajectory(traj);
    const uint64_t current = store_.CurrentVersion(player_id_);
    uint64_t stamp = traj.steps.front().param_version;
    for (const Transition& t : traj.steps) stamp = std::min(stamp, t.param_version);
    uint64_t frames = traj.size();
    uint64_t staleness = current - std::min(stamp, current);
    if (staleness > config_.max_staleness) {
      frames_.produced += frames;
      frames_.dropped += frames;
      return {SubmitResult::Status::kDropped, 0, "stale"};
    }
    if (queue_.size() >= config_.queue_capacity)
      Throw(ErrorCode::kQueueFull,
            "trajectory queue at capacity " + std::to_string(config_.queue_capacity));
    frames_.produced += frames;
    queued_frames_ += frames;
    queue_.push_back(std::move(traj));
    notify = on_enqueue_;
    result = {SubmitResult::Status::kQueued, 0, ""};
  }
  if (notify) notify();
  return result;
}

std::optional<std::vector<Trajectory>> Coordinator::TryPopBatch() {
  std::lock_guard lock(mu_);
  if (queue_.size() < config_.batch_size) return std::nullopt;
  std::vector<Trajectory> batch;
  batch.reserve(config_.batch_size);
  for (size_t i = 0; i < config_.batch_size; ++i) {
    Trajectory traj = std::move(queue_.front());
    queue_.pop_front();
    uint64_t stamp = traj.steps.front().param_version;
    for (const Transition& t : traj.steps) stamp = std::min(stamp, t.param_version);
    RecordLagLocked(stamp, 0);
    queued_frames_ -= traj.size();
    frames_.consumed += traj.size();
    batch.push_back(std::move(traj));
  }
  return batch;
}

size_t Coordinator::QueueDepth() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

SubmitResult Coordinator::ApplyLearnerUpdate(const GradientUpdate& update) {
  std::lock_guard lock(mu_);
  std::vector<GradientUpdate> one = {update};
  return ApplyEffective(AverageUpdates(one));
}

uint64_t Coordinator::PublishParams(PolicyParameters next) {
  std::lock_guard lock(mu_);
  uint64_t version = store_.Publish(player_id_, std::move(next));
  ++updates_applied_;
  if (on_publish_) on_publish_(version);
  return version;
}

void Coordinator::RecordConsumedLag(uint64_t sample_version, uint64_t timestamp) {
  std::lock_guard lock(mu_);
  RecordLagLocked(sample_version, timestamp);
}

void Coordinator::RecordLagLocked(uint64_t sample_version, uint64_t timestamp) {
  const uint64_t learner_version = store_.CurrentVersion(player_id_);
  uint64_t delta = learner_version - std::min(sample_version, learner_version);
  if (IsSyncKind(config_.kind))
    RLMESH_CHECK(delta == 0, "sync topology consumed a lagged sample");
  lag_.Record(learner_version - delta, learner_version, timestamp);
  max_lag_ = std::max(max_lag_, delta);
}

LagTracker::Summary Coordinator::LagStats() const {
  std::lock_guard lock(mu_);
  return lag_.Stats();
}

uint64_t Coordinator::MaxObservedLag() const {
  std::lock_guard lock(mu_);
  return max_lag_;
}

FrameAccounting Coordinator::Accounting() const {
  std::lock_guard lock(mu_);
  FrameAccounting a = frames_;
  a.queued = queued_frames_;
  for (const GradientUpdate& u : pending_gradients_)
    a.queued += static_cast<uint64_t>(u.sample_count);
  for (const auto& [u, order] : pending_units_)
    a.queued += static_cast<uint64_t>(u.sample_count);
  return a;
}

uint64_t Coordinator::updates_applied() const {
  std::lock_guard lock(mu_);
  return updates_applied_;
}

void Coordinator::SetPublishCallback(std::function<void(uint64_t)> cb) {
  std::lock_guard lock(mu_);
  on_publish_ = std::move(cb);
}

void Coordinator::SetEnqueueCallback(std::function<void()> cb) {
  std::lock_guard lock(mu_);
  on_enqueue_ = std::move(cb);
}

}  // namespace rlmesh
