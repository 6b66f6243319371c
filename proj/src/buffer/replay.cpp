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

#include "rlmesh/buffer/replay.hpp"

#include <algorithm>
#include <cmath>

namespace rlmesh {

FifoBuffer::FifoBuffer(size_t capacity) : capacity_(capacity) {
  RLMESH_CHECK(capacity >= 1, "capacity must be positive");
}

uint64_t FifoBuffer::Push(Trajectory traj) {
  std::lock_guard lock(mu_);
  uint64_t id = next_id_++;
  entries_.push_back({id, std::make_shared<const Trajectory>(std::move(traj))});
  if (entries_.size() > capacity_) {
    entries_.pop_front();
    ++evicted_;
  }
  return id;
}

std::vector<std::pair<uint64_t, TrajectoryRef>> FifoBuffer::Sample(size_t k,
                                                                   Rng& rng) const {
  std::lock_guard lock(mu_);
  if (entries_.empty()) Throw(ErrorCode::kEmptyBuffer, "FIFO buffer is empty");
  RLMESH_CHECK(k <= entries_.size(), "sample without replacement needs k <= size");
  // Partial Fisher-Yates over an index vector.
  std::vector<size_t> idx(entries_.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<std::pair<uint64_t, TrajectoryRef>> out;
  out.reserve(k);
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(rng.UniformInt(idx.size() - i));
    std::swap(idx[i], idx[j]);
    const Entry& e = entries_[idx[i]];
    out.emplace_back(e.id, e.payload);
  }
  return out;
}

size_t FifoBuffer::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

uint64_t FifoBuffer::evicted_count() const {
  std::lock_guard lock(mu_);
  return evicted_;
}

SumTree::SumTree(size_t capacity) : capacity_(capacity) {
  RLMESH_CHECK(capacity >= 1, "capacity must be positive");
  base_ = 1;
  while (base_ < capacity) base_ <<= 1;
  tree_.assign(2 * base_, 0.0);
}

void SumTree::Set(size_t slot, double value) {
  RLMESH_CHECK(slot < capacity_, "slot out of range");
  size_t i = base_ + slot;
  tree_[i] = value;
  for (i >>= 1; i >= 1; i >>= 1) {
    tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
    if (i == 1) break;
  }
}

size_t SumTree::FindPrefix(double u) const {
  size_t i = 1;
  while (i < base_) {
    double left = tree_[2 * i];
    if (u < left) {
      i = 2 * i;
    } else {
      u -= left;
      i = 2 * i + 1;
    }
  }
  size_t slot = i - base_;
  // Rounding at the right edge may select a zero-priority leaf; step back to
  // the nearest live one.
  while (slot > 0 && tree_[base_ + slot] <= 0.0) --slot;
  return slot;
}

bool SumTree::Audit() const {
  for (size_t i = 1; i < base_; ++i) {
    if (tree_[i] != tree_[2 * i] + tree_[2 * i + 1]) return false;
  }
  return true;
}

PrioritizedBuffer::PrioritizedBuffer(size_t capacity)
    : capacity_(capacity), slots_(capacity), tree_(capacity) {
  RLMESH_CHECK(capacity >= 1, "capacity must be positive");
}

uint64_t PrioritizedBuffer::Push(Trajectory traj, double priority) {
  if (!(priority > 0.0) || !std::isfinite(priority))
    Throw(ErrorCode::kNonPositivePriority, "priority must be positive and finite");
  std::lock_guard lock(mu_);
  uint64_t id = next_id_++;
  size_t slot = static_cast<size_t>((id - 1) % capacity_);
  if (slots_[slot].payload) {
    id_to_slot_.erase(slots_[slot].id);
    ++evicted_;
    --live_;
  }
  slots_[slot] = {id, std::make_shared<const Trajectory>(std::move(traj))};
  id_to_slot_[id] = slot;
  tree_.Set(slot, priority);
  ++live_;
  return id;
}

std::vector<std::pair<uint64_t, TrajectoryRef>> PrioritizedBuffer::Sample(
    size_t k, Rng& rng) const {
  std::lock_guard lock(mu_);
  if (live_ == 0) Throw(ErrorCode::kEmptyBuffer, "prioritized buffer is empty");
  std::vector<std::pair<uint64_t, TrajectoryRef>> out;
  out.reserve(k);
  double total = tree_.Total();
  for (size_t i = 0; i < k; ++i) {
    size_t slot = tree_.FindPrefix(rng.Uniform01() * total);
    const Slot& s = slots_[slot];
    RLMESH_CHECK(s.payload != nullptr, "sampled an empty slot");
    out.emplace_back(s.id, s.payload);
  }
  return out;
}

void PrioritizedBuffer::UpdatePriorities(std::span<const uint64_t> ids,
                                         std::span<const double> new_priorities) {
  RLMESH_CHECK(ids.size() == new_priorities.size(), "ids/priorities length mismatch");
  std::lock_guard lock(mu_);
  // Validate everything first so a failed update leaves the tree untouched.
  for (size_t i = 0; i < ids.size(); ++i) {
    if (!(new_priorities[i] > 0.0) || !std::isfinite(new_priorities[i]))
      Throw(ErrorCode::kNonPositivePriority, "priority must be positive and finite");
    if (!id_to_slot_.contains(ids[i]))
      Throw(ErrorCode::kUnknownId, "id " + std::to_string(ids[i]) + " is not live");
  }
  for (size_t i = 0; i < ids.size(); ++i)
    tree_.Set(id_to_slot_.at(ids[i]), new_priorities[i]);
}

size_t PrioritizedBuffer::size() const {
  std::lock_guard lock(mu_);
  return live_;
}

uint64_t PrioritizedBuffer::evicted_count() const {
  std::lock_guard lock(mu_);
  return evicted_;
}

double PrioritizedBuffer::TotalPriority() const {
  std::lock_guard lock(mu_);
  return tree_.Total();
}

bool PrioritizedBuffer::AuditTree() const {
  std::lock_guard lock(mu_);
  return tree_.Audit();
}

void EpisodeBuffer::AppendStep(const std::string& episode_key, Transition step) {
  std::lock_guard lock(mu_);
  unfinished_[episode_key].push_back(std::move(step));
}

Trajectory EpisodeBuffer::Finish(const std::string& episode_key, float bootstrap_value) {
  std::lock_guard lock(mu_);
  auto it = unfinished_.find(episode_key);
  if (it == unfinished_.end())
    Throw(ErrorCode::kUnknownEpisode, "no unfinished episode " + episode_key);
  if (it->second.empty())
    Throw(ErrorCode::kFinishEmptyEpisode, "episode " + episode_key + " has no steps");
  Trajectory traj;
  traj.steps = std::move(it->second);
  traj.bootstrap_value = bootstrap_value;
  unfinished_.erase(it);
  finished_.push_back(traj);
  return traj;
}

std::optional<Trajectory> EpisodeBuffer::PopFinished() {
  std::lock_guard lock(mu_);
  if (finished_.empty()) return std::nullopt;
  Trajectory t = std::move(finished_.front());
  finished_.pop_front();
  return t;
}

size_t EpisodeBuffer::unfinished_count() const {
  std::lock_guard lock(mu_);
  return unfinished_.size();
}

size_t EpisodeBuffer::finished_count() const {
  std::lock_guard lock(mu_);
  return finished_.size();
}

}  // namespace rlmesh
