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

#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "doctest.h"
#include "rlmesh/buffer/replay.hpp"

using namespace rlmesh;

namespace {

Trajectory TinyTraj(int tag) {
  Trajectory t;
  Transition s;
  s.obs = {static_cast<float>(tag)};
  s.mask = {1};
  s.reward = static_cast<float>(tag);
  s.done = true;
  s.behavior_log_prob = -1.0f;
  s.param_version = 1;
  s.player_id = "p0";
  t.steps.push_back(std::move(s));
  return t;
}

// 99th-percentile chi-square critical value via the Wilson-Hilferty
// transform; adequate for the df range used here.
double ChiSquareCrit99(double df) {
  const double z = 2.3263478740408408;
  double a = 2.0 / (9.0 * df);
  double x = 1.0 - a + z * std::sqrt(a);
  return df * x * x * x;
}

}  // namespace

TEST_CASE("a push lands in an empty buffer") {
  FifoBuffer buf(8);
  buf.Push(TinyTraj(1));
  CHECK(buf.size() == 1);
}

TEST_CASE("fifo eviction drops the oldest entry") {
  FifoBuffer buf(2);
  uint64_t first = buf.Push(TinyTraj(1));
  buf.Push(TinyTraj(2));
  buf.Push(TinyTraj(3));
  CHECK(buf.size() == 2);
  CHECK(buf.evicted_count() == 1);
  Rng rng(0);
  auto all = buf.Sample(2, rng);
  for (const auto& [id, payload] : all) CHECK(id != first);
}

TEST_CASE("fifo sampling the whole buffer is a permutation") {
  FifoBuffer buf(16);
  std::set<uint64_t> ids;
  for (int i = 0; i < 10; ++i) ids.insert(buf.Push(TinyTraj(i)));
  Rng rng(1);
  auto all = buf.Sample(10, rng);
  std::set<uint64_t> got;
  for (const auto& [id, payload] : all) got.insert(id);
  CHECK(got == ids);
}

TEST_CASE("sampling an empty buffer fails") {
  FifoBuffer buf(4);
  Rng rng(0);
  CHECK_THROWS_WITH_AS(buf.Sample(1, rng), doctest::Contains("EmptyBuffer"), Error);
  PrioritizedBuffer pbuf(4);
  CHECK_THROWS_WITH_AS(pbuf.Sample(1, rng), doctest::Contains("EmptyBuffer"), Error);
}

TEST_CASE("a single entry is always the sample") {
  PrioritizedBuffer buf(4);
  uint64_t id = buf.Push(TinyTraj(7), 2.5);
  Rng rng(0);
  auto got = buf.Sample(1, rng);
  CHECK(got[0].first == id);
}

TEST_CASE("sampling follows priority proportions") {
  PrioritizedBuffer buf(4);
  buf.Push(TinyTraj(0), 1.0);
  uint64_t heavy = buf.Push(TinyTraj(1), 3.0);
  Rng rng(99);
  int hits = 0;
  const int kDraws = 100000;
  for (const auto& [id, payload] : buf.Sample(kDraws, rng))
    if (id == heavy) ++hits;
  CHECK(static_cast<double>(hits) / kDraws == doctest::Approx(0.75).epsilon(0.0134));
}

TEST_CASE("the sum-tree root tracks the live priority sum") {
  PrioritizedBuffer buf(8);
  Rng rng(5);
  std::map<uint64_t, double> live;
  for (int i = 0; i < 200; ++i) {
    double pri = rng.UniformRange(0.1, 4.0);
    uint64_t id = buf.Push(TinyTraj(i), pri);
    live[id] = pri;
    while (live.size() > 8) live.erase(live.begin());
    double expected = 0.0;
    for (const auto& [k, v] : live) expected += v;
    CHECK(buf.TotalPriority() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(buf.AuditTree());
  }
}

TEST_CASE("priority updates reshape the sampling distribution") {
  PrioritizedBuffer buf(8);
  std::vector<uint64_t> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(buf.Push(TinyTraj(i), 1.0 + i));
  std::vector<double> equal(4, 2.0);
  buf.UpdatePriorities(ids, equal);
  CHECK(buf.TotalPriority() == doctest::Approx(8.0));

  Rng rng(123);
  std::map<uint64_t, int> counts;
  const int kDraws = 100000;
  for (const auto& [id, payload] : buf.Sample(kDraws, rng)) counts[id]++;
  for (const auto& [id, n] : counts)
    CHECK(static_cast<double>(n) / kDraws == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("updating an unknown id fails") {
  PrioritizedBuffer buf(2);
  buf.Push(TinyTraj(0), 1.0);
  std::vector<uint64_t> ids = {999};
  std::vector<double> pri = {1.0};
  CHECK_THROWS_WITH_AS(buf.UpdatePriorities(ids, pri), doctest::Contains("UnknownId"),
                       Error);
  std::vector<uint64_t> live_id = {1};
  std::vector<double> bad = {-1.0};
  CHECK_THROWS_WITH_AS(buf.UpdatePriorities(live_id, bad),
                       doctest::Contains("NonPositivePriority"), Error);
}

TEST_CASE("prioritized eviction is oldest-first") {
  PrioritizedBuffer buf(2);
  uint64_t a = buf.Push(TinyTraj(0), 100.0);  // oldest, highest priority
  buf.Push(TinyTraj(1), 1.0);
  buf.Push(TinyTraj(2), 1.0);
  CHECK(buf.size() == 2);
  CHECK(buf.evicted_count() == 1);
  std::vector<uint64_t> ids = {a};
  std::vector<double> pri = {1.0};
  CHECK_THROWS_AS(buf.UpdatePriorities(ids, pri), Error);
}

TEST_CASE("prioritized sampling matches proportions under chi-square") {
  Rng meta(314159);
  for (int trial = 0; trial < 5; ++trial) {
    size_t n = 2 + meta.UniformInt(63);
    PrioritizedBuffer buf(64);
    std::vector<double> priorities(n);
    std::map<uint64_t, size_t> index_of;
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      priorities[i] = meta.UniformRange(0.05, 5.0);
      total += priorities[i];
      index_of[buf.Push(TinyTraj(static_cast<int>(i)), priorities[i])] = i;
    }
    const int kDraws = 100000;
    Rng rng(meta.NextU64());
    std::vector<int> counts(n, 0);
    for (const auto& [id, payload] : buf.Sample(kDraws, rng))
      counts[index_of[id]]++;
    double stat = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double expected = kDraws * priorities[i] / total;
      double diff = counts[i] - expected;
      stat += diff * diff / expected;
    }
    // p > 0.01 <=> statistic below the 99th-percentile critical value.
    CHECK(stat < ChiSquareCrit99(static_cast<double>(n - 1)));
  }
}

TEST_CASE("sum-tree audit survives a long random operation mix") {
  PrioritizedBuffer buf(256);
  Rng rng(777);
  std::vector<uint64_t> live;
  for (int i = 0; i < 100000; ++i) {
    double roll = rng.Uniform01();
    if (roll < 0.5 || live.empty()) {
      live.push_back(buf.Push(TinyTraj(i), rng.UniformRange(0.01, 10.0)));
      if (live.size() > 256) live.erase(live.begin());
    } else if (roll < 0.8) {
      uint64_t id = live[rng.UniformInt(live.size())];
      std::vector<uint64_t> ids = {id};
      std::vector<double> pri = {rng.UniformRange(0.01, 10.0)};
      buf.UpdatePriorities(ids, pri);
    } else {
      buf.Sample(1 + rng.UniformInt(4), rng);
    }
  }
  CHECK(buf.AuditTree());
}

TEST_CASE("append then finish moves a whole episode") {
  EpisodeBuffer buf;
  for (int i = 0; i < 3; ++i) {
    Transition t = TinyTraj(i).steps[0];
    t.done = false;
    buf.AppendStep("ep-1", std::move(t));
  }
  CHECK(buf.unfinished_count() == 1);
  CHECK(buf.finished_count() == 0);
  Trajectory traj = buf.Finish("ep-1", 0.5f);
  CHECK(traj.size() == 3);
  CHECK(traj.bootstrap_value == 0.5f);
  CHECK(buf.unfinished_count() == 0);
  CHECK(buf.finished_count() == 1);
  CHECK_THROWS_WITH_AS(buf.Finish("ep-1", 0.0f), doctest::Contains("UnknownEpisode"),
                       Error);
}

TEST_CASE("finishing an unknown episode fails") {
  EpisodeBuffer buf;
  CHECK_THROWS_WITH_AS(buf.Finish("nope", 0.0f), doctest::Contains("UnknownEpisode"),
                       Error);
}

TEST_CASE("interleaved episodes keep their own steps in order") {
  EpisodeBuffer buf;
  Rng rng(21);
  std::map<std::string, std::vector<float>> ground_truth;
  std::vector<std::string> keys = {"a", "b", "c", "d"};
  int counter = 0;
  for (int i = 0; i < 400; ++i) {
    const std::string& key = keys[rng.UniformInt(keys.size())];
    Transition t = TinyTraj(counter).steps[0];
    t.done = false;
    ground_truth[key].push_back(t.reward);
    buf.AppendStep(key, std::move(t));
    ++counter;
  }
  // Finish in a scrambled order.
  for (const std::string& key : {"c", "a", "d", "b"}) {
    Trajectory traj = buf.Finish(key, 0.0f);
    REQUIRE(traj.size() == ground_truth[key].size());
    for (size_t i = 0; i < traj.size(); ++i)
      CHECK(traj.steps[i].reward == ground_truth[key][i]);
  }
  // Nothing lost or duplicated across the move.
  size_t total = 0;
  while (auto t = buf.PopFinished()) total += t->size();
  CHECK(total == 400);
}

TEST_CASE("steps are invisible to consumers until finish") {
  EpisodeBuffer buf;
  buf.AppendStep("ep", TinyTraj(0).steps[0]);
  CHECK(!buf.PopFinished().has_value());
  buf.Finish("ep", 0.0f);
  CHECK(buf.PopFinished().has_value());
}

TEST_CASE("concurrent producers never corrupt episode assembly") {
  EpisodeBuffer buf;
  constexpr int kPerProducer = 500;
  auto produce = [&](int producer) {
    std::string key = "worker-" + std::to_string(producer);
    for (int i = 0; i < kPerProducer; ++i) {
      Transition t;
      t.obs = {static_cast<float>(i)};
      t.reward = static_cast<float>(i);
      t.behavior_log_prob = -1.0f;
      t.param_version = 1;
      t.player_id = key;
      buf.AppendStep(key, std::move(t));
    }
  };
  std::vector<std::thread> threads;
  for (int p = 0; p < 4; ++p) threads.emplace_back(produce, p);
  for (auto& t : threads) t.join();
  for (int p = 0; p < 4; ++p) {
    Trajectory traj = buf.Finish("worker-" + std::to_string(p), 0.0f);
    REQUIRE(traj.size() == kPerProducer);
    for (int i = 0; i < kPerProducer; ++i)
      CHECK(traj.steps[static_cast<size_t>(i)].reward == static_cast<float>(i));
  }
}
