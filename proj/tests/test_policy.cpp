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

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "doctest.h"
#include "rlmesh/policy/policy.hpp"

using namespace rlmesh;

namespace {

const ArchSpec kTabular3{Arch::kTabular, 0, 3, 0};
const ArchSpec kLinear{Arch::kLinear, 4, 3, 0};
const ArchSpec kMlp{Arch::kMlp1, 4, 3, 8};

PolicyParameters ZeroParams(const ArchSpec& arch) {
  PolicyParameters p = InitParams(arch, "p0", 1);
  std::fill(p.values.begin(), p.values.end(), 0.0f);
  return p;
}

}  // namespace

TEST_CASE("zero logits give a uniform distribution over legal actions") {
  auto params = ZeroParams(kTabular3);
  Rng rng(0);
  auto r = Infer(params, {}, std::vector<uint8_t>{1, 1, 1}, rng);
  for (double p : r.dist.probs) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("masking renormalizes the distribution") {
  auto params = ZeroParams(kTabular3);
  Rng rng(0);
  auto r = Infer(params, {}, std::vector<uint8_t>{1, 0, 1}, rng);
  CHECK(r.dist.probs[0] == doctest::Approx(0.5));
  CHECK(r.dist.probs[1] == 0.0);
  CHECK(r.dist.probs[2] == doctest::Approx(0.5));
}

TEST_CASE("inference is pure given the rng state") {
  auto params = InitParams(kLinear, "p0", 7);
  std::vector<float> obs = {0.3f, -0.2f, 0.9f, 0.0f};
  std::vector<uint8_t> mask = {1, 1, 1};
  Rng rng_a(5), rng_b(5);
  auto a = Infer(params, obs, mask, rng_a);
  auto b = Infer(params, obs, mask, rng_b);
  CHECK(a.action == b.action);
  CHECK(a.log_prob == b.log_prob);
  CHECK(a.value == b.value);
}

TEST_CASE("distribution invariants hold on random instances") {
  Rng rng(2024);
  for (const ArchSpec& arch : {kTabular3, kLinear, kMlp}) {
    for (int i = 0; i < 50; ++i) {
      auto params = InitParams(arch, "p0", rng.NextU64());
      std::vector<float> obs(arch.input_dim);
      for (auto& x : obs) x = static_cast<float>(rng.UniformRange(-1, 1));
      std::vector<uint8_t> mask(arch.action_dim, 0);
      int legal = 1 + static_cast<int>(rng.UniformInt(arch.action_dim));
      for (int k = 0; k < legal; ++k) mask[k] = 1;
      auto r = Infer(params, obs, mask, rng);
      double total = 0.0;
      for (size_t k = 0; k < r.dist.probs.size(); ++k) {
        total += r.dist.probs[k];
        CHECK(r.dist.probs[k] >= 0.0);
        if (mask[k])
          CHECK(std::exp(r.dist.log_probs[k]) ==
                doctest::Approx(r.dist.probs[k]).epsilon(1e-6));
        else
          CHECK(r.dist.probs[k] == 0.0);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("masked actions are never sampled") {
  auto params = InitParams(kTabular3, "p0", 3);
  std::vector<uint8_t> mask = {1, 0, 1};
  Rng rng(11);
  for (int i = 0; i < 100000; ++i) {
    auto r = Infer(params, {}, mask, rng);
    REQUIRE(r.action != 1);
  }
}

TEST_CASE("all-masked inference fails") {
  auto params = ZeroParams(kTabular3);
  Rng rng(0);
  CHECK_THROWS_WITH_AS(Infer(params, {}, std::vector<uint8_t>{0, 0, 0}, rng),
                       doctest::Contains("AllActionsMasked"), Error);
}

TEST_CASE("observation shape is validated") {
  auto params = InitParams(kLinear, "p0", 7);
  Rng rng(0);
  std::vector<float> bad_obs = {1.0f, 2.0f};
  CHECK_THROWS_WITH_AS(Infer(params, bad_obs, std::vector<uint8_t>{1, 1, 1}, rng),
                       doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("zero gradient leaves values unchanged but bumps the version") {
  auto params = InitParams(kLinear, "p0", 7);
  GradientUpdate u;
  u.grad.assign(params.values.size(), 0.0f);
  u.base_version = params.version;
  u.sample_count = 4;
  auto next = ApplyGradient(params, u, 0.1);
  CHECK(next.values == params.values);
  CHECK(next.version == params.version + 1);
}

TEST_CASE("a full-value gradient with lr 1 zeroes the parameters") {
  auto params = InitParams(kTabular3, "p0", 9);
  GradientUpdate u;
  u.grad.assign(params.values.begin(), params.values.end());
  u.sample_count = 1;
  auto next = ApplyGradient(params, u, 1.0);
  for (float v : next.values) CHECK(v == 0.0f);
}

TEST_CASE("plain SGD updates commute in value") {
  auto params = InitParams(kMlp, "p0", 13);
  Rng rng(1);
  GradientUpdate a, b;
  a.sample_count = b.sample_count = 1;
  for (size_t i = 0; i < params.values.size(); ++i) {
    a.grad.push_back(static_cast<float>(rng.UniformRange(-1, 1)));
    b.grad.push_back(static_cast<float>(rng.UniformRange(-1, 1)));
  }
  auto ab = ApplyGradient(ApplyGradient(params, a, 0.01), b, 0.01);
  auto ba = ApplyGradient(ApplyGradient(params, b, 0.01), a, 0.01);
  CHECK(ab.version == params.version + 2);
  for (size_t i = 0; i < ab.values.size(); ++i)
    CHECK(ab.values[i] == doctest::Approx(ba.values[i]).epsilon(1e-6));
}

TEST_CASE("non-finite gradients are rejected") {
  auto params = InitParams(kTabular3, "p0", 9);
  GradientUpdate u;
  u.grad.assign(params.values.size(), 0.0f);
  u.grad[0] = std::numeric_limits<float>::infinity();
  u.sample_count = 1;
  CHECK_THROWS_WITH_AS(ApplyGradient(params, u, 0.1),
                       doctest::Contains("NonFiniteGradient"), Error);
}

TEST_CASE("mismatched gradient length is rejected") {
  auto params = InitParams(kTabular3, "p0", 9);
  GradientUpdate u;
  u.grad.assign(params.values.size() + 1, 0.0f);
  u.sample_count = 1;
  CHECK_THROWS_WITH_AS(ApplyGradient(params, u, 0.1),
                       doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("apply_gradient never mutates the source snapshot") {
  auto params = InitParams(kLinear, "p0", 21);
  auto before = SerializeParams(params);
  GradientUpdate u;
  u.grad.assign(params.values.size(), 1.0f);
  u.sample_count = 2;
  auto next = ApplyGradient(params, u, 0.5);
  (void)next;
  CHECK(SerializeParams(params) == before);
}

TEST_CASE("serialization round-trips bit-exactly for every arch") {
  Rng rng(77);
  for (const ArchSpec& arch : {kTabular3, kLinear, kMlp}) {
    auto params = InitParams(arch, "player-x", rng.NextU64());
    params.version = 42;
    auto bytes = SerializeParams(params);
    auto back = DeserializeParams(bytes, arch);
    CHECK(back.values == params.values);
    CHECK(back.version == params.version);
    CHECK(back.player_id == params.player_id);
    CHECK(SerializeParams(back) == bytes);
  }
}

TEST_CASE("truncated payloads are rejected") {
  auto params = InitParams(kLinear, "p0", 5);
  auto bytes = SerializeParams(params);
  bytes.resize(bytes.size() - 3);
  CHECK_THROWS_WITH_AS(DeserializeParams(bytes, kLinear),
                       doctest::Contains("CorruptPayload"), Error);
}

TEST_CASE("deserializing into the wrong arch is rejected") {
  auto params = InitParams(kLinear, "p0", 5);
  auto bytes = SerializeParams(params);
  CHECK_THROWS_WITH_AS(DeserializeParams(bytes, kMlp),
                       doctest::Contains("ArchMismatch"), Error);
  // Same tag but different shape also fails.
  ArchSpec wider = kLinear;
  wider.input_dim = 5;
  CHECK_THROWS_WITH_AS(DeserializeParams(bytes, wider),
                       doctest::Contains("ArchMismatch"), Error);
}

TEST_CASE("concurrent readers of a snapshot observe identical bytes") {
  auto params = InitParams(kMlp, "p0", 33);
  auto expected = ParamsChecksum(params);
  std::vector<std::thread> readers;
  std::atomic<int> mismatches{0};
  for (int i = 0; i < 8; ++i) {
    readers.emplace_back([&] {
      for (int j = 0; j < 200; ++j) {
        if (ParamsChecksum(params) != expected) mismatches.fetch_add(1);
      }
    });
  }
  for (auto& t : readers) t.join();
  CHECK(mismatches.load() == 0);
}
