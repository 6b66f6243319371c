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

#ifndef RLMESH_POLICY_POLICY_HPP_
#define RLMESH_POLICY_POLICY_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rlmesh/core/bytes.hpp"
#include "rlmesh/core/rng.hpp"

namespace rlmesh {

enum class Arch : uint8_t {
  kTabular = 1,  // per-state logit and value tables; input is a one-hot state
  kLinear = 2,   // logits = Wp x + bp, value = wv . x + bv
  kMlp1 = 3,     // one tanh hidden layer shared by policy and value heads
};

struct ArchSpec {
  Arch kind = Arch::kTabular;
  int input_dim = 0;
  int action_dim = 0;
  int hidden_dim = 0;  // mlp1 only

  // Tabular interprets a zero-dim observation as a single state.
  int num_states() const { return input_dim > 0 ? input_dim : 1; }
  size_t ParamCount() const;
  bool operator==(const ArchSpec&) const = default;
};

// Immutable once published: updates always produce a fresh snapshot with the
// next version. All stored values are float32 so that serialization is an
// exact round trip and every transport sees identical parameters.
struct PolicyParameters {
  uint64_t version = 0;
  std::string player_id;
  ArchSpec arch;
  std::vector<float> values;
};

struct ActionDistribution {
  std::vector<double> probs;      // exactly 0 for masked actions
  std::vector<double> log_probs;  // -inf for masked actions
};

struct InferResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  ActionDistribution dist;
};

// Gradient over a batch. `grad` holds the summed per-sample gradient; the
// effective step is grad / sample_count, applied by ApplyGradient.
struct GradientUpdate {
  std::vector<float> grad;
  uint64_t base_version = 0;
  int64_t sample_count = 0;
  std::string producer_id;
};

PolicyParameters InitParams(const ArchSpec& arch, const std::string& player_id,
                            uint64_t seed, double init_scale = 0.05);

// Forward pass results plus the intermediates backprop needs.
struct ForwardCache {
  std::vector<double> logits;
  double value = 0.0;
  std::vector<double> hidden;  // post-tanh activations (mlp1)
  int state = 0;               // resolved state index (tabular)
};

ForwardCache Forward(const PolicyParameters& params, std::span<const float> obs);

// Accumulates d(loss)/d(params) into `grad` (length ParamCount) given the
// loss gradients at the logits and the value output. Masked actions must
// carry zero in g_logits.
void Backward(const PolicyParameters& params, std::span<const float> obs,
              const ForwardCache& cache, std::span<const double> g_logits,
              double g_value, std::span<double> grad);

// Softmax over legal actions only; masked actions get probability exactly 0.
ActionDistribution MaskedSoftmax(std::span<const double> logits,
                                 std::span<const uint8_t> mask);

InferResult Infer(const PolicyParameters& params, std::span<const float> obs,
                  std::span<const uint8_t> mask, Rng& rng);

PolicyParameters ApplyGradient(const PolicyParameters& params,
                               const GradientUpdate& update, double learning_rate);

// Wire encoding: arch tag byte, u32 player-id length + bytes, u64 version,
// u32 count, count x f32 little-endian.
Bytes SerializeParams(const PolicyParameters& params);
PolicyParameters DeserializeParams(std::span<const uint8_t> bytes,
                                   const ArchSpec& declared);

uint64_t ParamsChecksum(const PolicyParameters& params);

}  // namespace rlmesh

#endif  // RLMESH_POLICY_POLICY_HPP_
