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

#include "rlmesh/policy/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rlmesh {

namespace {

// Flat layout offsets per arch. Tabular: [logits SxA][values S].
// Linear: [Wp Axd][bp A][wv d][bv 1]. Mlp1: [W1 Hxd][b1 H][W2 AxH][b2 A]
// [wv H][bv 1]. All matrices row-major.
struct Layout {
  size_t policy_w = 0, policy_b = 0, value_w = 0, value_b = 0;
  size_t trunk_w = 0, trunk_b = 0;
};

Layout LayoutOf(const ArchSpec& a) {
  Layout l;
  size_t d = static_cast<size_t>(a.input_dim);
  size_t m = static_cast<size_t>(a.action_dim);
  size_t h = static_cast<size_t>(a.hidden_dim);
  switch (a.kind) {
    case Arch::kTabular: {
      size_t s = static_cast<size_t>(a.num_states());
      l.policy_w = 0;
      l.value_w = s * m;
      break;
    }
    case Arch::kLinear:
      l.policy_w = 0;
      l.policy_b = m * d;
      l.value_w = m * d + m;
      l.value_b = m * d + m + d;
      break;
    case Arch::kMlp1:
      l.trunk_w = 0;
      l.trunk_b = h * d;
      l.policy_w = h * d + h;
      l.policy_b = h * d + h + m * h;
      l.value_w = h * d + h + m * h + m;
      l.value_b = h * d + h + m * h + m + h;
      break;
  }
  return l;
}

int StateIndex(const ArchSpec& arch, std::span<const float> obs) {
  if (arch.input_dim == 0) return 0;
  size_t best = 0;
  for (size_t i = 1; i < obs.size(); ++i)
    if (obs[i] > obs[best]) best = i;
  return static_cast<int>(best);
}

void CheckObsShape(const ArchSpec& arch, std::span<const float> obs) {
  if (static_cast<int>(obs.size()) != arch.input_dim)
    Throw(ErrorCode::kShapeMismatch,
          "observation dim " + std::to_string(obs.size()) + " does not match arch input dim " +
              std::to_string(arch.input_dim));
}

}  // namespace

size_t ArchSpec::ParamCount() const {
  size_t d = static_cast<size_t>(input_dim);
  size_t m = static_cast<size_t>(action_dim);
  size_t h = static_cast<size_t>(hidden_dim);
  switch (kind) {
    case Arch::kTabular: {
      size_t s = static_cast<size_t>(num_states());
      return s * m + s;
    }
    case Arch::kLinear:
      return m * d + m + d + 1;
    case Arch::kMlp1:
      return h * d + h + m * h + m + h + 1;
  }
  return 0;
}

PolicyParameters InitParams(const ArchSpec& arch, const std::string& player_id,
                            uint64_t seed, double init_scale) {
  RLMESH_CHECK(arch.action_dim >= 1, "arch needs at least one action");
  RLMESH_CHECK(arch.kind != Arch::kMlp1 || arch.hidden_dim >= 1,
               "mlp1 needs a hidden layer");
  PolicyParameters p;
  p.version = 1;
  p.player_id = player_id;
  p.arch = arch;
  Rng rng(seed);
  p.values.resize(arch.ParamCount());
  for (float& v : p.values)
    v = static_cast<float>(rng.UniformRange(-init_scale, init_scale));
  return p;
}

ForwardCache Forward(const PolicyParameters& params, std::span<const float> obs) {
  const ArchSpec& a = params.arch;
  CheckObsShape(a, obs);
  RLMESH_CHECK(params.values.size() == a.ParamCount(), "parameter length mismatch");
  const Layout l = LayoutOf(a);
  const auto& w = params.values;
  ForwardCache c;
  size_t d = static_cast<size_t>(a.input_dim);
  size_t m = static_cast<size_t>(a.action_dim);

  switch (a.kind) {
    case Arch::kTabular: {
      c.state = StateIndex(a, obs);
      size_t row = static_cast<size_t>(c.state) * m;
      c.logits.resize(m);
      for (size_t k = 0; k < m; ++k) c.logits[k] = w[l.policy_w + row + k];
      c.value = w[l.value_w + static_cast<size_t>(c.state)];
      break;
    }
    case Arch::kLinear: {
      c.logits.assign(m, 0.0);
      for (size_t k = 0; k < m; ++k) {
        double z = w[l.policy_b + k];
        for (size_t j = 0; j < d; ++j) z += static_cast<double>(w[l.policy_w + k * d + j]) * obs[j];
        c.logits[k] = z;
      }
      double v = w[l.value_b];
      for (size_t j = 0; j < d; ++j) v += static_cast<double>(w[l.value_w + j]) * obs[j];
      c.value = v;
      break;
    }
    case Arch::kMlp1: {
      size_t h = static_cast<size_t>(a.hidden_dim);
      c.hidden.resize(h);
      for (size_t i = 0; i < h; ++i) {
        double u = w[l.trunk_b + i];
        for (size_t j = 0; j < d; ++j) u += static_cast<double>(w[l.trunk_w + i * d + j]) * obs[j];
        c.hidden[i] = std::tanh(u);
      }
      c.logits.assign(m, 0.0);
      for (size_t k = 0; k < m; ++k) {
        double z = w[l.policy_b + k];
        for (size_t i = 0; i < h; ++i) z += static_cast<double>(w[l.policy_w + k * h + i]) * c.hidden[i];
        c.logits[k] = z;
      }
      double v = w[l.value_b];
      for (size_t i = 0; i < h; ++i) v += static_cast<double>(w[l.value_w + i]) * c.hidden[i];
      c.value = v;
      break;
    }
  }
  return c;
}

void Backward(const PolicyParameters& params, std::span<const float> obs,
              const ForwardCache& cache, std::span<const double> g_logits,
              double g_value, std::span<double> grad) {
  const ArchSpec& a = params.arch;
  RLMESH_CHECK(grad.size() == a.ParamCount(), "gradient accumulator length mismatch");
  RLMESH_CHECK(g_logits.size() == static_cast<size_t>(a.action_dim),
               "logit gradient length mismatch");
  const Layout l = LayoutOf(a);
  const auto& w = params.values;
  size_t d = static_cast<size_t>(a.input_dim);
  size_t m = static_cast<size_t>(a.action_dim);

  switch (a.kind) {
    case Arch::kTabular: {
      size_t row = static_cast<size_t>(cache.state) * m;
      for (size_t k = 0; k < m; ++k) grad[l.policy_w + row + k] += g_logits[k];
      grad[l.value_w + static_cast<size_t>(cache.state)] += g_value;
      break;
    }
    case Arch::kLinear: {
      for (size_t k = 0; k < m; ++k) {
        grad[l.policy_b + k] += g_logits[k];
        for (size_t j = 0; j < d; ++j) grad[l.policy_w + k * d + j] += g_logits[k] * obs[j];
      }
      grad[l.value_b] += g_value;
      for (size_t j = 0; j < d; ++j) grad[l.value_w + j] += g_value * obs[j];
      break;
    }
    case Arch::kMlp1: {
      size_t h = static_cast<size_t>(a.hidden_dim);
      // Shared trunk: hidden gradient collects both heads.
      std::vector<double> g_hidden(h, 0.0);
      for (size_t k = 0; k < m; ++k) {
        grad[l.policy_b + k] += g_logits[k];
        for (size_t i = 0; i < h; ++i) {
          grad[l.policy_w + k * h + i] += g_logits[k] * cache.hidden[i];
          g_hidden[i] += g_logits[k] * static_cast<double>(w[l.policy_w + k * h + i]);
        }
      }
      grad[l.value_b] += g_value;
      for (size_t i = 0; i < h; ++i) {
        grad[l.value_w + i] += g_value * cache.hidden[i];
        g_hidden[i] += g_value * static_cast<double>(w[l.value_w + i]);
      }
      for (size_t i = 0; i < h; ++i) {
        double g_pre = g_hidden[i] * (1.0 - cache.hidden[i] * cache.hidden[i]);
        grad[l.trunk_b + i] += g_pre;
        for (size_t j = 0; j < d; ++j) grad[l.trunk_w + i * d + j] += g_pre * obs[j];
      }
      break;
    }
  }
}

ActionDistribution MaskedSoftmax(std::span<const double> logits,
                                 std::span<const uint8_t> mask) {
  RLMESH_CHECK(logits.size() == mask.size(), "mask length mismatch");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  bool any_legal = false;
  double max_logit = kNegInf;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) {
      any_legal = true;
      max_logit = std::max(max_logit, logits[i]);
    }
  }
  if (!any_legal) Throw(ErrorCode::kAllActionsMasked, "no legal action");

  ActionDistribution dist;
  dist.probs.assign(logits.size(), 0.0);
  dist.log_probs.assign(logits.size(), kNegInf);
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (mask[i]) total += std::exp(logits[i] - max_logit);
  }
  double log_total = std::log(total);
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    double lp = logits[i] - max_logit - log_total;
    dist.log_probs[i] = lp;
    dist.probs[i] = std::exp(lp);
  }
  return dist;
}

InferResult Infer(const PolicyParameters& params, std::span<const float> obs,
                  std::span<const uint8_t> mask, Rng& rng) {
  if (mask.size() != static_cast<size_t>(params.arch.action_dim))
    Throw(ErrorCode::kShapeMismatch, "mask length does not match action dim");
  ForwardCache cache = Forward(params, obs);
  InferResult r;
  r.dist = MaskedSoftmax(cache.logits, mask);
  r.action = static_cast<int>(rng.Categorical(r.dist.probs));
  r.log_prob = r.dist.log_probs[static_cast<size_t>(r.action)];
  r.value = cache.value;
  return r;
}

PolicyParameters ApplyGradient(const PolicyParameters& params,
                               const GradientUpdate& update, double learning_rate) {
  if (update.grad.size() != params.values.size())
    Throw(ErrorCode::kShapeMismatch,
          "gradient length " + std::to_string(update.grad.size()) +
              " does not match parameter length " + std::to_string(params.values.size()));
  RLMESH_CHECK(update.sample_count >= 1, "sample_count must be >= 1");
  for (float g : update.grad) {
    if (!std::isfinite(g)) Throw(ErrorCode::kNonFiniteGradient, "gradient has non-finite entry");
  }
  PolicyParameters next = params;
  next.version = params.version + 1;
  double scale = learning_rate / static_cast<double>(update.sample_count);
  for (size_t i = 0; i < next.values.size(); ++i) {
    next.values[i] = static_cast<float>(static_cast<double>(params.values[i]) -
                                        scale * static_cast<double>(update.grad[i]));
  }
  return next;
}

Bytes SerializeParams(const PolicyParameters& params) {
  ByteWriter w;
  w.U8(static_cast<uint8_t>(params.arch.kind));
  w.Str(params.player_id);
  w.U64(params.version);
  w.F32Vec(params.values);
  return w.Take();
}

PolicyParameters DeserializeParams(std::span<const uint8_t> bytes,
                                   const ArchSpec& declared) {
  ByteReader r(bytes);
  uint8_t tag = r.U8();
  if (tag < 1 || tag > 3) Throw(ErrorCode::kCorruptPayload, "bad arch tag");
  if (tag != static_cast<uint8_t>(declared.kind))
    Throw(ErrorCode::kArchMismatch, "arch tag does not match declared arch");
  PolicyParameters p;
  p.arch = declared;
  p.player_id = r.Str();
  p.version = r.U64();
  p.values = r.F32Vec();
  r.ExpectEnd();
  if (p.values.size() != declared.ParamCount())
    Throw(ErrorCode::kArchMismatch, "parameter count does not match declared arch");
  return p;
}

uint64_t ParamsChecksum(const PolicyParameters& params) {
  Bytes b = SerializeParams(params);
  return Checksum64(b);
}

}  // namespace rlmesh
