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

#include "rlmesh/runtime/wire.hpp"

#include <cstring>

namespace rlmesh {

namespace {

void WriteParams(ByteWriter& w, const PolicyParameters& p) {
  WriteArch(w, p.arch);
  Bytes payload = SerializeParams(p);
  w.U32(static_cast<uint32_t>(payload.size()));
  w.Raw(payload);
}

PolicyParameters ReadParams(ByteReader& r) {
  ArchSpec arch = ReadArch(r);
  uint32_t n = r.U32();
  Bytes payload;
  payload.reserve(n);
  for (uint32_t i = 0; i < n; ++i) payload.push_back(r.U8());
  return DeserializeParams(payload, arch);
}

void WriteTransition(ByteWriter& w, const Transition& t) {
  w.F32Vec(t.obs);
  w.U32(static_cast<uint32_t>(t.mask.size()));
  for (uint8_t m : t.mask) w.U8(m);
  w.U32(static_cast<uint32_t>(t.action));
  w.F32(t.reward);
  w.F32Vec(t.next_obs);
  w.U8(t.done ? 1 : 0);
  w.F32(t.behavior_log_prob);
  w.F32(t.value_estimate);
  w.U64(t.param_version);
  w.U32(static_cast<uint32_t>(t.agent_id));
  w.Str(t.player_id);
}

Transition ReadTransition(ByteReader& r) {
  Transition t;
  t.obs = r.F32Vec();
  uint32_t mask_len = r.U32();
  t.mask.resize(mask_len);
  for (uint32_t i = 0; i < mask_len; ++i) t.mask[i] = r.U8();
  t.action = static_cast<int>(r.U32());
  t.reward = r.F32();
  t.next_obs = r.F32Vec();
  t.done = r.U8() != 0;
  t.behavior_log_prob = r.F32();
  t.value_estimate = r.F32();
  t.param_version = r.U64();
  t.agent_id = static_cast<int>(r.U32());
  t.player_id = r.Str();
  return t;
}

void WriteTrajectory(ByteWriter& w, const Trajectory& traj) {
  w.U32(static_cast<uint32_t>(traj.steps.size()));
  for (const Transition& t : traj.steps) WriteTransition(w, t);
  w.F32(traj.bootstrap_value);
}

Trajectory ReadTrajectory(ByteReader& r) {
  Trajectory traj;
  uint32_t n = r.U32();
  traj.steps.reserve(n);
  for (uint32_t i = 0; i < n; ++i) traj.steps.push_back(ReadTransition(r));
  traj.bootstrap_value = r.F32();
  return traj;
}

}  // namespace

void WriteArch(ByteWriter& w, const ArchSpec& arch) {
  w.U8(static_cast<uint8_t>(arch.kind));
  w.U32(static_cast<uint32_t>(arch.input_dim));
  w.U32(static_cast<uint32_t>(arch.action_dim));
  w.U32(static_cast<uint32_t>(arch.hidden_dim));
}

ArchSpec ReadArch(ByteReader& r) {
  ArchSpec a;
  uint8_t kind = r.U8();
  if (kind < 1 || kind > 3) Throw(ErrorCode::kProtocolError, "bad arch kind");
  a.kind = static_cast<Arch>(kind);
  a.input_dim = static_cast<int>(r.U32());
  a.action_dim = static_cast<int>(r.U32());
  a.hidden_dim = static_cast<int>(r.U32());
  return a;
}

WireTag TagOf(const WireMessage& msg) {
  return static_cast<WireTag>(msg.index() + 1);
}

Bytes Encode(const WireMessage& msg) {
  ByteWriter payload;
  std::visit(
      [&payload](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ParamPushMsg>) {
          payload.U8(m.status);
          WriteParams(payload, m.params);
        } else if constexpr (std::is_same_v<T, ParamRequestMsg>) {
          payload.Str(m.player_id);
          payload.U64(m.wait_for_version);
        } else if constexpr (std::is_same_v<T, TrajBatchMsg>) {
          payload.Str(m.player_id);
          payload.U32(static_cast<uint32_t>(m.trajectories.size()));
          for (const Trajectory& t : m.trajectories) WriteTrajectory(payload, t);
        } else if constexpr (std::is_same_v<T, GradMsg>) {
          payload.Str(m.player_id);
          payload.F32Vec(m.update.grad);
          payload.U64(m.update.base_version);
          payload.I64(m.update.sample_count);
          payload.Str(m.update.producer_id);
        } else if constexpr (std::is_same_v<T, InferRequestMsg>) {
          payload.Str(m.player_id);
          payload.U64(m.request_id);
          payload.F32Vec(m.obs);
          payload.U32(static_cast<uint32_t>(m.mask.size()));
          for (uint8_t b : m.mask) payload.U8(b);
        } else if constexpr (std::is_same_v<T, InferResponseMsg>) {
          payload.U64(m.request_id);
          payload.U32(static_cast<uint32_t>(m.action));
          payload.F64(m.log_prob);
          payload.F64(m.value);
          payload.U64(m.params_version);
        } else if constexpr (std::is_same_v<T, MatchResultMsg>) {
          payload.Str(m.player_a);
          payload.U32(static_cast<uint32_t>(m.generation_a));
          payload.Str(m.player_b);
          payload.U32(static_cast<uint32_t>(m.generation_b));
          payload.U8(m.outcome);
          payload.U32(static_cast<uint32_t>(m.game_count));
        } else if constexpr (std::is_same_v<T, ShutdownMsg>) {
          payload.Str(m.reason);
        }
      },
      msg);

  Bytes body = payload.Take();
  if (body.size() > kMaxFrameBytes)
    Throw(ErrorCode::kFrameTooLarge,
          "frame payload of " + std::to_string(body.size()) + " bytes");
  ByteWriter frame;
  frame.U8(static_cast<uint8_t>(TagOf(msg)));
  frame.U32(static_cast<uint32_t>(body.size()));
  frame.Raw(body);
  return frame.Take();
}

WireMessage Decode(std::span<const uint8_t> data, size_t* consumed) {
  if (data.size() < 5) Throw(ErrorCode::kProtocolError, "incomplete frame header");
  uint8_t tag = data[0];
  if (tag < 1 || tag > 8)
    Throw(ErrorCode::kProtocolError, "unknown tag " + std::to_string(tag));
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(data[1 + i]) << (8 * i);
  if (len > kMaxFrameBytes)
    Throw(ErrorCode::kFrameTooLarge, "frame of " + std::to_string(len) + " bytes");
  if (data.size() < 5 + static_cast<size_t>(len))
    Throw(ErrorCode::kProtocolError, "frame shorter than its declared length");
  ByteReader r(data.subspan(5, len));
  WireMessage msg;
  try {
    switch (static_cast<WireTag>(tag)) {
      case WireTag::kParamPush: {
        ParamPushMsg m;
        m.status = r.U8();
        m.params = ReadParams(r);
        msg = std::move(m);
        break;
      }
      case WireTag::kParamRequest: {
        ParamRequestMsg m;
        m.player_id = r.Str();
        m.wait_for_version = r.U64();
        msg = std::move(m);
        break;
      }
      case WireTag::kTrajBatch: {
        TrajBatchMsg m;
        m.player_id = r.Str();
        uint32_t n = r.U32();
        m.trajectories.reserve(n);
        for (uint32_t i = 0; i < n; ++i) m.trajectories.push_back(ReadTrajectory(r));
        msg = std::move(m);
        break;
      }
      case WireTag::kGradMsg: {
        GradMsg m;
        m.player_id = r.Str();
        m.update.grad = r.F32Vec();
        m.update.base_version = r.U64();
        m.update.sample_count = r.I64();
        m.update.producer_id = r.Str();
        msg = std::move(m);
        break;
      }
      case WireTag::kInferRequest: {
        InferRequestMsg m;
        m.player_id = r.Str();
        m.request_id = r.U64();
        m.obs = r.F32Vec();
        uint32_t n = r.U32();
        m.mask.resize(n);
        for (uint32_t i = 0; i < n; ++i) m.mask[i] = r.U8();
        msg = std::move(m);
        break;
      }
      case WireTag::kInferResponse: {
        InferResponseMsg m;
        m.request_id = r.U64();
        m.action = static_cast<int32_t>(r.U32());
        m.log_prob = r.F64();
        m.value = r.F64();
        m.params_version = r.U64();
        msg = std::move(m);
        break;
      }
      case WireTag::kMatchResult: {
        MatchResultMsg m;
        m.player_a = r.Str();
        m.generation_a = static_cast<int32_t>(r.U32());
        m.player_b = r.Str();
        m.generation_b = static_cast<int32_t>(r.U32());
        m.outcome = r.U8();
        m.game_count = static_cast<int32_t>(r.U32());
        msg = std::move(m);
        break;
      }
      case WireTag::kShutdown: {
        ShutdownMsg m;
        m.reason = r.Str();
        msg = std::move(m);
        break;
      }
    }
    r.ExpectEnd();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptPayload)
      Throw(ErrorCode::kProtocolError, std::string("bad payload: ") + e.what());
    throw;
  }
  *consumed = 5 + static_cast<size_t>(len);
  return msg;
}

void FrameReader::Feed(std::span<const uint8_t> chunk) {
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
}

std::optional<WireMessage> FrameReader::Next() {
  if (buffer_.size() < 5) return std::nullopt;
  uint8_t tag = buffer_[0];
  if (tag < 1 || tag > 8)
    Throw(ErrorCode::kProtocolError, "unknown tag " + std::to_string(tag));
  uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<uint32_t>(buffer_[1 + i]) << (8 * i);
  if (len > kMaxFrameBytes)
    Throw(ErrorCode::kFrameTooLarge, "frame of " + std::to_string(len) + " bytes");
  if (buffer_.size() < 5 + static_cast<size_t>(len)) return std::nullopt;
  size_t consumed = 0;
  WireMessage msg = Decode(buffer_, &consumed);
  buffer_.erase(buffer_.begin(),
                buffer_.begin() + static_cast<std::ptrdiff_t>(consumed));
  return msg;
}

}  // namespace rlmesh
