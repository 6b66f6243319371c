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

#ifndef RLMESH_RUNTIME_WIRE_HPP_
#define RLMESH_RUNTIME_WIRE_HPP_

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rlmesh/core/bytes.hpp"
#include "rlmesh/learn/learn.hpp"
#include "rlmesh/policy/policy.hpp"

namespace rlmesh {

// Frame layout: tag byte, u32 little-endian payload length, payload bytes.
enum class WireTag : uint8_t {
  kParamPush = 1,
  kParamRequest = 2,
  kTrajBatch = 3,
  kGradMsg = 4,
  kInferRequest = 5,
  kInferResponse = 6,
  kMatchResult = 7,
  kShutdown = 8,
};

inline constexpr size_t kMaxFrameBytes = 16 * 1024 * 1024;

struct ParamPushMsg {
  PolicyParameters params;  // carries arch, player id, version, values
  uint8_t status = 0;       // transport ack detail: 0 ok, 1 dropped, 2 throttled
};

struct ParamRequestMsg {
  std::string player_id;
  uint64_t wait_for_version = 0;  // 0 means latest
};

struct TrajBatchMsg {
  std::string player_id;
  std::vector<Trajectory> trajectories;
};

struct GradMsg {
  std::string player_id;
  GradientUpdate update;
};

struct InferRequestMsg {
  std::string player_id;
  uint64_t request_id = 0;
  std::vector<float> obs;
  std::vector<uint8_t> mask;
};

struct InferResponseMsg {
  uint64_t request_id = 0;
  int32_t action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  uint64_t params_version = 0;
};

struct MatchResultMsg {
  std::string player_a;
  int32_t generation_a = 0;
  std::string player_b;
  int32_t generation_b = 0;
  uint8_t outcome = 2;  // 0 a_win, 1 b_win, 2 draw
  int32_t game_count = 1;
};

struct ShutdownMsg {
  std::string reason;
};

using WireMessage =
    std::variant<ParamPushMsg, ParamRequestMsg, TrajBatchMsg, GradMsg,
                 InferRequestMsg, InferResponseMsg, MatchResultMsg, ShutdownMsg>;

WireTag TagOf(const WireMessage& msg);

// One complete frame (tag + length + payload).
Bytes Encode(const WireMessage& msg);

// Decodes one frame from the front of `data`; sets consumed to the frame
// size. Throws ProtocolError on a bad tag or inconsistent length and
// FrameTooLarge beyond the frame bound.
WireMessage Decode(std::span<const uint8_t> data, size_t* consumed);

// Incremental decoder for a byte stream arriving in arbitrary chunks.
class FrameReader {
 public:
  void Feed(std::span<const uint8_t> chunk);
  // Returns the next complete message, or nullopt until more bytes arrive.
  std::optional<WireMessage> Next();

 private:
  Bytes buffer_;
};

// The arch tag inside serialized parameters does not carry shapes, so the
// wire codec transports the full ArchSpec alongside.
void WriteArch(ByteWriter& w, const ArchSpec& arch);
ArchSpec ReadArch(ByteReader& r);

}  // namespace rlmesh

#endif  // RLMESH_RUNTIME_WIRE_HPP_
