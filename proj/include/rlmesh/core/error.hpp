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

#ifndef RLMESH_CORE_ERROR_HPP_
#define RLMESH_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace rlmesh {

enum class ErrorCode {
  // env
  kIllegalAction,
  kSteppedAfterDone,
  kBatchSizeMismatch,
  // policy
  kShapeMismatch,
  kAllActionsMasked,
  kNonFiniteGradient,
  kCorruptPayload,
  kArchMismatch,
  // learn
  kEmptyTrajectory,
  kNonFiniteRatio,
  kEmptyBatch,
  kInvalidDualClip,
  kUnknownState,
  // buffer
  kEmptyBuffer,
  kUnknownId,
  kNonPositivePriority,
  kUnknownEpisode,
  kFinishEmptyEpisode,
  // coord
  kVersionRegression,
  kUnknownPlayer,
  kWaitTimeout,
  kQueueFull,
  kMixedVersions,
  kTimeout,
  // league
  kUnknownGeneration,
  kNoMatches,
  kEmptyPool,
  kUnknownStrategy,
  kEnvPlayerMismatch,
  kMissingAgentTag,
  // runtime
  kProtocolError,
  kFrameTooLarge,
  kConfigInvalid,
  kWorkerCrashed,
  kHeterogeneousEnvs,
  kUnknownWorker,
  kIoError,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Throw(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// Internal consistency check; failures indicate a bug, not a caller error.
#define RLMESH_CHECK(cond, msg)                                       \
  do {                                                                \
    if (!(cond)) throw std::logic_error(std::string("check failed: ") + msg); \
  } while (0)

}  // namespace rlmesh

#endif  // RLMESH_CORE_ERROR_HPP_
