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

#include "rlmesh/core/error.hpp"

namespace rlmesh {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIllegalAction: return "IllegalAction";
    case ErrorCode::kSteppedAfterDone: return "SteppedAfterDone";
    case ErrorCode::kBatchSizeMismatch: return "BatchSizeMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kAllActionsMasked: return "AllActionsMasked";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kCorruptPayload: return "CorruptPayload";
    case ErrorCode::kArchMismatch: return "ArchMismatch";
    case ErrorCode::kEmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::kNonFiniteRatio: return "NonFiniteRatio";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kInvalidDualClip: return "InvalidDualClip";
    case ErrorCode::kUnknownState: return "UnknownState";
    case ErrorCode::kEmptyBuffer: return "EmptyBuffer";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kNonPositivePriority: return "NonPositivePriority";
    case ErrorCode::kUnknownEpisode: return "UnknownEpisode";
    case ErrorCode::kFinishEmptyEpisode: return "FinishEmptyEpisode";
    case ErrorCode::kVersionRegression: return "VersionRegression";
    case ErrorCode::kUnknownPlayer: return "UnknownPlayer";
    case ErrorCode::kWaitTimeout: return "WaitTimeout";
    case ErrorCode::kQueueFull: return "QueueFull";
    case ErrorCode::kMixedVersions: return "MixedVersions";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kUnknownGeneration: return "UnknownGeneration";
    case ErrorCode::kNoMatches: return "NoMatches";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kUnknownStrategy: return "UnknownStrategy";
    case ErrorCode::kEnvPlayerMismatch: return "EnvPlayerMismatch";
    case ErrorCode::kMissingAgentTag: return "MissingAgentTag";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kFrameTooLarge: return "FrameTooLarge";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kWorkerCrashed: return "WorkerCrashed";
    case ErrorCode::kHeterogeneousEnvs: return "HeterogeneousEnvs";
    case ErrorCode::kUnknownWorker: return "UnknownWorker";
    case ErrorCode::kIoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace rlmesh
