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

#include "rlmesh/runtime/metrics.hpp"

#include "json.hpp"
#include "rlmesh/core/error.hpp"

namespace rlmesh {

std::string MetricsRecord::ToJsonLine() const {
  nlohmann::json j;
  j["timestamp"] = timestamp;
  j["frames_per_ktick"] = frames_per_ktick;
  j["trajectories_per_ktick"] = trajectories_per_ktick;
  j["updates_per_ktick"] = updates_per_ktick;
  j["mean_lag"] = mean_lag;
  j["max_lag"] = max_lag;
  j["queue_depths"] = queue_depths;
  j["busy_fraction"] = busy_fraction;
  return j.dump();
}

MetricsSink::MetricsSink(const std::filesystem::path& file) {
  if (file.empty()) return;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  out_.open(file, std::ios::app);
  if (!out_) Throw(ErrorCode::kIoError, "cannot open metrics file " + file.string());
}

void MetricsSink::Emit(const MetricsRecord& record) {
  records_.push_back(record);
  if (out_.is_open()) out_ << record.ToJsonLine() << "\n";
}

void MetricsSink::WriteSummary(const std::string& summary) {
  if (out_.is_open()) {
    out_ << summary;
    out_.flush();
  }
}

}  // namespace rlmesh
