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

#ifndef RLMESH_RUNTIME_METRICS_HPP_
#define RLMESH_RUNTIME_METRICS_HPP_

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace rlmesh {

// One metrics emission. Rates are per 1000 time units (simulated ticks or
// wall milliseconds) over the window since the previous record.
struct MetricsRecord {
  uint64_t timestamp = 0;
  double frames_per_ktick = 0.0;
  double trajectories_per_ktick = 0.0;
  double updates_per_ktick = 0.0;
  double mean_lag = 0.0;
  uint64_t max_lag = 0;
  std::map<std::string, uint64_t> queue_depths;
  std::map<std::string, double> busy_fraction;

  std::string ToJsonLine() const;
};

// Append-only record-per-line sink; one JSON object per line, plus a final
// human-readable summary table.
class MetricsSink {
 public:
  explicit MetricsSink(const std::filesystem::path& file);
  MetricsSink() = default;

  void Emit(const MetricsRecord& record);
  void WriteSummary(const std::string& summary);
  const std::vector<MetricsRecord>& records() const { return records_; }

 private:
  std::ofstream out_;
  std::vector<MetricsRecord> records_;
};

}  // namespace rlmesh

#endif  // RLMESH_RUNTIME_METRICS_HPP_
