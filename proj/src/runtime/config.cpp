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

#include "rlmesh/runtime/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "rlmesh/env/env.hpp"

extern char** environ;

namespace rlmesh {

namespace {

std::string Trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string Lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

uint64_t ParseU64(const std::string& key, const std::string& value) {
  if (value == "unlimited") return kUnlimitedStaleness;
  try {
    size_t pos = 0;
    uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    Throw(ErrorCode::kConfigInvalid, key + " wants an integer, got '" + value + "'");
  }
}

double ParseF64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    Throw(ErrorCode::kConfigInvalid, key + " wants a number, got '" + value + "'");
  }
}

bool ParseBool(const std::string& key, const std::string& value) {
  std::string v = Lower(value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  Throw(ErrorCode::kConfigInvalid, key + " wants a boolean, got '" + value + "'");
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

const char* DelayOpName(DelayOp op) {
  switch (op) {
    case DelayOp::kEnvStep: return "env_step";
    case DelayOp::kInference: return "inference";
    case DelayOp::kFetch: return "fetch";
    case DelayOp::kSubmit: return "submit";
    case DelayOp::kLearn: return "learn";
  }
  return "unknown";
}

DelayOp ParseDelayOp(const std::string& name) {
  for (DelayOp op : {DelayOp::kEnvStep, DelayOp::kInference, DelayOp::kFetch,
                     DelayOp::kSubmit, DelayOp::kLearn}) {
    if (name == DelayOpName(op)) return op;
  }
  Throw(ErrorCode::kConfigInvalid, "unknown delay operation: " + name);
}

DelayDistribution DelayDistribution::Parse(const std::string& text) {
  auto parts = [&] {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) out.push_back(item);
    return out;
  }();
  DelayDistribution d;
  if (parts.size() == 2 && parts[0] == "const") {
    d.kind = Kind::kConstant;
    d.a = ParseF64("delay", parts[1]);
  } else if (parts.size() == 3 && parts[0] == "uniform") {
    d.kind = Kind::kUniform;
    d.a = ParseF64("delay", parts[1]);
    d.b = ParseF64("delay", parts[2]);
  } else if (parts.size() == 2 && parts[0] == "exp") {
    d.kind = Kind::kExponential;
    d.a = ParseF64("delay", parts[1]);
  } else {
    Throw(ErrorCode::kConfigInvalid, "bad delay distribution '" + text + "'");
  }
  if (d.a < 0.0 || (d.kind == Kind::kUniform && d.b < d.a))
    Throw(ErrorCode::kConfigInvalid, "delay parameters must be non-negative");
  return d;
}

uint64_t DelayDistribution::Draw(Rng& rng) const {
  switch (kind) {
    case Kind::kConstant: return static_cast<uint64_t>(a);
    case Kind::kUniform: return static_cast<uint64_t>(rng.UniformRange(a, b));
    case Kind::kExponential: return static_cast<uint64_t>(rng.Exponential(a));
  }
  return 0;
}

void ExperimentConfig::SetKey(const std::string& key, const std::string& value) {
  // delay.<worker>.<op> and worker.<id>.<fault> carry ids inside the key.
  if (key.rfind("delay.", 0) == 0) {
    std::string rest = key.substr(6);
    auto dot = rest.rfind('.');
    if (dot == std::string::npos)
      Throw(ErrorCode::kConfigInvalid, "delay key wants delay.<worker>.<op>");
    std::string worker = rest.substr(0, dot);
    DelayOp op = ParseDelayOp(rest.substr(dot + 1));
    delays[worker][op] = DelayDistribution::Parse(value);
    return;
  }
  if (key.rfind("worker.", 0) == 0) {
    std::string rest = key.substr(7);
    auto dot = rest.rfind('.');
    if (dot == std::string::npos)
      Throw(ErrorCode::kConfigInvalid, "worker key wants worker.<id>.<fault>");
    std::string worker = rest.substr(0, dot);
    std::string fault = rest.substr(dot + 1);
    if (fault == "crash_after_frames") {
      crash_after_frames[worker] = ParseU64(key, value);
    } else if (fault == "halt_after_frames") {
      halt_after_frames[worker] = ParseU64(key, value);
    } else {
      Throw(ErrorCode::kConfigInvalid, "unknown worker fault: " + fault);
    }
    return;
  }

  if (key == "seed") seed = ParseU64(key, value);
  else if (key == "transport") transport = value;
  else if (key == "run.frames") frames = ParseU64(key, value);
  else if (key == "run.unroll") unroll = static_cast<int>(ParseU64(key, value));
  else if (key == "run.max_wall_ms") max_wall_ms = ParseU64(key, value);
  else if (key == "env.id") env_id = value;
  else if (key == "topology.kind") topology.kind = ParseTopologyKind(value);
  else if (key == "topology.actor_count")
    topology.actor_count = static_cast<int>(ParseU64(key, value));
  else if (key == "topology.learner_count")
    topology.learner_count = static_cast<int>(ParseU64(key, value));
  else if (key == "topology.quorum_fraction")
    topology.quorum_fraction = ParseF64(key, value);
  else if (key == "topology.drop_fraction") topology.drop_fraction = ParseF64(key, value);
  else if (key == "topology.max_staleness") topology.max_staleness = ParseU64(key, value);
  else if (key == "topology.batch_size") topology.batch_size = ParseU64(key, value);
  else if (key == "topology.queue_capacity")
    topology.queue_capacity = ParseU64(key, value);
  else if (key == "topology.inference_batch_max")
    topology.inference_batch_max = ParseU64(key, value);
  else if (key == "topology.inference_timeout")
    topology.inference_timeout = ParseU64(key, value);
  else if (key == "learn.algorithm") learn.algorithm = value;
  else if (key == "learn.gamma") learn.gamma = ParseF64(key, value);
  else if (key == "learn.lr") learn.lr = ParseF64(key, value);
  else if (key == "learn.clip_eps") learn.clip_eps = ParseF64(key, value);
  else if (key == "learn.dual_clip_c") learn.dual_clip_c = ParseF64(key, value);
  else if (key == "learn.rho_bar") learn.rho_bar = ParseF64(key, value);
  else if (key == "learn.c_bar") learn.c_bar = ParseF64(key, value);
  else if (key == "learn.entropy_coef") learn.entropy_coef = ParseF64(key, value);
  else if (key == "learn.value_coef") learn.value_coef = ParseF64(key, value);
  else if (key == "learn.alpha") learn.alpha = ParseF64(key, value);
  else if (key == "learn.epsilon_greedy") learn.epsilon_greedy = ParseF64(key, value);
  else if (key == "policy.arch") policy_arch = value;
  else if (key == "policy.hidden") policy_hidden = static_cast<int>(ParseU64(key, value));
  else if (key == "policy.init_scale") policy_init_scale = ParseF64(key, value);
  else if (key == "league.strategy") league.strategy = value;
  else if (key == "league.snapshot_every") league.snapshot_every = ParseU64(key, value);
  else if (key == "league.eval_games")
    league.eval_games = static_cast<int>(ParseU64(key, value));
  else if (key == "league.file") league.file = value;
  else if (key == "league.pfsp_exponent") league.pfsp_exponent = ParseF64(key, value);
  else if (key == "league.players") league.players = SplitList(value);
  else if (key == "cooperation.mode")
    cooperation.mode = value == "joint" ? CooperationMode::Mode::kJoint
                       : value == "independent"
                           ? CooperationMode::Mode::kIndependent
                           : throw Error(ErrorCode::kConfigInvalid,
                                         "cooperation.mode wants independent|joint");
  else if (key == "cooperation.shared_policy")
    cooperation.shared_policy = ParseBool(key, value);
  else if (key == "cooperation.agent_id_feature")
    cooperation.agent_id_feature = ParseBool(key, value);
  else if (key == "metrics.file") metrics_file = value;
  else if (key == "metrics.cadence") metrics_cadence = ParseU64(key, value);
  else if (key == "replay.capacity") replay_capacity = ParseU64(key, value);
  else if (key == "replay.prioritized") replay_prioritized = ParseBool(key, value);
  else if (key == "sockets.port") sockets_port = static_cast<int>(ParseU64(key, value));
  else Throw(ErrorCode::kConfigInvalid, "unknown config key: " + key);
}

ExperimentConfig ExperimentConfig::FromString(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      Throw(ErrorCode::kConfigInvalid,
            "line " + std::to_string(line_no) + " is not key = value: " + t);
    std::string key = Trim(t.substr(0, eq));
    std::string value = Trim(t.substr(eq + 1));
    config.SetKey(key, value);
  }
  return config;
}

ExperimentConfig ExperimentConfig::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Throw(ErrorCode::kConfigInvalid, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig config = FromString(buffer.str());
  config.ApplyEnvOverrides();
  return config;
}

void ExperimentConfig::ApplyEnvOverrides() {
  constexpr const char* kPrefix = "RLMESH_";
  for (char** env = environ; *env != nullptr; ++env) {
    std::string entry(*env);
    if (entry.rfind(kPrefix, 0) != 0) continue;
    auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string lowered = Lower(entry.substr(7, eq - 7));
    std::string value = entry.substr(eq + 1);
    // TOPOLOGY_ACTOR_COUNT -> topology.actor_count: the first underscore
    // separates the section; later underscores stay (run.max_wall_ms).
    std::vector<std::string> candidates;
    auto us = lowered.find('_');
    if (us != std::string::npos)
      candidates.push_back(lowered.substr(0, us) + "." + lowered.substr(us + 1));
    candidates.push_back(lowered);
    std::string last_error;
    bool applied = false;
    for (const std::string& key : candidates) {
      try {
        SetKey(key, value);
        applied = true;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kConfigInvalid) throw;
        last_error = e.what();
      }
    }
    if (!applied)
      Throw(ErrorCode::kConfigInvalid, "bad environment override " + entry + ": " + last_error);
  }
}

void ExperimentConfig::Validate() const {
  topology.Validate();
  if (transport != "in_process" && transport != "sockets")
    Throw(ErrorCode::kConfigInvalid, "transport wants in_process|sockets");
  if (unroll < 1) Throw(ErrorCode::kConfigInvalid, "run.unroll must be >= 1");
  if (policy_arch != "tabular" && policy_arch != "linear" && policy_arch != "mlp1")
    Throw(ErrorCode::kConfigInvalid, "policy.arch wants tabular|linear|mlp1");
  if (learn.algorithm != "a2c" && learn.algorithm != "ppo_dualclip" &&
      learn.algorithm != "vtrace_ac" && learn.algorithm != "qlearning")
    Throw(ErrorCode::kConfigInvalid,
          "learn.algorithm wants a2c|ppo_dualclip|vtrace_ac|qlearning");
  if (learn.gamma < 0.0 || learn.gamma > 1.0)
    Throw(ErrorCode::kConfigInvalid, "learn.gamma must be in [0, 1]");
  if (learn.dual_clip_c <= 1.0)
    Throw(ErrorCode::kConfigInvalid, "learn.dual_clip_c must exceed 1");
  if (learn.rho_bar < learn.c_bar || learn.c_bar <= 0.0)
    Throw(ErrorCode::kConfigInvalid, "need rho_bar >= c_bar > 0");
  if (league.strategy != "none") ParseOpponentStrategy(league.strategy);
  EnvSpec spec = SpecForEnv(env_id);  // validates env id
  if (transport == "sockets" && topology.kind != TopologyKind::kAsyncTrajectory)
    Throw(ErrorCode::kConfigInvalid,
          "the sockets transport implements the trajectory-exchange path; use "
          "in_process for other topologies");
  if (topology.kind == TopologyKind::kReplayQlearning &&
      learn.algorithm != "qlearning")
    Throw(ErrorCode::kConfigInvalid, "replay_qlearning requires learn.algorithm=qlearning");
  if (learn.algorithm == "qlearning" &&
      topology.kind != TopologyKind::kReplayQlearning)
    Throw(ErrorCode::kConfigInvalid, "qlearning runs under topology replay_qlearning");
  if (learn.algorithm == "qlearning" && policy_arch != "tabular")
    Throw(ErrorCode::kConfigInvalid, "qlearning needs the tabular arch");
  auto players = TrainingPlayers();
  if (spec.players == 1 && players.size() != 1)
    Throw(ErrorCode::kConfigInvalid, "single-player env trains one player");
  if (spec.players == 2 && players.size() > 2)
    Throw(ErrorCode::kConfigInvalid, "at most two training players");
  if (spec.players == 2 && players.empty())
    Throw(ErrorCode::kConfigInvalid, "2-player env needs at least one training player");
  if (spec.players == 2 && league.strategy == "none")
    Throw(ErrorCode::kConfigInvalid,
          "2-player training needs a league.strategy for opponent selection");
}

ArchSpec ExperimentConfig::ResolveArch() const {
  EnvSpec spec = SpecForEnv(env_id);
  ArchSpec arch;
  arch.kind = policy_arch == "tabular"  ? Arch::kTabular
              : policy_arch == "linear" ? Arch::kLinear
                                        : Arch::kMlp1;
  arch.input_dim = spec.obs_dim;
  if (cooperation.agent_id_feature && cooperation.shared_policy &&
      spec.agents_per_player > 1 && arch.kind != Arch::kTabular)
    arch.input_dim += spec.agents_per_player;
  arch.action_dim = spec.action_dim;
  arch.hidden_dim = arch.kind == Arch::kMlp1 ? policy_hidden : 0;
  return arch;
}

std::vector<std::string> ExperimentConfig::TrainingPlayers() const {
  EnvSpec spec = SpecForEnv(env_id);
  if (!league.players.empty()) return league.players;
  if (spec.players == 1) return {"main"};
  return {"main"};
}

}  // namespace rlmesh
