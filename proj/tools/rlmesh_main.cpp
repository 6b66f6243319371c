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

#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "rlmesh/league/league.hpp"
#include "rlmesh/runtime/bench.hpp"
#include "rlmesh/runtime/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitCrash = 3;

int CmdRun(const std::string& config_path) {
  rlmesh::ExperimentConfig cfg = rlmesh::ExperimentConfig::FromFile(config_path);
  rlmesh::RunResult result = rlmesh::RunExperiment(cfg);
  std::cout << "frames=" << result.frames_produced
            << " updates=" << result.updates_applied
            << " episodes=" << result.episodes_completed;
  if (cfg.transport == "in_process")
    std::cout << " ticks=" << result.sim_ticks;
  else
    std::cout << " wall_s=" << result.wall_seconds;
  std::cout << " max_lag=" << result.max_lag << "\n";
  for (const auto& [player, version] : result.final_versions) {
    std::cout << player << ": version=" << version << " checksum=" << std::hex
              << result.final_checksums.at(player) << std::dec << "\n";
  }
  if (!result.league_file.empty())
    std::cout << "league: " << result.league_file.string() << "\n";
  if (result.deadlock) {
    std::cout << "DEADLOCK: " << result.diagnostic << "\n";
    return kExitCrash;
  }
  if (result.worker_crashed) {
    std::cout << "WORKER CRASHED: " << result.diagnostic << "\n";
    return kExitCrash;
  }
  return kExitOk;
}

int CmdEval(const std::string& league_path, int games, const std::string& pairing,
            uint64_t seed) {
  rlmesh::League league;
  league.LoadFrom(league_path);
  if (league.env_id().empty()) {
    std::cerr << "league file does not name an environment\n";
    return kExitConfig;
  }
  auto mode = pairing == "vs_baselines" ? rlmesh::EvalPairing::kVsBaselines
                                        : rlmesh::EvalPairing::kAllPairs;
  auto report = league.EvaluationRound(mode, games, league.env_id(), seed);
  std::cout << "pairs=" << report.pairs << " games=" << report.games_played << "\n";
  for (const auto& [key, rating] : report.ratings) {
    std::cout << std::left << std::setw(24)
              << (key.player_id + ":" + std::to_string(key.generation)) << std::right
              << std::fixed << std::setprecision(1) << rating << "\n";
  }
  league.Save(league_path);
  return kExitOk;
}

int CmdInspect(const std::string& league_path) {
  rlmesh::League league;
  league.LoadFrom(league_path);
  std::cout << "env: " << league.env_id() << "\n";
  std::vector<rlmesh::GenerationKey> keys;
  for (const std::string& id : league.PlayerIds()) {
    std::cout << "player " << id << " role=" << PlayerRoleName(league.RoleOf(id))
              << " generations=" << league.GenerationCount(id) << "\n";
    for (int g = 1; g <= league.GenerationCount(id); ++g) keys.push_back({id, g});
  }
  std::cout << "matches: " << league.MatchCount() << "\n";
  if (league.MatchCount() > 0) {
    auto ratings = league.EloRatings();
    std::cout << "\nratings:\n";
    for (const auto& [key, rating] : ratings) {
      std::cout << std::left << std::setw(24)
                << (key.player_id + ":" + std::to_string(key.generation)) << std::right
                << std::fixed << std::setprecision(1) << rating << "\n";
    }
    std::cout << "\nwin rates (row vs column):\n";
    std::cout << std::setw(16) << "";
    for (const auto& k : keys)
      std::cout << std::setw(12) << (k.player_id + ":" + std::to_string(k.generation));
    std::cout << "\n";
    for (const auto& a : keys) {
      std::cout << std::setw(16) << (a.player_id + ":" + std::to_string(a.generation));
      for (const auto& b : keys) {
        if (a == b || league.Games(a, b) == 0.0) {
          std::cout << std::setw(12) << "-";
        } else {
          std::cout << std::setw(12) << std::fixed << std::setprecision(3)
                    << league.EmpiricalWinRate(a, b);
        }
      }
      std::cout << "\n";
    }
  }
  return kExitOk;
}

int CmdBench(const std::vector<std::string>& config_paths,
             const std::vector<std::string>& topologies) {
  std::vector<rlmesh::ExperimentConfig> configs;
  for (const std::string& path : config_paths)
    configs.push_back(rlmesh::ExperimentConfig::FromFile(path));
  if (!topologies.empty()) {
    if (configs.size() != 1) {
      std::cerr << "--topologies expands a single base config\n";
      return kExitConfig;
    }
    configs = rlmesh::ExpandBenchMatrix(configs[0], topologies);
  }
  auto rows = rlmesh::BenchTopologies(configs);
  std::cout << rlmesh::FormatBenchTable(rows);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed actor/learner RL coordination framework"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "train per a config file");
  run->add_option("config", config_path, "experiment config")->required();

  std::string league_path;
  int games = 100;
  std::string pairing = "all_pairs";
  uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "play an evaluation round over a league");
  eval->add_option("league", league_path, "league file")->required();
  eval->add_option("--games", games, "games per pairing");
  eval->add_option("--pairing", pairing, "all_pairs | vs_baselines");
  eval->add_option("--seed", eval_seed, "evaluation seed");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "dump league ratings and win rates");
  inspect->add_option("league", inspect_path, "league file")->required();

  std::vector<std::string> bench_configs;
  std::vector<std::string> bench_topologies;
  auto* bench = app.add_subcommand("bench", "compare topologies under one delay table");
  bench->add_option("configs", bench_configs, "config files")->required();
  bench->add_option("--topologies", bench_topologies,
                    "comma-free list of kinds expanding a single base config");

  std::string worker_id;
  int worker_port = 0;
  std::string worker_config;
  auto* worker = app.add_subcommand("worker", "internal: socket actor worker");
  worker->add_option("--id", worker_id)->required();
  worker->add_option("--port", worker_port)->required();
  worker->add_option("--config", worker_config)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return CmdRun(config_path);
    if (eval->parsed()) return CmdEval(league_path, games, pairing, eval_seed);
    if (inspect->parsed()) return CmdInspect(inspect_path);
    if (bench->parsed()) return CmdBench(bench_configs, bench_topologies);
    if (worker->parsed()) {
      auto cfg = rlmesh::ExperimentConfig::FromFile(worker_config);
      return rlmesh::RunSocketActorWorker(cfg, worker_id, worker_port);
    }
  } catch (const rlmesh::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == rlmesh::ErrorCode::kConfigInvalid) return kExitConfig;
    if (e.code() == rlmesh::ErrorCode::kWorkerCrashed) return kExitCrash;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
