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
//
// The sockets transport spawns real worker processes, so these tests run
// against the installed CLI binary (passed via RLMESH_CLI_BIN).

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rlmesh/league/league.hpp"
#include "rlmesh/runtime/experiment.hpp"

using namespace rlmesh;

namespace {

ExperimentConfig BaseChain(uint64_t frames, uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.env_id = "chain_mdp";
  cfg.frames = frames;
  cfg.unroll = 8;
  cfg.topology.kind = TopologyKind::kAsyncTrajectory;
  cfg.topology.actor_count = 1;
  cfg.topology.batch_size = 1;
  cfg.learn.algorithm = "a2c";
  cfg.learn.gamma = 0.9;
  cfg.learn.lr = 0.2;
  cfg.learn.entropy_coef = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("in-process and sockets transports learn identically at zero delay") {
  auto sim_cfg = BaseChain(1600, 7);
  auto sim = RunExperiment(sim_cfg);

  auto sock_cfg = BaseChain(1600, 7);
  sock_cfg.transport = "sockets";
  auto sock = RunExperiment(sock_cfg);

  CHECK(!sock.worker_crashed);
  CHECK(sim.final_versions.at("main") == sock.final_versions.at("main"));
  CHECK(sim.final_checksums.at("main") == sock.final_checksums.at("main"));
}

TEST_CASE("an actor crash mid-run is contained and the league survives") {
  auto dir = std::filesystem::temp_directory_path() / "rlmesh_crash_test";
  std::filesystem::create_directories(dir);
  auto cfg = BaseChain(100000, 3);
  cfg.transport = "sockets";
  cfg.topology.actor_count = 2;
  cfg.league.snapshot_every = 400;
  cfg.league.eval_games = 2;
  cfg.league.file = (dir / "league.txt").string();
  cfg.crash_after_frames["actor-1"] = 600;
  cfg.max_wall_ms = 60000;

  auto r = RunExperiment(cfg);
  CHECK(r.worker_crashed);
  CHECK(!r.diagnostic.empty());

  // The flushed league file loads and replays to identical ratings.
  League league;
  league.LoadFrom(r.league_file);
  CHECK(league.GenerationCount("main") >= 1);
  if (league.MatchCount() > 0) {
    auto first = league.EloRatings();
    League again;
    again.LoadFrom(r.league_file);
    auto second = again.EloRatings();
    CHECK(first == second);
  }
  std::filesystem::remove_all(dir);
}
