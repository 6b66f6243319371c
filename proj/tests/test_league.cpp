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

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "rlmesh/league/league.hpp"

using namespace rlmesh;

namespace {

const ArchSpec kRpsArch{Arch::kTabular, 0, 3, 0};
const ArchSpec kChainArch{Arch::kTabular, 5, 2, 0};

PolicyParameters RpsPolicy(const std::string& id, std::initializer_list<float> logits) {
  PolicyParameters p = InitParams(kRpsArch, id, 1);
  std::fill(p.values.begin(), p.values.end(), 0.0f);
  size_t i = 0;
  for (float l : logits) p.values[i++] = l;
  return p;
}

// Chain policy with a fixed per-state preference; +20 on action 1 in every
// state makes it the scripted always-right optimum.
PolicyParameters ChainPolicy(const std::string& id, float right_logit, uint64_t seed) {
  PolicyParameters p = InitParams(kChainArch, id, seed);
  if (right_logit != 0.0f) {
    std::fill(p.values.begin(), p.values.end(), 0.0f);
    for (int s = 0; s < 5; ++s) p.values[static_cast<size_t>(s) * 2 + 1] = right_logit;
  }
  return p;
}

void AddTwoPlayers(League& league) {
  league.RegisterPlayer("alpha", PlayerRole::kMain, RpsPolicy("alpha", {}));
  league.RegisterPlayer("beta", PlayerRole::kPeer, RpsPolicy("beta", {}));
}

}  // namespace

TEST_CASE("the first snapshot gets index 1 and repeats stay equal") {
  League league;
  league.RegisterPlayer("alpha", PlayerRole::kMain, RpsPolicy("alpha", {1, 2, 3}));
  CHECK(league.SnapshotGeneration("alpha") == 1);
  CHECK(league.SnapshotGeneration("alpha") == 2);
  auto g1 = league.GenerationParams({"alpha", 1});
  auto g2 = league.GenerationParams({"alpha", 2});
  CHECK(g1.values == g2.values);
  CHECK(league.GenerationCount("alpha") == 2);
  CHECK_THROWS_WITH_AS(league.SnapshotGeneration("ghost"),
                       doctest::Contains("UnknownPlayer"), Error);
}

TEST_CASE("twenty snapshots make twenty generations") {
  League league;
  league.RegisterPlayer("alpha", PlayerRole::kMain, RpsPolicy("alpha", {}));
  for (int i = 0; i < 20; ++i) league.SnapshotGeneration("alpha");
  CHECK(league.GenerationCount("alpha") == 20);
}

TEST_CASE("match tallies stay symmetric") {
  League league;
  AddTwoPlayers(league);
  league.SnapshotGeneration("alpha");
  league.SnapshotGeneration("beta");
  GenerationKey a{"alpha", 1}, b{"beta", 1};
  league.RecordMatch({a, b, Outcome::kAWin, 1});
  CHECK(league.EmpiricalWinRate(a, b) == 1.0);
  CHECK(league.Games(a, b) == 1.0);

  for (int i = 0; i < 49; ++i) league.RecordMatch({a, b, Outcome::kAWin, 1});
  for (int i = 0; i < 50; ++i) league.RecordMatch({a, b, Outcome::kBWin, 1});
  CHECK(league.EmpiricalWinRate(a, b) == doctest::Approx(0.5));
  CHECK(league.Games(a, b) == league.Games(b, a));
  CHECK(league.Wins(a, b) == league.Games(b, a) - league.Wins(b, a));
}

TEST_CASE("recording against an unknown generation fails") {
  League league;
  AddTwoPlayers(league);
  CHECK_THROWS_WITH_AS(
      league.RecordMatch({{"alpha", 3}, {"beta", 1}, Outcome::kAWin, 1}),
      doctest::Contains("UnknownGeneration"), Error);
}

TEST_CASE("a single win moves equal ratings to 1016 and 984") {
  League league;
  AddTwoPlayers(league);
  league.SnapshotGeneration("alpha");
  league.SnapshotGeneration("beta");
  league.RecordMatch({{"alpha", 1}, {"beta", 1}, Outcome::kAWin, 1});
  auto ratings = league.EloRatings(32.0, 1000.0);
  CHECK(ratings[{"alpha", 1}] == doctest::Approx(1016.0));
  CHECK(ratings[{"beta", 1}] == doctest::Approx(984.0));
}

TEST_CASE("rating mass is conserved across any match sequence") {
  League league;
  AddTwoPlayers(league);
  league.RegisterPlayer("gamma", PlayerRole::kPeer, RpsPolicy("gamma", {}));
  for (const char* id : {"alpha", "beta", "gamma"}) {
    league.SnapshotGeneration(id);
    league.SnapshotGeneration(id);
  }
  Rng rng(5);
  std::vector<GenerationKey> keys;
  for (const char* id : {"alpha", "beta", "gamma"})
    for (int g = 1; g <= 2; ++g) keys.push_back({id, g});
  for (int i = 0; i < 300; ++i) {
    size_t x = rng.UniformInt(keys.size());
    size_t y = rng.UniformInt(keys.size());
    if (x == y) continue;
    auto outcome = static_cast<Outcome>(rng.UniformInt(3));
    league.RecordMatch({keys[x], keys[y], outcome, 1 + static_cast<int>(rng.UniformInt(3))});
  }
  auto ratings = league.EloRatings();
  double total = 0.0;
  for (const auto& [key, r] : ratings) total += r;
  CHECK(total == doctest::Approx(1000.0 * static_cast<double>(ratings.size()))
                     .epsilon(1e-9));
  League empty;
  empty.RegisterPlayer("x", PlayerRole::kMain, RpsPolicy("x", {}));
  CHECK_THROWS_WITH_AS(empty.EloRatings(), doctest::Contains("NoMatches"), Error);
}

TEST_CASE("self_80_20 picks the live policy 80 percent of the time") {
  League league;
  AddTwoPlayers(league);
  league.SnapshotGeneration("alpha");
  league.SnapshotGeneration("alpha");
  Rng rng(2718);
  int live_picks = 0;
  const int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    auto pick = league.SampleOpponent("alpha", OpponentStrategy::kSelf8020, rng);
    CHECK(pick.player_id == "alpha");
    if (pick.generation == 0) ++live_picks;
  }
  CHECK(static_cast<double>(live_picks) / kDraws == doctest::Approx(0.8).epsilon(0.0125));
}

TEST_CASE("pfsp weights emphasize opponents the player cannot beat") {
  League league;
  AddTwoPlayers(league);
  league.RegisterPlayer("x", PlayerRole::kPeer, RpsPolicy("x", {}));
  league.RegisterPlayer("y", PlayerRole::kPeer, RpsPolicy("y", {}));
  league.SnapshotGeneration("x");
  league.SnapshotGeneration("y");
  // alpha always beats x, splits with y.
  for (int i = 0; i < 10; ++i)
    league.RecordMatch({{"alpha", 0}, {"x", 1}, Outcome::kAWin, 1});
  for (int i = 0; i < 5; ++i) {
    league.RecordMatch({{"alpha", 0}, {"y", 1}, Outcome::kAWin, 1});
    league.RecordMatch({{"alpha", 0}, {"y", 1}, Outcome::kBWin, 1});
  }
  std::vector<GenerationKey> pool = {{"x", 1}, {"y", 1}};
  auto weights = league.PfspWeights("alpha", pool);
  CHECK(weights[0] == 0.0);  // beaten with certainty: weight exactly 0
  CHECK(weights[1] == doctest::Approx(1.0));
  CHECK(weights[0] + weights[1] == doctest::Approx(1.0));

  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto pick = league.SampleOpponent("alpha", OpponentStrategy::kPfsp, rng);
    CHECK(pick == GenerationKey{"y", 1});
  }
}

TEST_CASE("naive self returns the single generation") {
  League league;
  AddTwoPlayers(league);
  league.SnapshotGeneration("alpha");
  Rng rng(0);
  auto pick = league.SampleOpponent("alpha", OpponentStrategy::kNaiveSelf, rng);
  CHECK(pick == GenerationKey{"alpha", 1});

  League fresh;
  AddTwoPlayers(fresh);
  CHECK_THROWS_WITH_AS(
      fresh.SampleOpponent("alpha", OpponentStrategy::kNaiveSelf, rng),
      doctest::Contains("EmptyPool"), Error);
}

TEST_CASE("role-based sampling sends the main exploiter at the main player") {
  League league;
  league.RegisterPlayer("main-red", PlayerRole::kMain, RpsPolicy("main-red", {}));
  league.RegisterPlayer("sniper", PlayerRole::kMainExploiter, RpsPolicy("sniper", {}));
  Rng rng(0);
  auto pick = league.SampleOpponent("sniper", OpponentStrategy::kRoleBased, rng);
  CHECK(pick == GenerationKey{"main-red", 0});
}

TEST_CASE("opponent sampling is a pure function of the rng state") {
  League league;
  AddTwoPlayers(league);
  for (int i = 0; i < 4; ++i) league.SnapshotGeneration("alpha");
  for (int i = 0; i < 4; ++i) league.SnapshotGeneration("beta");
  Rng a(12345), b(12345);
  for (int i = 0; i < 100; ++i) {
    CHECK(league.SampleOpponent("alpha", OpponentStrategy::kUniformPast, a) ==
          league.SampleOpponent("alpha", OpponentStrategy::kUniformPast, b));
  }
}

TEST_CASE("equal-strength mirrors stay within 50 Elo over 200 games") {
  League league;
  league.RegisterPlayer("mirror", PlayerRole::kMain, RpsPolicy("mirror", {}));
  league.SnapshotGeneration("mirror");
  league.SnapshotGeneration("mirror");
  auto checksum_before = league.GenerationChecksum({"mirror", 1});
  auto report = league.EvaluationRound(EvalPairing::kAllPairs, 200, "matrix_rps", 99);
  CHECK(report.games_played == 200);
  REQUIRE(report.ratings.size() == 2);
  double gap = std::abs(report.ratings[{"mirror", 1}] - report.ratings[{"mirror", 2}]);
  CHECK(gap < 50.0);
  // Frozen generations are bitwise immutable across league activity.
  CHECK(league.GenerationChecksum({"mirror", 1}) == checksum_before);
}

TEST_CASE("a best response crushes a scripted baseline") {
  League league;
  league.set_env_id("matrix_rps");
  league.RegisterPlayer("always-rock", PlayerRole::kPeer,
                        RpsPolicy("always-rock", {20, 0, 0}), /*baseline=*/true);
  league.RegisterPlayer("paperhand", PlayerRole::kMain,
                        RpsPolicy("paperhand", {0, 20, 0}));
  league.SnapshotGeneration("always-rock");
  league.SnapshotGeneration("paperhand");
  auto report =
      league.EvaluationRound(EvalPairing::kVsBaselines, 100, "matrix_rps", 7);
  CHECK(report.games_played == 100);
  double wr = league.EmpiricalWinRate({"paperhand", 1}, {"always-rock", 1});
  CHECK(wr > 0.99);
  CHECK(report.ratings[{"paperhand", 1}] > report.ratings[{"always-rock", 1}]);
}

TEST_CASE("zero games per pair changes nothing") {
  League league;
  AddTwoPlayers(league);
  league.SnapshotGeneration("alpha");
  league.SnapshotGeneration("beta");
  auto report = league.EvaluationRound(EvalPairing::kAllPairs, 0, "matrix_rps", 1);
  CHECK(report.games_played == 0);
  CHECK(report.ratings.empty());
  CHECK(league.MatchCount() == 0);
}

TEST_CASE("a scripted chain optimum earns the strictly highest rating") {
  League league;
  league.set_env_id("chain_mdp");
  league.RegisterPlayer("optimal", PlayerRole::kMain, ChainPolicy("optimal", 20.0f, 1));
  league.RegisterPlayer("rand-a", PlayerRole::kPeer, ChainPolicy("rand-a", 0.0f, 11));
  league.RegisterPlayer("rand-b", PlayerRole::kPeer, ChainPolicy("rand-b", 0.0f, 22));
  for (const char* id : {"optimal", "rand-a", "rand-b"}) league.SnapshotGeneration(id);

  auto report = league.EvaluationRound(EvalPairing::kAllPairs, 200, "chain_mdp", 3);
  REQUIRE(report.ratings.size() == 3);
  double best = report.ratings[{"optimal", 1}];
  CHECK(best > report.ratings[{"rand-a", 1}]);
  CHECK(best > report.ratings[{"rand-b", 1}]);
}

TEST_CASE("shared-policy batches merge all agents of a player") {
  CooperationMode mode{CooperationMode::Mode::kIndependent, true, true};
  std::vector<Trajectory> finished;
  for (int agent = 0; agent < 2; ++agent) {
    Trajectory t;
    Transition s;
    s.obs = {0.0f};
    s.mask = {1};
    s.reward = 1.0f;
    s.behavior_log_prob = -1.0f;
    s.param_version = 1;
    s.player_id = "red";
    s.agent_id = agent;
    t.steps = {s, s};
    finished.push_back(t);
  }
  auto batches = BuildTrainingBatches(mode, finished);
  REQUIRE(batches.size() == 1);
  CHECK(batches[0].learner_key == "red");
  CHECK(batches[0].trajectories.size() == 2);

  mode.shared_policy = false;
  auto split = BuildTrainingBatches(mode, finished);
  REQUIRE(split.size() == 2);
  CHECK(split[0].learner_key == "red/agent0");
  CHECK(split[1].learner_key == "red/agent1");
}

TEST_CASE("untagged trajectories cannot be partitioned") {
  CooperationMode mode{CooperationMode::Mode::kJoint, true, true};
  Trajectory t;
  Transition s;
  s.obs = {0.0f};
  s.mask = {1};
  s.behavior_log_prob = -1.0f;
  s.param_version = 1;
  s.player_id = "red";
  s.agent_id = -1;
  t.steps = {s};
  std::vector<Trajectory> finished = {t};
  CHECK_THROWS_WITH_AS(BuildTrainingBatches(mode, finished),
                       doctest::Contains("MissingAgentTag"), Error);
}

TEST_CASE("joint batches keep team reward sums aligned with the environment") {
  auto env = MakeEnv("grid_capture");
  Rng rng(3);
  auto obs = env->Reset(17);
  std::vector<Trajectory> finished;
  std::vector<std::vector<float>> team_rewards_per_step;  // [t] -> per player sums

  // Roll one episode with both players acting; build one trajectory per
  // (player, agent) exactly as an actor would.
  std::map<std::pair<int, int>, Trajectory> partial;
  bool done = false;
  int steps = 0;
  while (!done && steps < 12) {
    JointAction actions(2);
    for (int p = 0; p < 2; ++p) {
      for (int a = 0; a < 2; ++a) {
        const auto& mask = obs[static_cast<size_t>(p)].action_mask[static_cast<size_t>(a)];
        std::vector<int> legal;
        for (size_t k = 0; k < mask.size(); ++k)
          if (mask[k]) legal.push_back(static_cast<int>(k));
        actions[p].push_back(legal[rng.UniformInt(legal.size())]);
      }
    }
    auto r = env->Step(actions);
    std::vector<float> sums(2, 0.0f);
    for (int p = 0; p < 2; ++p) {
      for (int a = 0; a < 2; ++a) {
        Transition s;
        s.obs = obs[static_cast<size_t>(p)].per_agent_obs[static_cast<size_t>(a)];
        s.mask = obs[static_cast<size_t>(p)].action_mask[static_cast<size_t>(a)];
        s.action = actions[p][a];
        s.reward = r.rewards[static_cast<size_t>(p)][static_cast<size_t>(a)];
        s.done = r.done;
        s.behavior_log_prob = -1.0f;
        s.param_version = 1;
        s.player_id = p == 0 ? "red" : "blue";
        s.agent_id = a;
        partial[{p, a}].steps.push_back(std::move(s));
        sums[static_cast<size_t>(p)] += r.rewards[static_cast<size_t>(p)][static_cast<size_t>(a)];
      }
    }
    team_rewards_per_step.push_back(sums);
    obs = r.observation;
    done = r.done;
    ++steps;
  }
  for (auto& [key, traj] : partial) finished.push_back(traj);

  CooperationMode mode{CooperationMode::Mode::kJoint, true, true};
  auto batches = BuildTrainingBatches(mode, finished);
  REQUIRE(batches.size() == 2);
  for (const auto& batch : batches) {
    int player = batch.player_id == "red" ? 0 : 1;
    REQUIRE(batch.trajectories.size() == 2);
    // Rows stay (t, agent) aligned: at each step the per-agent rewards sum
    // to the team reward the environment emitted.
    CHECK(batch.trajectories[0].steps.front().agent_id <=
          batch.trajectories[1].steps.front().agent_id);
    for (size_t t = 0; t < batch.trajectories[0].steps.size(); ++t) {
      float sum = batch.trajectories[0].steps[t].reward +
                  batch.trajectories[1].steps[t].reward;
      CHECK(sum == team_rewards_per_step[t][static_cast<size_t>(player)]);
    }
  }
}

TEST_CASE("a saved league reloads to identical ratings") {
  auto dir = std::filesystem::temp_directory_path() / "rlmesh_league_test";
  std::filesystem::create_directories(dir);
  auto file = dir / "league.txt";

  League league;
  league.set_env_id("matrix_rps");
  league.RegisterPlayer("alpha", PlayerRole::kMain, RpsPolicy("alpha", {1, 2, 3}));
  league.RegisterPlayer("beta", PlayerRole::kPeer, RpsPolicy("beta", {3, 2, 1}));
  league.SnapshotGeneration("alpha");
  league.SnapshotGeneration("beta");
  league.EvaluationRound(EvalPairing::kAllPairs, 50, "matrix_rps", 5);
  league.Save(file);

  League loaded;
  loaded.LoadFrom(file);
  CHECK(loaded.env_id() == "matrix_rps");
  CHECK(loaded.MatchCount() == league.MatchCount());
  auto want = league.EloRatings();
  auto got = loaded.EloRatings();
  REQUIRE(got.size() == want.size());
  for (const auto& [key, rating] : want) CHECK(got[key] == rating);
  CHECK(loaded.GenerationChecksum({"alpha", 1}) ==
        league.GenerationChecksum({"alpha", 1}));
  CHECK(loaded.LiveParams("beta").values == league.LiveParams("beta").values);

  // A corrupted sidecar is rejected on load.
  auto sidecar = dir / "league.alpha.g1.bin";
  std::filesystem::resize_file(sidecar, std::filesystem::file_size(sidecar) - 2);
  League corrupt;
  CHECK_THROWS_WITH_AS(corrupt.LoadFrom(file), doctest::Contains("CorruptPayload"),
                       Error);
  std::filesystem::remove_all(dir);
}
