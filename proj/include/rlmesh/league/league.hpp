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

#ifndef RLMESH_LEAGUE_LEAGUE_HPP_
#define RLMESH_LEAGUE_LEAGUE_HPP_

#include <compare>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rlmesh/core/rng.hpp"
#include "rlmesh/env/env.hpp"
#include "rlmesh/learn/learn.hpp"
#include "rlmesh/policy/policy.hpp"

namespace rlmesh {

enum class PlayerRole { kMain, kMainExploiter, kLeagueExploiter, kPeer };
const char* PlayerRoleName(PlayerRole role);
PlayerRole ParsePlayerRole(const std::string& name);

enum class Outcome { kAWin, kBWin, kDraw };

// generation 0 refers to the live policy; frozen generations count from 1.
struct GenerationKey {
  std::string player_id;
  int generation = 0;
  auto operator<=>(const GenerationKey&) const = default;
};

struct MatchResult {
  GenerationKey side_a;
  GenerationKey side_b;
  Outcome outcome = Outcome::kDraw;
  int game_count = 1;
};

enum class OpponentStrategy {
  kNaiveSelf,    // latest own frozen generation
  kSelf8020,     // live with p=0.8, else uniform over own past generations
  kPfsp,         // (1 - win rate)^exponent over all frozen league generations
  kUniformPast,  // uniform over all frozen league generations
  kRoleBased,    // dispatch on the caller's role
};
const char* OpponentStrategyName(OpponentStrategy s);
OpponentStrategy ParseOpponentStrategy(const std::string& name);

struct CooperationMode {
  enum class Mode { kIndependent, kJoint };
  Mode mode = Mode::kIndependent;
  bool shared_policy = true;
  bool agent_id_feature = true;
};

// One learner's training batch, keyed by the policy it feeds. Joint batches
// keep trajectories sorted by agent so rows stay (t, agent) aligned.
struct LearnerBatch {
  std::string learner_key;
  std::string player_id;
  int agent_id = -1;  // set for independent+distinct batches only
  std::vector<Trajectory> trajectories;
};

std::vector<LearnerBatch> BuildTrainingBatches(const CooperationMode& mode,
                                               std::span<const Trajectory> finished);

// Appends a one-hot agent id when the arch expects it (input_dim equals
// observation dim + agent count); passes the observation through otherwise.
std::vector<float> PolicyInput(std::span<const float> env_obs, int agent_id,
                               int agents_per_player, const ArchSpec& arch);

struct EvaluationReport {
  int games_played = 0;
  int pairs = 0;
  std::map<GenerationKey, double> ratings;
};

enum class EvalPairing { kAllPairs, kVsBaselines };

// Players manager: registry of players and frozen generations, confrontation
// bookkeeping, Elo ratings, and opponent sampling. A single authority
// serializes mutation; queries take the same lock but copy out results.
class League {
 public:
  explicit League(double pfsp_exponent = 2.0) : pfsp_exponent_(pfsp_exponent) {}

  void RegisterPlayer(const std::string& player_id, PlayerRole role,
                      PolicyParameters live, bool baseline = false);
  bool HasPlayer(const std::string& player_id) const;
  std::vector<std::string> PlayerIds() const;
  PlayerRole RoleOf(const std::string& player_id) const;

  void SetLiveParams(const std::string& player_id, PolicyParameters params);
  PolicyParameters LiveParams(const std::string& player_id) const;

  // Freezes a copy of the live parameters; returns the new dense index.
  int SnapshotGeneration(const std::string& player_id);
  int GenerationCount(const std::string& player_id) const;
  PolicyParameters GenerationParams(const GenerationKey& key) const;
  uint64_t GenerationChecksum(const GenerationKey& key) const;

  void RecordMatch(const MatchResult& result);
  size_t MatchCount() const;

  // Pairwise tallies; wins(a,b) counts a's wins against b, draws split 0.5.
  double Games(const GenerationKey& a, const GenerationKey& b) const;
  double Wins(const GenerationKey& a, const GenerationKey& b) const;
  // P(a beats b) from recorded tallies; 0.5 when no games were played.
  double EmpiricalWinRate(const GenerationKey& a, const GenerationKey& b) const;

  // Sequential Elo over the match log in recorded order; draws score 0.5.
  std::map<GenerationKey, double> EloRatings(double k_factor = 32.0,
                                             double initial = 1000.0) const;

  // Opponent sampling; a pure function of the league snapshot, the strategy,
  // and the rng state.
  GenerationKey SampleOpponent(const std::string& player_id, OpponentStrategy strategy,
                               Rng& rng) const;

  // Normalized pfsp weights for a candidate pool; weight_j is proportional to
  // (1 - P[player beats j])^exponent. A pool the player fully dominates falls
  // back to uniform.
  std::vector<double> PfspWeights(const std::string& player_id,
                                  std::span<const GenerationKey> pool) const;

  double pfsp_exponent() const { return pfsp_exponent_; }

  // Plays games_per_pair fixed-seed games per pairing between frozen
  // generations, records every result, and returns recomputed ratings.
  // Evaluation never mutates any policy.
  EvaluationReport EvaluationRound(EvalPairing pairing, int games_per_pair,
                                   const std::string& env_id, uint64_t seed);

  void set_env_id(const std::string& env_id) { env_id_ = env_id; }
  const std::string& env_id() const { return env_id_; }

  // Text document plus one binary sidecar per parameter payload; reloading
  // reproduces identical ratings. LoadFrom must be called on a fresh league.
  void Save(const std::filesystem::path& file) const;
  void LoadFrom(const std::filesystem::path& file);

 private:
  struct PlayerRecord {
    PlayerRole role = PlayerRole::kPeer;
    bool baseline = false;
    PolicyParameters live;
    std::vector<PolicyParameters> generations;
  };

  struct Tally {
    double games = 0.0;
    double wins = 0.0;  // from the row key's perspective, draws count 0.5
  };

  const PlayerRecord& RecordOf(const std::string& player_id) const;
  PolicyParameters ParamsForLocked(const GenerationKey& key) const;
  std::vector<GenerationKey> FrozenPoolLocked(
      const std::string& exclude_player = "") const;
  double WinRateLocked(const GenerationKey& a, const GenerationKey& b) const;
  std::vector<double> PfspWeightsLocked(const std::string& player_id,
                                        std::span<const GenerationKey> pool) const;

  mutable std::mutex mu_;
  double pfsp_exponent_;
  std::string env_id_;
  std::map<std::string, PlayerRecord> players_;
  std::vector<MatchResult> match_log_;
  std::map<std::pair<GenerationKey, GenerationKey>, Tally> tallies_;
};

// One game between two parameter sets. Two-player environments seat a as
// player 0 and b as player 1; single-player environments run a return duel
// on identically seeded copies. The outcome is from a's perspective.
Outcome PlayGame(const std::string& env_id, const PolicyParameters& a,
                 const PolicyParameters& b, uint64_t seed);

}  // namespace rlmesh

#endif  // RLMESH_LEAGUE_LEAGUE_HPP_
