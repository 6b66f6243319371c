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

#include "rlmesh/league/league.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rlmesh {

namespace {

constexpr char kLeagueMagic[] = "rlmesh-league v1";

// Duels on single-player environments compare discounted returns so a faster
// solution beats a slower one.
constexpr double kDuelGamma = 0.9;

void CheckPlayerId(const std::string& id) {
  if (id.empty()) Throw(ErrorCode::kConfigInvalid, "empty player id");
  for (char c : id) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
              c == '.';
    if (!ok)
      Throw(ErrorCode::kConfigInvalid,
            "player id may contain only [A-Za-z0-9._-]: " + id);
  }
}

std::string KeyString(const GenerationKey& k) {
  return k.player_id + ":" + std::to_string(k.generation);
}

GenerationKey ParseKeyString(const std::string& s) {
  auto pos = s.rfind(':');
  if (pos == std::string::npos)
    Throw(ErrorCode::kCorruptPayload, "bad generation key: " + s);
  return {s.substr(0, pos), std::stoi(s.substr(pos + 1))};
}

std::string ArchString(const ArchSpec& a) {
  std::ostringstream os;
  os << static_cast<int>(a.kind) << ',' << a.input_dim << ',' << a.action_dim << ','
     << a.hidden_dim;
  return os.str();
}

ArchSpec ParseArchString(const std::string& s) {
  ArchSpec a;
  int kind = 0;
  char c1, c2, c3;
  std::istringstream is(s);
  if (!(is >> kind >> c1 >> a.input_dim >> c2 >> a.action_dim >> c3 >> a.hidden_dim))
    Throw(ErrorCode::kCorruptPayload, "bad arch descriptor: " + s);
  if (kind < 1 || kind > 3) Throw(ErrorCode::kCorruptPayload, "bad arch kind");
  a.kind = static_cast<Arch>(kind);
  return a;
}

}  // namespace

const char* PlayerRoleName(PlayerRole role) {
  switch (role) {
    case PlayerRole::kMain: return "main";
    case PlayerRole::kMainExploiter: return "main_exploiter";
    case PlayerRole::kLeagueExploiter: return "league_exploiter";
    case PlayerRole::kPeer: return "peer";
  }
  return "unknown";
}

PlayerRole ParsePlayerRole(const std::string& name) {
  for (PlayerRole r : {PlayerRole::kMain, PlayerRole::kMainExploiter,
                       PlayerRole::kLeagueExploiter, PlayerRole::kPeer}) {
    if (name == PlayerRoleName(r)) return r;
  }
  Throw(ErrorCode::kConfigInvalid, "unknown player role: " + name);
}

const char* OpponentStrategyName(OpponentStrategy s) {
  switch (s) {
    case OpponentStrategy::kNaiveSelf: return "naive_self";
    case OpponentStrategy::kSelf8020: return "self_80_20";
    case OpponentStrategy::kPfsp: return "pfsp";
    case OpponentStrategy::kUniformPast: return "uniform_past";
    case OpponentStrategy::kRoleBased: return "role_based";
  }
  return "unknown";
}

OpponentStrategy ParseOpponentStrategy(const std::string& name) {
  for (OpponentStrategy s :
       {OpponentStrategy::kNaiveSelf, OpponentStrategy::kSelf8020,
        OpponentStrategy::kPfsp, OpponentStrategy::kUniformPast,
        OpponentStrategy::kRoleBased}) {
    if (name == OpponentStrategyName(s)) return s;
  }
  Throw(ErrorCode::kUnknownStrategy, "unknown opponent strategy: " + name);
}

std::vector<float> PolicyInput(std::span<const float> env_obs, int agent_id,
                               int agents_per_player, const ArchSpec& arch) {
  std::vector<float> input(env_obs.begin(), env_obs.end());
  if (arch.input_dim == static_cast<int>(env_obs.size())) return input;
  if (arch.input_dim == static_cast<int>(env_obs.size()) + agents_per_player) {
    for (int k = 0; k < agents_per_player; ++k)
      input.push_back(k == agent_id ? 1.0f : 0.0f);
    return input;
  }
  Throw(ErrorCode::kShapeMismatch,
        "policy input dim " + std::to_string(arch.input_dim) +
            " matches neither the observation nor observation + agent id");
}

std::vector<LearnerBatch> BuildTrainingBatches(const CooperationMode& mode,
                                               std::span<const Trajectory> finished) {
  std::map<std::string, LearnerBatch> batches;
  for (const Trajectory& traj : finished) {
    if (traj.steps.empty()) Throw(ErrorCode::kEmptyTrajectory, "empty trajectory");
    const std::string& player = traj.steps.front().player_id;
    int agent = traj.steps.front().agent_id;
    bool needs_agent = mode.mode == CooperationMode::Mode::kJoint ||
                       (mode.mode == CooperationMode::Mode::kIndependent &&
                        !mode.shared_policy);
    for (const Transition& t : traj.steps) {
      if (needs_agent && (t.agent_id < 0 || t.agent_id != agent))
        Throw(ErrorCode::kMissingAgentTag,
              "trajectory lacks a consistent agent tag for player " + player);
    }
    std::string key = player;
    int batch_agent = -1;
    if (mode.mode == CooperationMode::Mode::kIndependent && !mode.shared_policy) {
      key = player + "/agent" + std::to_string(agent);
      batch_agent = agent;
    }
    LearnerBatch& b = batches[key];
    b.learner_key = key;
    b.player_id = player;
    b.agent_id = batch_agent;
    b.trajectories.push_back(traj);
  }
  std::vector<LearnerBatch> out;
  out.reserve(batches.size());
  for (auto& [key, batch] : batches) {
    if (mode.mode == CooperationMode::Mode::kJoint) {
      // Keep (t, agent) alignment: rows of one episode group by agent order.
      std::stable_sort(batch.trajectories.begin(), batch.trajectories.end(),
                       [](const Trajectory& x, const Trajectory& y) {
                         return x.steps.front().agent_id < y.steps.front().agent_id;
                       });
    }
    out.push_back(std::move(batch));
  }
  return out;
}

void League::RegisterPlayer(const std::string& player_id, PlayerRole role,
                            PolicyParameters live, bool baseline) {
  CheckPlayerId(player_id);
  std::lock_guard lock(mu_);
  RLMESH_CHECK(!players_.contains(player_id), "player already registered");
  PlayerRecord rec;
  rec.role = role;
  rec.baseline = baseline;
  rec.live = std::move(live);
  players_[player_id] = std::move(rec);
}

bool League::HasPlayer(const std::string& player_id) const {
  std::lock_guard lock(mu_);
  return players_.contains(player_id);
}

std::vector<std::string> League::PlayerIds() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, rec] : players_) ids.push_back(id);
  return ids;
}

const League::PlayerRecord& League::RecordOf(const std::string& player_id) const {
  auto it = players_.find(player_id);
  if (it == players_.end())
    Throw(ErrorCode::kUnknownPlayer, "player " + player_id + " is not registered");
  return it->second;
}

PlayerRole League::RoleOf(const std::string& player_id) const {
  std::lock_guard lock(mu_);
  return RecordOf(player_id).role;
}

void League::SetLiveParams(const std::string& player_id, PolicyParameters params) {
  std::lock_guard lock(mu_);
  auto it = players_.find(player_id);
  if (it == players_.end())
    Throw(ErrorCode::kUnknownPlayer, "player " + player_id + " is not registered");
  it->second.live = std::move(params);
}

PolicyParameters League::LiveParams(const std::string& player_id) const {
  std::lock_guard lock(mu_);
  return RecordOf(player_id).live;
}

int League::SnapshotGeneration(const std::string& player_id) {
  std::lock_guard lock(mu_);
  auto it = players_.find(player_id);
  if (it == players_.end())
    Throw(ErrorCode::kUnknownPlayer, "player " + player_id + " is not registered");
  it->second.generations.push_back(it->second.live);
  return static_cast<int>(it->second.generations.size());
}

int League::GenerationCount(const std::string& player_id) const {
  std::lock_guard lock(mu_);
  return static_cast<int>(RecordOf(player_id).generations.size());
}

PolicyParameters League::ParamsForLocked(const GenerationKey& key) const {
  const PlayerRecord& rec = RecordOf(key.player_id);
  if (key.generation == 0) return rec.live;
  if (key.generation < 1 ||
      key.generation > static_cast<int>(rec.generations.size()))
    Throw(ErrorCode::kUnknownGeneration,
          KeyString(key) + " does not name a frozen generation");
  return rec.generations[static_cast<size_t>(key.generation - 1)];
}

PolicyParameters League::GenerationParams(const GenerationKey& key) const {
  std::lock_guard lock(mu_);
  return ParamsForLocked(key);
}

uint64_t League::GenerationChecksum(const GenerationKey& key) const {
  std::lock_guard lock(mu_);
  return ParamsChecksum(ParamsForLocked(key));
}

void League::RecordMatch(const MatchResult& result) {
  std::lock_guard lock(mu_);
  ParamsForLocked(result.side_a);  // validates both sides exist
  ParamsForLocked(result.side_b);
  RLMESH_CHECK(result.game_count >= 1, "game_count must be positive");
  match_log_.push_back(result);
  double n = static_cast<double>(result.game_count);
  double wins_a = result.outcome == Outcome::kAWin   ? n
                  : result.outcome == Outcome::kDraw ? 0.5 * n
                                                     : 0.0;
  Tally& ab = tallies_[{result.side_a, result.side_b}];
  ab.games += n;
  ab.wins += wins_a;
  Tally& ba = tallies_[{result.side_b, result.side_a}];
  ba.games += n;
  ba.wins += n - wins_a;
}

size_t League::MatchCount() const {
  std::lock_guard lock(mu_);
  return match_log_.size();
}

double League::Games(const GenerationKey& a, const GenerationKey& b) const {
  std::lock_guard lock(mu_);
  auto it = tallies_.find({a, b});
  return it == tallies_.end() ? 0.0 : it->second.games;
}

double League::Wins(const GenerationKey& a, const GenerationKey& b) const {
  std::lock_guard lock(mu_);
  auto it = tallies_.find({a, b});
  return it == tallies_.end() ? 0.0 : it->second.wins;
}

double League::WinRateLocked(const GenerationKey& a, const GenerationKey& b) const {
  auto it = tallies_.find({a, b});
  if (it == tallies_.end() || it->second.games == 0.0) return 0.5;
  return it->second.wins / it->second.games;
}

double League::EmpiricalWinRate(const GenerationKey& a, const GenerationKey& b) const {
  std::lock_guard lock(mu_);
  return WinRateLocked(a, b);
}

std::map<GenerationKey, double> League::EloRatings(double k_factor,
                                                   double initial) const {
  std::lock_guard lock(mu_);
  if (match_log_.empty()) Throw(ErrorCode::kNoMatches, "no matches recorded");
  std::map<GenerationKey, double> ratings;
  for (const MatchResult& m : match_log_) {
    ratings.try_emplace(m.side_a, initial);
    ratings.try_emplace(m.side_b, initial);
    double score_a = m.outcome == Outcome::kAWin   ? 1.0
                     : m.outcome == Outcome::kDraw ? 0.5
                                                   : 0.0;
    for (int g = 0; g < m.game_count; ++g) {
      double& ra = ratings[m.side_a];
      double& rb = ratings[m.side_b];
      double expected_a = 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
      double delta = k_factor * (score_a - expected_a);
      ra += delta;
      rb -= delta;
    }
  }
  return ratings;
}

std::vector<GenerationKey> League::FrozenPoolLocked(
    const std::string& exclude_player) const {
  std::vector<GenerationKey> pool;
  for (const auto& [id, rec] : players_) {
    if (id == exclude_player) continue;
    for (int g = 1; g <= static_cast<int>(rec.generations.size()); ++g)
      pool.push_back({id, g});
  }
  return pool;
}

std::vector<double> League::PfspWeightsLocked(
    const std::string& player_id, std::span<const GenerationKey> pool) const {
  RLMESH_CHECK(!pool.empty(), "pfsp pool is empty");
  std::vector<double> weights(pool.size(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < pool.size(); ++i) {
    // Aggregate the player's record against this opponent generation over
    // all of its own generations (live included).
    const PlayerRecord& rec = RecordOf(player_id);
    double games = 0.0, wins = 0.0;
    for (int g = 0; g <= static_cast<int>(rec.generations.size()); ++g) {
      auto it = tallies_.find({{player_id, g}, pool[i]});
      if (it != tallies_.end()) {
        games += it->second.games;
        wins += it->second.wins;
      }
    }
    double p = games > 0.0 ? wins / games : 0.5;
    weights[i] = std::pow(1.0 - p, pfsp_exponent_);
    total += weights[i];
  }
  if (total <= 0.0) {
    // The player beats everyone; fall back to uniform.
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(pool.size()));
    return weights;
  }
  for (double& w : weights) w /= total;
  return weights;
}

std::vector<double> League::PfspWeights(const std::string& player_id,
                                        std::span<const GenerationKey> pool) const {
  std::lock_guard lock(mu_);
  return PfspWeightsLocked(player_id, pool);
}

GenerationKey League::SampleOpponent(const std::string& player_id,
                                     OpponentStrategy strategy, Rng& rng) const {
  std::lock_guard lock(mu_);
  const PlayerRecord& rec = RecordOf(player_id);
  switch (strategy) {
    case OpponentStrategy::kNaiveSelf: {
      if (rec.generations.empty())
        Throw(ErrorCode::kEmptyPool, "no frozen generation for " + player_id);
      return {player_id, static_cast<int>(rec.generations.size())};
    }
    case OpponentStrategy::kSelf8020: {
      if (rng.Uniform01() < 0.8 || rec.generations.empty()) return {player_id, 0};
      int g = 1 + static_cast<int>(rng.UniformInt(rec.generations.size()));
      return {player_id, g};
    }
    case OpponentStrategy::kPfsp: {
      auto pool = FrozenPoolLocked();
      if (pool.empty()) Throw(ErrorCode::kEmptyPool, "league has no frozen generations");
      auto weights = PfspWeightsLocked(player_id, pool);
      return pool[rng.Categorical(weights)];
    }
    case OpponentStrategy::kUniformPast: {
      auto pool = FrozenPoolLocked();
      if (pool.empty()) Throw(ErrorCode::kEmptyPool, "league has no frozen generations");
      return pool[rng.UniformInt(pool.size())];
    }
    case OpponentStrategy::kRoleBased: {
      if (rec.role == PlayerRole::kMainExploiter) {
        for (const auto& [id, other] : players_) {
          if (other.role == PlayerRole::kMain) return {id, 0};
        }
        Throw(ErrorCode::kEmptyPool, "no main player for the main exploiter");
      }
      auto pool = FrozenPoolLocked();
      if (pool.empty()) Throw(ErrorCode::kEmptyPool, "league has no frozen generations");
      auto weights = PfspWeightsLocked(player_id, pool);
      return pool[rng.Categorical(weights)];
    }
  }
  Throw(ErrorCode::kUnknownStrategy, "unhandled strategy");
}

Outcome PlayGame(const std::string& env_id, const PolicyParameters& a,
                 const PolicyParameters& b, uint64_t seed) {
  auto env = MakeEnv(env_id);
  const EnvSpec& spec = env->spec();
  if (spec.players == 1) {
    // Return duel: both sides play identically seeded copies.
    auto run = [&](const PolicyParameters& params, uint64_t stream) {
      auto solo = MakeEnv(env_id);
      Rng rng(HashCombine(seed, stream));
      auto obs = solo->Reset(seed);
      double ret = 0.0, discount = 1.0;
      while (!solo->done()) {
        JointAction actions(1);
        for (int ag = 0; ag < spec.agents_per_player; ++ag) {
          auto input = PolicyInput(obs[0].per_agent_obs[ag], ag,
                                   spec.agents_per_player, params.arch);
          auto r = Infer(params, input, obs[0].action_mask[ag], rng);
          actions[0].push_back(r.action);
        }
        auto sr = solo->Step(actions);
        for (float rew : sr.rewards[0]) ret += discount * rew;
        discount *= kDuelGamma;
        obs = sr.observation;
      }
      return ret;
    };
    double ret_a = run(a, 1);
    double ret_b = run(b, 2);
    if (std::abs(ret_a - ret_b) < 1e-12) return Outcome::kDraw;
    return ret_a > ret_b ? Outcome::kAWin : Outcome::kBWin;
  }

  if (spec.players != 2)
    Throw(ErrorCode::kEnvPlayerMismatch,
          env_id + " has " + std::to_string(spec.players) + " players");
  Rng rng_a(HashCombine(seed, 1));
  Rng rng_b(HashCombine(seed, 2));
  auto obs = env->Reset(seed);
  double total_a = 0.0, total_b = 0.0;
  while (!env->done()) {
    JointAction actions(2);
    for (int ag = 0; ag < spec.agents_per_player; ++ag) {
      auto in_a =
          PolicyInput(obs[0].per_agent_obs[ag], ag, spec.agents_per_player, a.arch);
      actions[0].push_back(Infer(a, in_a, obs[0].action_mask[ag], rng_a).action);
    }
    for (int ag = 0; ag < spec.agents_per_player; ++ag) {
      auto in_b =
          PolicyInput(obs[1].per_agent_obs[ag], ag, spec.agents_per_player, b.arch);
      actions[1].push_back(Infer(b, in_b, obs[1].action_mask[ag], rng_b).action);
    }
    auto sr = env->Step(actions);
    for (float r : sr.rewards[0]) total_a += r;
    for (float r : sr.rewards[1]) total_b += r;
    obs = sr.observation;
  }
  if (std::abs(total_a - total_b) < 1e-12) return Outcome::kDraw;
  return total_a > total_b ? Outcome::kAWin : Outcome::kBWin;
}

EvaluationReport League::EvaluationRound(EvalPairing pairing, int games_per_pair,
                                         const std::string& env_id, uint64_t seed) {
  // Snapshot the pairings and parameters under the lock, play outside it.
  struct PairJob {
    GenerationKey a, b;
    PolicyParameters params_a, params_b;
  };
  std::vector<PairJob> jobs;
  {
    std::lock_guard lock(mu_);
    std::vector<GenerationKey> pool;
    std::vector<GenerationKey> baselines;
    for (const auto& [id, rec] : players_) {
      for (int g = 1; g <= static_cast<int>(rec.generations.size()); ++g) {
        (rec.baseline ? baselines : pool).push_back({id, g});
      }
    }
    if (pairing == EvalPairing::kAllPairs) {
      std::vector<GenerationKey> all = pool;
      all.insert(all.end(), baselines.begin(), baselines.end());
      for (size_t i = 0; i < all.size(); ++i)
        for (size_t j = i + 1; j < all.size(); ++j)
          jobs.push_back({all[i], all[j], ParamsForLocked(all[i]),
                          ParamsForLocked(all[j])});
    } else {
      for (const auto& p : pool)
        for (const auto& bl : baselines)
          jobs.push_back({p, bl, ParamsForLocked(p), ParamsForLocked(bl)});
    }
  }

  EvaluationReport report;
  report.pairs = static_cast<int>(jobs.size());
  for (const PairJob& job : jobs) {
    uint64_t pair_seed =
        HashCombine(seed, HashString(KeyString(job.a) + "|" + KeyString(job.b)));
    for (int g = 0; g < games_per_pair; ++g) {
      uint64_t game_seed = HashCombine(pair_seed, static_cast<uint64_t>(g));
      // Alternate seats so asymmetric environments stay fair.
      bool swap = (g % 2) == 1;
      const PolicyParameters& first = swap ? job.params_b : job.params_a;
      const PolicyParameters& second = swap ? job.params_a : job.params_b;
      Outcome o = PlayGame(env_id, first, second, game_seed);
      if (swap) {
        o = o == Outcome::kAWin   ? Outcome::kBWin
            : o == Outcome::kBWin ? Outcome::kAWin
                                  : Outcome::kDraw;
      }
      RecordMatch({job.a, job.b, o, 1});
      ++report.games_played;
    }
  }
  {
    std::lock_guard lock(mu_);
    if (match_log_.empty()) return report;
  }
  report.ratings = EloRatings();
  return report;
}

void League::Save(const std::filesystem::path& file) const {
  std::lock_guard lock(mu_);
  std::ofstream out(file);
  if (!out) Throw(ErrorCode::kIoError, "cannot write " + file.string());
  auto dir = file.parent_path();
  auto stem = file.stem().string();
  out << kLeagueMagic << "\n";
  out << "pfsp_exponent " << pfsp_exponent_ << "\n";
  if (!env_id_.empty()) out << "env " << env_id_ << "\n";

  auto write_sidecar = [&](const PolicyParameters& params, const std::string& name) {
    std::filesystem::path sidecar = dir / (stem + "." + name + ".bin");
    Bytes bytes = SerializeParams(params);
    std::ofstream bin(sidecar, std::ios::binary);
    if (!bin) Throw(ErrorCode::kIoError, "cannot write " + sidecar.string());
    bin.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    std::ostringstream line;
    line << "sidecar=" << sidecar.filename().string() << " checksum=" << std::hex
         << Checksum64(bytes);
    return line.str();
  };

  for (const auto& [id, rec] : players_) {
    out << "player " << id << " role=" << PlayerRoleName(rec.role)
        << " baseline=" << (rec.baseline ? 1 : 0)
        << " arch=" << ArchString(rec.live.arch) << "\n";
    out << "live " << id << " " << write_sidecar(rec.live, id + ".live") << "\n";
    for (size_t g = 0; g < rec.generations.size(); ++g) {
      out << "generation " << id << " " << (g + 1) << " "
          << write_sidecar(rec.generations[g], id + ".g" + std::to_string(g + 1))
          << "\n";
    }
  }
  for (const MatchResult& m : match_log_) {
    const char* o = m.outcome == Outcome::kAWin   ? "a_win"
                    : m.outcome == Outcome::kBWin ? "b_win"
                                                  : "draw";
    out << "match " << KeyString(m.side_a) << " " << KeyString(m.side_b) << " " << o
        << " games=" << m.game_count << "\n";
  }
}

void League::LoadFrom(const std::filesystem::path& file) {
  RLMESH_CHECK(players_.empty() && match_log_.empty(),
               "LoadFrom requires a fresh league");
  std::ifstream in(file);
  if (!in) Throw(ErrorCode::kIoError, "cannot read " + file.string());
  auto dir = file.parent_path();
  std::string line;
  if (!std::getline(in, line) || line != kLeagueMagic)
    Throw(ErrorCode::kCorruptPayload, "not a league file: " + file.string());

  League& league = *this;
  std::map<std::string, ArchSpec> archs;

  auto read_sidecar = [&](const std::string& rest, const ArchSpec& arch) {
    std::istringstream is(rest);
    std::string sidecar_tok, checksum_tok;
    is >> sidecar_tok >> checksum_tok;
    if (sidecar_tok.rfind("sidecar=", 0) != 0 || checksum_tok.rfind("checksum=", 0) != 0)
      Throw(ErrorCode::kCorruptPayload, "bad sidecar line: " + rest);
    std::filesystem::path sidecar = dir / sidecar_tok.substr(8);
    std::ifstream bin(sidecar, std::ios::binary);
    if (!bin) Throw(ErrorCode::kIoError, "missing sidecar " + sidecar.string());
    Bytes bytes((std::istreambuf_iterator<char>(bin)),
                std::istreambuf_iterator<char>());
    uint64_t expected = std::stoull(checksum_tok.substr(9), nullptr, 16);
    if (Checksum64(bytes) != expected)
      Throw(ErrorCode::kCorruptPayload, "checksum mismatch for " + sidecar.string());
    return DeserializeParams(bytes, arch);
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "pfsp_exponent") {
      is >> league.pfsp_exponent_;
    } else if (tag == "env") {
      is >> league.env_id_;
    } else if (tag == "player") {
      std::string id, role_tok, baseline_tok, arch_tok;
      is >> id >> role_tok >> baseline_tok >> arch_tok;
      if (role_tok.rfind("role=", 0) != 0 || baseline_tok.rfind("baseline=", 0) != 0 ||
          arch_tok.rfind("arch=", 0) != 0)
        Throw(ErrorCode::kCorruptPayload, "bad player line: " + line);
      PlayerRecord rec;
      rec.role = ParsePlayerRole(role_tok.substr(5));
      rec.baseline = baseline_tok.substr(9) == "1";
      archs[id] = ParseArchString(arch_tok.substr(5));
      league.players_[id] = std::move(rec);
    } else if (tag == "live") {
      std::string id;
      is >> id;
      std::string rest;
      std::getline(is, rest);
      if (!league.players_.contains(id))
        Throw(ErrorCode::kCorruptPayload, "live params for unknown player " + id);
      league.players_[id].live = read_sidecar(rest, archs.at(id));
    } else if (tag == "generation") {
      std::string id;
      int index = 0;
      is >> id >> index;
      std::string rest;
      std::getline(is, rest);
      if (!league.players_.contains(id))
        Throw(ErrorCode::kCorruptPayload, "generation for unknown player " + id);
      auto& gens = league.players_[id].generations;
      if (index != static_cast<int>(gens.size()) + 1)
        Throw(ErrorCode::kCorruptPayload, "generation indices must be dense");
      gens.push_back(read_sidecar(rest, archs.at(id)));
    } else if (tag == "match") {
      std::string a, b, outcome_tok, games_tok;
      is >> a >> b >> outcome_tok >> games_tok;
      MatchResult m;
      m.side_a = ParseKeyString(a);
      m.side_b = ParseKeyString(b);
      m.outcome = outcome_tok == "a_win"   ? Outcome::kAWin
                  : outcome_tok == "b_win" ? Outcome::kBWin
                  : outcome_tok == "draw"
                      ? Outcome::kDraw
                      : throw Error(ErrorCode::kCorruptPayload, "bad outcome");
      if (games_tok.rfind("games=", 0) != 0)
        Throw(ErrorCode::kCorruptPayload, "bad match line: " + line);
      m.game_count = std::stoi(games_tok.substr(6));
      league.RecordMatch(m);
    } else {
      Throw(ErrorCode::kCorruptPayload, "unknown league record: " + tag);
    }
  }
}

}  // namespace rlmesh
