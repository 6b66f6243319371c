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

#include <algorithm>
#include <array>
#include <cstdlib>

#include "rlmesh/env/env.hpp"

namespace rlmesh {
namespace {

// Two-team capture-the-flag on a 5x5 grid, two agents per team. Each team's
// flag sits at its base until an opposing agent walks onto it; a carrier who
// reaches their own base captures, ending the episode with +1 for the team
// and -1 for the opponent. The agent making the team's first flag pickup
// earns +0.1 shaping. Enemy agent positions are observed only while some
// teammate is within the vision radius (team-shared vision).
class GridCapture final : public Env {
 public:
  static constexpr int kSize = 5;
  static constexpr int kVisionRadius = 2;
  static constexpr int kObsDim = 14;

  GridCapture()
      : Env(EnvSpec{.env_id = "grid_capture",
                    .players = 2,
                    .agents_per_player = 2,
                    .obs_dim = kObsDim,
                    .action_dim = 5,
                    .max_episode_steps = 50}) {}

 protected:
  void DoReset(uint64_t /*seed*/) override {
    pos_[0] = {Cell{0, 1}, Cell{0, 3}};
    pos_[1] = {Cell{4, 1}, Cell{4, 3}};
    carrier_ = {-1, -1};
    touched_ = {false, false};
  }

  StepResult DoStep(const JointAction& actions) override {
    // Simultaneous movement; agents may share cells.
    for (int p = 0; p < 2; ++p) {
      for (int a = 0; a < 2; ++a) {
        auto [dx, dy] = Delta(actions[p][a]);
        pos_[p][a].x += dx;
        pos_[p][a].y += dy;
      }
    }

    StepResult r;
    r.rewards = {{0.0f, 0.0f}, {0.0f, 0.0f}};

    // Pickups: team p grabs the opponent flag from the opponent base.
    for (int p = 0; p < 2; ++p) {
      if (carrier_[p] >= 0) continue;
      Cell enemy_base = Base(1 - p);
      for (int a = 0; a < 2; ++a) {
        if (pos_[p][a] == enemy_base) {
          carrier_[p] = a;
          if (!touched_[p]) {
            touched_[p] = true;
            r.rewards[p][a] += 0.1f;
          }
          break;
        }
      }
    }

    // Captures resolve simultaneously; a double capture cancels out.
    std::array<bool, 2> captured = {false, false};
    for (int p = 0; p < 2; ++p) {
      if (carrier_[p] >= 0 && pos_[p][carrier_[p]] == Base(p)) captured[p] = true;
    }
    if (captured[0] || captured[1]) {
      r.done = true;
      for (int p = 0; p < 2; ++p) {
        float team = (captured[p] ? 1.0f : 0.0f) - (captured[1 - p] ? 1.0f : 0.0f);
        r.rewards[p][0] += team;
        r.rewards[p][1] += team;
      }
      r.info["captures_p0"] = captured[0] ? 1.0 : 0.0;
      r.info["captures_p1"] = captured[1] ? 1.0 : 0.0;
    }
    return r;
  }

  std::vector<JointObservation> Observe() const override {
    std::vector<JointObservation> out;
    out.reserve(2);
    for (int p = 0; p < 2; ++p) {
      JointObservation o;
      for (int a = 0; a < 2; ++a) {
        o.per_agent_obs.push_back(AgentObs(p, a));
        o.action_mask.push_back(Mask(pos_[p][a]));
      }
      out.push_back(std::move(o));
    }
    return out;
  }

 private:
  struct Cell {
    int x = 0, y = 0;
    bool operator==(const Cell&) const = default;
  };

  static Cell Base(int player) { return player == 0 ? Cell{0, 2} : Cell{4, 2}; }

  static std::pair<int, int> Delta(int action) {
    switch (action) {
      case 1: return {0, 1};
      case 2: return {0, -1};
      case 3: return {-1, 0};
      case 4: return {1, 0};
      default: return {0, 0};
    }
  }

  static std::vector<uint8_t> Mask(Cell c) {
    return {1,
            static_cast<uint8_t>(c.y + 1 < kSize),
            static_cast<uint8_t>(c.y - 1 >= 0),
            static_cast<uint8_t>(c.x - 1 >= 0),
            static_cast<uint8_t>(c.x + 1 < kSize)};
  }

  bool EnemyVisible(int player, Cell enemy) const {
    for (int a = 0; a < 2; ++a) {
      int d = std::max(std::abs(pos_[player][a].x - enemy.x),
                       std::abs(pos_[player][a].y - enemy.y));
      if (d <= kVisionRadius) return true;
    }
    return false;
  }

  std::vector<float> AgentObs(int p, int a) const {
    constexpr float kScale = 1.0f / (kSize - 1);
    std::vector<float> v(kObsDim, 0.0f);
    int mate = 1 - a;
    v[0] = pos_[p][a].x * kScale;
    v[1] = pos_[p][a].y * kScale;
    v[2] = pos_[p][mate].x * kScale;
    v[3] = pos_[p][mate].y * kScale;
    v[4] = carrier_[1 - p] >= 0 ? 1.0f : 0.0f;  // own flag taken by enemy
    v[5] = carrier_[p] >= 0 ? 1.0f : 0.0f;      // enemy flag held by my team
    v[6] = carrier_[p] == a ? 1.0f : 0.0f;
    for (int e = 0; e < 2; ++e) {
      Cell enemy = pos_[1 - p][e];
      bool visible = EnemyVisible(p, enemy);
      v[7 + 2 * e] = visible ? enemy.x * kScale : 0.0f;
      v[8 + 2 * e] = visible ? enemy.y * kScale : 0.0f;
      v[11 + e] = visible ? 1.0f : 0.0f;
    }
    v[13] = static_cast<float>(episode_step_) / spec_.max_episode_steps;
    return v;
  }

  std::array<std::array<Cell, 2>, 2> pos_;
  std::array<int, 2> carrier_;  // agent index carrying the enemy flag, -1 if none
  std::array<bool, 2> touched_;
};

}  // namespace

std::unique_ptr<Env> MakeGridCapture() { return std::make_unique<GridCapture>(); }

}  // namespace rlmesh
