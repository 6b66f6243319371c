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

#ifndef RLMESH_LEARN_LEARN_HPP_
#define RLMESH_LEARN_LEARN_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rlmesh/policy/policy.hpp"

namespace rlmesh {

struct Transition {
  std::vector<float> obs;
  std::vector<uint8_t> mask;
  int action = 0;
  float reward = 0.0f;
  std::vector<float> next_obs;
  bool done = false;
  float behavior_log_prob = 0.0f;
  float value_estimate = 0.0f;
  uint64_t param_version = 0;
  int agent_id = 0;
  std::string player_id;
};

// Ordered transitions for one agent within one episode segment. done=true may
// appear only on the last step; bootstrap_value closes non-terminal cuts.
struct Trajectory {
  std::vector<Transition> steps;
  float bootstrap_value = 0.0f;

  size_t size() const { return steps.size(); }
  bool terminal() const { return !steps.empty() && steps.back().done; }
};

// Throws on any violated Trajectory invariant.
void ValidateTrajectory(const Trajectory& traj);

// R_t = sum_k gamma^k r_{t+k} (+ gamma^{T-t} * bootstrap on non-terminal cut).
std::vector<double> NstepReturns(const Trajectory& traj, double gamma);

struct VtraceResult {
  std::vector<double> vs;             // value targets
  std::vector<double> pg_advantages;  // rho-weighted one-step advantages
};

// Truncated importance-weighted value targets and policy-gradient advantages:
//   rho_t = min(rho_bar, ratio_t), c_t = min(c_bar, ratio_t)
//   delta_t = rho_t (r_t + gamma V_{t+1} - V_t)
//   v_t = V_t + delta_t + gamma c_t (v_{t+1} - V_{t+1})
//   adv_t = rho_t (r_t + gamma v_{t+1} - V_t)
// with V beyond the segment equal to 0 (terminal) or bootstrap_value.
VtraceResult VtraceTargets(const Trajectory& traj,
                           std::span<const double> target_log_probs, double gamma,
                           double rho_bar, double c_bar);

// One sample of the actor-critic loss with the advantage already detached:
//   loss = -log pi(action) * advantage
//          + value_coef * (value_target - V)^2 - entropy_coef * H(pi)
struct LossSample {
  std::vector<float> obs;
  std::vector<uint8_t> mask;
  int action = 0;
  double advantage = 0.0;
  double value_target = 0.0;
  double behavior_log_prob = 0.0;  // used by the PPO objective only
};

// Summed gradient of the mean actor-critic loss over the samples.
GradientUpdate ActorCriticGradient(const PolicyParameters& params,
                                   std::span<const LossSample> samples,
                                   double value_coef, double entropy_coef,
                                   const std::string& producer_id);

// PPO with a lower bound of dual_clip_c * advantage on negative-advantage
// samples; value and entropy terms as in the actor-critic loss.
GradientUpdate PpoDualClipGradient(const PolicyParameters& params,
                                   std::span<const LossSample> samples,
                                   double clip_eps, double dual_clip_c,
                                   double value_coef, double entropy_coef,
                                   const std::string& producer_id);

// Expands trajectories into loss samples with n-step return targets and
// advantages R - V computed under `params` (detached).
std::vector<LossSample> BuildNstepSamples(const PolicyParameters& params,
                                          std::span<const Trajectory> batch,
                                          double gamma);

GradientUpdate A2cGradient(const PolicyParameters& params,
                           std::span<const Trajectory> batch, double gamma,
                           double value_coef, double entropy_coef,
                           const std::string& producer_id);

GradientUpdate PpoDualClipGradient(const PolicyParameters& params,
                                   std::span<const Trajectory> batch, double gamma,
                                   double clip_eps, double dual_clip_c,
                                   double value_coef, double entropy_coef,
                                   const std::string& producer_id);

// V-trace-corrected actor-critic gradient: target log-probs come from
// `params`, value targets and advantages from VtraceTargets.
GradientUpdate VtraceGradient(const PolicyParameters& params,
                              std::span<const Trajectory> batch, double gamma,
                              double rho_bar, double c_bar, double value_coef,
                              double entropy_coef, const std::string& producer_id);

struct QTable {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> q;  // row-major [state][action]

  double& At(int s, int a) { return q[static_cast<size_t>(s) * num_actions + a]; }
  double At(int s, int a) const { return q[static_cast<size_t>(s) * num_actions + a]; }
  double MaxAt(int s) const;
};

QTable MakeQTable(int num_states, int num_actions);

// Resolves a one-hot observation to its state index; anything that is not
// one-hot within 1e-6 is an UnknownState error.
int OneHotState(std::span<const float> obs, int num_states);

// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') * (1-done) - Q(s,a)).
QTable QUpdate(const QTable& table, std::span<const Transition> transitions,
               double alpha, double gamma);

inline constexpr double kPriorityFloor = 1e-3;

// |one-step TD error| + floor, with V from the table's greedy values.
double PriorityOf(const Transition& t, const QTable& table, double gamma);

// Mean |TD error| over the trajectory using the stored value estimates,
// plus floor.
double PriorityOf(const Trajectory& traj, double gamma);

}  // namespace rlmesh

#endif  // RLMESH_LEARN_LEARN_HPP_
