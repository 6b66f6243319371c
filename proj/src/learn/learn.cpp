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

#include "rlmesh/learn/learn.hpp"

#include <algorithm>
#include <cmath>

namespace rlmesh {

namespace {

// Entropy of a masked distribution and the per-logit gradients of the
// standard actor-critic loss terms, shared by every policy-gradient op.
double Entropy(const ActionDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// d(loss)/d(logit_k) for loss = -pg_coef * log pi(a) - entropy_coef * H.
// pg_coef is the (detached) coefficient multiplying log pi in the objective.
// Masked actions have p = 0 and cannot be the sampled action, so their
// gradient is exactly 0; the entropy term's p*log(p) limit at 0 is 0.
void PolicyLogitGrads(const ActionDistribution& dist, int action, double pg_coef,
                      double entropy_coef, std::span<double> g_logits) {
  double h = Entropy(dist);
  for (size_t k = 0; k < dist.probs.size(); ++k) {
    double p = dist.probs[k];
    double indicator = (static_cast<int>(k) == action) ? 1.0 : 0.0;
    double g = -pg_coef * (indicator - p);
    if (entropy_coef != 0.0 && p > 0.0) g += entropy_coef * p * (std::log(p) + h);
    g_logits[k] = g;
  }
}

GradientUpdate FinishUpdate(const PolicyParameters& params, std::vector<double> acc,
                            size_t sample_count, const std::string& producer_id) {
  GradientUpdate u;
  u.base_version = params.version;
  u.sample_count = static_cast<int64_t>(sample_count);
  u.producer_id = producer_id;
  u.grad.resize(acc.size());
  for (size_t i = 0; i < acc.size(); ++i) u.grad[i] = static_cast<float>(acc[i]);
  return u;
}

double BootstrapValue(const Trajectory& traj) {
  return traj.terminal() ? 0.0 : static_cast<double>(traj.bootstrap_value);
}

}  // namespace

void ValidateTrajectory(const Trajectory& traj) {
  if (traj.steps.empty()) Throw(ErrorCode::kEmptyTrajectory, "trajectory has no steps");
  const std::string& pid = traj.steps.front().player_id;
  for (size_t i = 0; i < traj.steps.size(); ++i) {
    const Transition& t = traj.steps[i];
    if (!std::isfinite(t.reward))
      Throw(ErrorCode::kShapeMismatch, "non-finite reward in trajectory");
    if (t.behavior_log_prob > 0.0f)
      Throw(ErrorCode::kShapeMismatch, "behavior log-prob must be <= 0");
    if (t.param_version == 0)
      Throw(ErrorCode::kShapeMismatch, "transition missing parameter version stamp");
    if (t.player_id != pid)
      Throw(ErrorCode::kShapeMismatch, "trajectory mixes players");
    if (t.done && i + 1 != traj.steps.size())
      Throw(ErrorCode::kShapeMismatch, "done before the trajectory tail");
  }
}

std::vector<double> NstepReturns(const Trajectory& traj, double gamma) {
  if (traj.steps.empty()) Throw(ErrorCode::kEmptyTrajectory, "trajectory has no steps");
  RLMESH_CHECK(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0, 1]");
  std::vector<double> returns(traj.steps.size());
  double acc = BootstrapValue(traj);
  for (size_t i = traj.steps.size(); i-- > 0;) {
    acc = static_cast<double>(traj.steps[i].reward) + gamma * acc;
    returns[i] = acc;
  }
  return returns;
}

VtraceResult VtraceTargets(const Trajectory& traj,
                           std::span<const double> target_log_probs, double gamma,
                           double rho_bar, double c_bar) {
  if (traj.steps.empty()) Throw(ErrorCode::kEmptyTrajectory, "trajectory has no steps");
  if (target_log_probs.size() != traj.steps.size())
    Throw(ErrorCode::kShapeMismatch, "target log-probs not aligned with trajectory");
  RLMESH_CHECK(rho_bar >= c_bar && c_bar > 0.0, "need rho_bar >= c_bar > 0");

  const size_t n = traj.steps.size();
  std::vector<double> rho(n), c(n), values(n + 1);
  for (size_t t = 0; t < n; ++t) {
    double ratio =
        std::exp(target_log_probs[t] - static_cast<double>(traj.steps[t].behavior_log_prob));
    if (!std::isfinite(ratio))
      Throw(ErrorCode::kNonFiniteRatio, "importance ratio is not finite");
    rho[t] = std::min(rho_bar, ratio);
    c[t] = std::min(c_bar, ratio);
    values[t] = static_cast<double>(traj.steps[t].value_estimate);
  }
  values[n] = BootstrapValue(traj);

  VtraceResult out;
  out.vs.resize(n);
  out.pg_advantages.resize(n);
  double next_correction = 0.0;  // v_{t+1} - V_{t+1}
  double next_vs = values[n];
  for (size_t t = n; t-- > 0;) {
    double r = static_cast<double>(traj.steps[t].reward);
    double delta = rho[t] * (r + gamma * values[t + 1] - values[t]);
    double correction = delta + gamma * c[t] * next_correction;
    out.vs[t] = values[t] + correction;
    out.pg_advantages[t] = rho[t] * (r + gamma * next_vs - values[t]);
    next_correction = correction;
    next_vs = out.vs[t];
  }
  return out;
}

GradientUpdate ActorCriticGradient(const PolicyParameters& params,
                                   std::span<const LossSample> samples,
                                   double value_coef, double entropy_coef,
                                   const std::string& producer_id) {
  if (samples.empty()) Throw(ErrorCode::kEmptyBatch, "no samples");
  std::vector<double> acc(params.values.size(), 0.0);
  std::vector<double> g_logits(static_cast<size_t>(params.arch.action_dim));
  for (const LossSample& s : samples) {
    ForwardCache cache = Forward(params, s.obs);
    ActionDistribution dist = MaskedSoftmax(cache.logits, s.mask);
    PolicyLogitGrads(dist, s.action, s.advantage, entropy_coef, g_logits);
    double g_value = -2.0 * value_coef * (s.value_target - cache.value);
    Backward(params, s.obs, cache, g_logits, g_value, acc);
  }
  return FinishUpdate(params, std::move(acc), samples.size(), producer_id);
}

GradientUpdate PpoDualClipGradient(const PolicyParameters& params,
                                   std::span<const LossSample> samples,
                                   double clip_eps, double dual_clip_c,
                                   double value_coef, double entropy_coef,
                                   const std::string& producer_id) {
  if (dual_clip_c <= 1.0)
    Throw(ErrorCode::kInvalidDualClip, "dual clip constant must exceed 1");
  if (samples.empty()) Throw(ErrorCode::kEmptyBatch, "no samples");
  std::vector<double> acc(params.values.size(), 0.0);
  std::vector<double> g_logits(static_cast<size_t>(params.arch.action_dim));
  for (const LossSample& s : samples) {
    ForwardCache cache = Forward(params, s.obs);
    ActionDistribution dist = MaskedSoftmax(cache.logits, s.mask);
    double log_pi = dist.log_probs[static_cast<size_t>(s.action)];
    double ratio = std::exp(log_pi - s.behavior_log_prob);
    if (!std::isfinite(ratio))
      Throw(ErrorCode::kNonFiniteRatio, "importance ratio is not finite");

    // d(objective)/d(log pi) for the clipped surrogate. The objective is
    //   adv >= 0:  min(r*adv, clip(r)*adv)
    //   adv <  0:  max(min(r*adv, clip(r)*adv), dual_clip_c*adv)
    // and d r / d log pi = r.
    double pg_coef = 0.0;
    if (s.advantage >= 0.0) {
      if (ratio <= 1.0 + clip_eps) pg_coef = s.advantage * ratio;
    } else {
      bool dual_binds = std::max(ratio, 1.0 - clip_eps) > dual_clip_c;
      if (!dual_binds && ratio >= 1.0 - clip_eps) pg_coef = s.advantage * ratio;
    }
    PolicyLogitGrads(dist, s.action, pg_coef, entropy_coef, g_logits);
    double g_value = -2.0 * value_coef * (s.value_target - cache.value);
    Backward(params, s.obs, cache, g_logits, g_value, acc);
  }
  return FinishUpdate(params, std::move(acc), samples.size(), producer_id);
}

std::vector<LossSample> BuildNstepSamples(const PolicyParameters& params,
                                          std::span<const Trajectory> batch,
                                          double gamma) {
  std::vector<LossSample> samples;
  for (const Trajectory& traj : batch) {
    ValidateTrajectory(traj);
    std::vector<double> returns = NstepReturns(traj, gamma);
    for (size_t t = 0; t < traj.steps.size(); ++t) {
      const Transition& tr = traj.steps[t];
      LossSample s;
      s.obs = tr.obs;
      s.mask = tr.mask;
      s.action = tr.action;
      s.value_target = returns[t];
      s.advantage = returns[t] - Forward(params, tr.obs).value;
      s.behavior_log_prob = static_cast<double>(tr.behavior_log_prob);
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

GradientUpdate A2cGradient(const PolicyParameters& params,
                           std::span<const Trajectory> batch, double gamma,
                           double value_coef, double entropy_coef,
                           const std::string& producer_id) {
  if (batch.empty()) Throw(ErrorCode::kEmptyBatch, "no trajectories");
  auto samples = BuildNstepSamples(params, batch, gamma);
  return ActorCriticGradient(params, samples, value_coef, entropy_coef, producer_id);
}

GradientUpdate PpoDualClipGradient(const PolicyParameters& params,
                                   std::span<const Trajectory> batch, double gamma,
                                   double clip_eps, double dual_clip_c,
                                   double value_coef, double entropy_coef,
                                   const std::string& producer_id) {
  if (dual_clip_c <= 1.0)
    Throw(ErrorCode::kInvalidDualClip, "dual clip constant must exceed 1");
  if (batch.empty()) Throw(ErrorCode::kEmptyBatch, "no trajectories");
  auto samples = BuildNstepSamples(params, batch, gamma);
  return PpoDualClipGradient(params, samples, clip_eps, dual_clip_c, value_coef,
                             entropy_coef, producer_id);
}

GradientUpdate VtraceGradient(const PolicyParameters& params,
                              std::span<const Trajectory> batch, double gamma,
                              double rho_bar, double c_bar, double value_coef,
                              double entropy_coef, const std::string& producer_id) {
  if (batch.empty()) Throw(ErrorCode::kEmptyBatch, "no trajectories");
  std::vector<LossSample> samples;
  for (const Trajectory& traj : batch) {
    ValidateTrajectory(traj);
    std::vector<double> target_lp(traj.steps.size());
    for (size_t t = 0; t < traj.steps.size(); ++t) {
      const Transition& tr = traj.steps[t];
      ForwardCache cache = Forward(params, tr.obs);
      ActionDistribution dist = MaskedSoftmax(cache.logits, tr.mask);
      target_lp[t] = dist.log_probs[static_cast<size_t>(tr.action)];
    }
    VtraceResult vt = VtraceTargets(traj, target_lp, gamma, rho_bar, c_bar);
    for (size_t t = 0; t < traj.steps.size(); ++t) {
      const Transition& tr = traj.steps[t];
      LossSample s;
      s.obs = tr.obs;
      s.mask = tr.mask;
      s.action = tr.action;
      s.advantage = vt.pg_advantages[t];
      s.value_target = vt.vs[t];
      s.behavior_log_prob = static_cast<double>(tr.behavior_log_prob);
      samples.push_back(std::move(s));
    }
  }
  return ActorCriticGradient(params, samples, value_coef, entropy_coef, producer_id);
}

double QTable::MaxAt(int s) const {
  double best = At(s, 0);
  for (int a = 1; a < num_actions; ++a) best = std::max(best, At(s, a));
  return best;
}

QTable MakeQTable(int num_states, int num_actions) {
  RLMESH_CHECK(num_states >= 1 && num_actions >= 1, "empty Q table");
  QTable t;
  t.num_states = num_states;
  t.num_actions = num_actions;
  t.q.assign(static_cast<size_t>(num_states) * num_actions, 0.0);
  return t;
}

int OneHotState(std::span<const float> obs, int num_states) {
  if (static_cast<int>(obs.size()) != num_states)
    Throw(ErrorCode::kUnknownState, "observation dim does not match state count");
  int hot = -1;
  for (size_t i = 0; i < obs.size(); ++i) {
    if (std::abs(obs[i] - 1.0f) < 1e-6f) {
      if (hot >= 0) Throw(ErrorCode::kUnknownState, "observation is not one-hot");
      hot = static_cast<int>(i);
    } else if (std::abs(obs[i]) > 1e-6f) {
      Throw(ErrorCode::kUnknownState, "observation is not one-hot");
    }
  }
  if (hot < 0) Throw(ErrorCode::kUnknownState, "observation is not one-hot");
  return hot;
}

QTable QUpdate(const QTable& table, std::span<const Transition> transitions,
               double alpha, double gamma) {
  QTable next = table;
  for (const Transition& t : transitions) {
    int s = OneHotState(t.obs, table.num_states);
    if (t.action < 0 || t.action >= table.num_actions)
      Throw(ErrorCode::kUnknownState, "action id outside Q table");
    double target = static_cast<double>(t.reward);
    if (!t.done) {
      int sn = OneHotState(t.next_obs, table.num_states);
      target += gamma * next.MaxAt(sn);
    }
    double& q = next.At(s, t.action);
    q += alpha * (target - q);
  }
  return next;
}

double PriorityOf(const Transition& t, const QTable& table, double gamma) {
  int s = OneHotState(t.obs, table.num_states);
  double target = static_cast<double>(t.reward);
  if (!t.done) target += gamma * table.MaxAt(OneHotState(t.next_obs, table.num_states));
  double td = target - table.At(s, t.action);
  return std::abs(td) + kPriorityFloor;
}

double PriorityOf(const Trajectory& traj, double gamma) {
  if (traj.steps.empty()) Throw(ErrorCode::kEmptyTrajectory, "trajectory has no steps");
  double total = 0.0;
  for (size_t t = 0; t < traj.steps.size(); ++t) {
    const Transition& tr = traj.steps[t];
    double next_v = tr.done ? 0.0
                  : (t + 1 < traj.steps.size()
                         ? static_cast<double>(traj.steps[t + 1].value_estimate)
                         : static_cast<double>(traj.bootstrap_value));
    double td = static_cast<double>(tr.reward) + gamma * next_v -
                static_cast<double>(tr.value_estimate);
    total += std::abs(td);
  }
  return total / static_cast<double>(traj.steps.size()) + kPriorityFloor;
}

}  // namespace rlmesh
