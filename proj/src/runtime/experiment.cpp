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

#include "rlmesh/runtime/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <memory>
#include <sstream>

#include "rlmesh/buffer/replay.hpp"
#include "rlmesh/coord/inference_batcher.hpp"
#include "rlmesh/env/env.hpp"
#include "rlmesh/league/league.hpp"
#include "rlmesh/runtime/sim_clock.hpp"

namespace rlmesh {

namespace {

bool IsTrajectoryKind(TopologyKind kind) {
  return kind == TopologyKind::kAsyncTrajectory ||
         kind == TopologyKind::kCentralInference ||
         kind == TopologyKind::kReplayQlearning;
}

QTable TableFromParams(const PolicyParameters& params) {
  QTable t = MakeQTable(params.arch.num_states(), params.arch.action_dim);
  for (int s = 0; s < t.num_states; ++s)
    for (int a = 0; a < t.num_actions; ++a)
      t.At(s, a) = params.values[static_cast<size_t>(s) * t.num_actions + a];
  return t;
}

void WriteTableToParams(const QTable& table, PolicyParameters& params) {
  for (int s = 0; s < table.num_states; ++s)
    for (int a = 0; a < table.num_actions; ++a)
      params.values[static_cast<size_t>(s) * table.num_actions + a] =
          static_cast<float>(table.At(s, a));
}

struct EpsGreedyResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

EpsGreedyResult EpsGreedy(const PolicyParameters& params, std::span<const float> obs,
                          std::span<const uint8_t> mask, double epsilon, Rng& rng) {
  ForwardCache cache = Forward(params, obs);
  std::vector<int> legal;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) legal.push_back(static_cast<int>(i));
  RLMESH_CHECK(!legal.empty(), "no legal action");
  int greedy = legal[0];
  for (int a : legal)
    if (cache.logits[static_cast<size_t>(a)] > cache.logits[static_cast<size_t>(greedy)])
      greedy = a;
  int action;
  if (rng.Uniform01() < epsilon) {
    action = legal[rng.UniformInt(legal.size())];
  } else {
    action = greedy;
  }
  double p = epsilon / static_cast<double>(legal.size()) +
             (action == greedy ? 1.0 - epsilon : 0.0);
  EpsGreedyResult r;
  r.action = action;
  r.log_prob = std::log(std::max(p, 1e-12));
  r.value = cache.logits[static_cast<size_t>(greedy)];
  return r;
}

// Priority of a trajectory against the current Q table: mean absolute
// one-step TD error plus the floor.
double TablePriority(const Trajectory& traj, const QTable& table, double gamma) {
  double total = 0.0;
  for (const Transition& t : traj.steps) {
    int s = OneHotState(t.obs, table.num_states);
    double target = static_cast<double>(t.reward);
    if (!t.done) target += gamma * table.MaxAt(OneHotState(t.next_obs, table.num_states));
    total += std::abs(target - table.At(s, t.action));
  }
  return total / static_cast<double>(traj.steps.size()) + kPriorityFloor;
}

struct AckData {
  ParamsRef params;
  uint8_t status = 0;  // 0 ok, 1 dropped, 2 throttled
};

// The whole simulated experiment: actors, per-player serial parent servers
// (coordinator + learner + inference batcher), league, metrics. Everything
// runs on one deterministic discrete-event clock.
class SimRun {
 public:
  explicit SimRun(const ExperimentConfig& config)
      : cfg_(config),
        env_spec_(SpecForEnv(config.env_id)),
        arch_(config.ResolveArch()),
        players_(config.TrainingPlayers()),
        delays_(config.seed),
        league_(config.league.pfsp_exponent),
        sink_(config.metrics_file) {}

  RunResult Run();

 private:
  struct Actor;

  using Ack = std::function<void(const AckData&)>;
  using InferAck = std::function<void(const InferenceBatcher::Reply&)>;

  struct ParentMsg {
    enum class Kind { kParamRequest, kTrajBatch, kGradMsg, kInferRequest, kFlushTick };
    Kind kind = Kind::kParamRequest;
    std::vector<Trajectory> trajectories;
    GradientUpdate update;
    int unit_index = 0;
    std::vector<float> obs;
    std::vector<uint8_t> mask;
    Ack ack;
    InferAck infer_ack;
  };

  // Serial message processor for one player: the learner-side endpoint. One
  // message is handled at a time; effects apply at delivery, the ack fires
  // after the handling cost elapses, mirroring the single-threaded socket
  // parent.
  struct Parent {
    std::string player_id;
    std::unique_ptr<Coordinator> coordinator;
    std::unique_ptr<InferenceBatcher> batcher;
    std::unique_ptr<PrioritizedBuffer> replay;
    std::unique_ptr<FifoBuffer> replay_fifo;
    Rng learner_rng{0};
    std::deque<ParentMsg> inbox;
    bool busy = false;
    // Barrier/quorum acks parked until their epoch applies.
    std::map<uint64_t, std::vector<Ack>> parked;
    std::vector<std::pair<InferAck, InferenceBatcher::Reply>> pending_replies;
  };

  struct Actor {
    std::string worker_id;
    std::string player_id;
    int index = 0;
    std::unique_ptr<Env> env;
    Rng action_rng{0};
    Rng opponent_rng{0};
    Rng opponent_action_rng{0};
    ParamsRef params;
    ParamsRef opponent_params;
    GenerationKey opponent_key;
    uint64_t episode_counter = 0;
    uint64_t frames = 0;
    std::vector<JointObservation> obs;
    std::vector<Trajectory> segments;       // one per own agent
    std::vector<double> episode_totals;     // reward totals per env player
    int segment_len = 0;
    uint64_t halt_after = kUnlimitedStaleness;
    bool halted = false;
  };

  // ---- wiring ----
  void SetUp();
  std::string LearnerId(const std::string& player) const;
  Parent& ParentOf(const std::string& player) { return *parents_.at(player); }
  uint64_t Cost(const std::string& worker, DelayOp op);

  // ---- parent side ----
  void Deliver(Parent& parent, ParentMsg msg);
  void Pump(Parent& parent);
  uint64_t Execute(Parent& parent, ParentMsg& msg, std::vector<std::function<void()>>& after);
  uint64_t LearnOnBatches(Parent& parent);
  uint64_t LearnReplay(Parent& parent);
  GradientUpdate ComputeGradient(const PolicyParameters& params,
                                 std::vector<Trajectory> batch,
                                 const std::string& producer);

  // ---- actor side ----
  void StartActor(Actor& a);
  void BeginEpisode(Actor& a);
  void ScheduleStep(Actor& a);
  void DoLocalStep(Actor& a);
  void RequestCentralAction(Actor& a);
  void DoCentralStep(Actor& a, const InferenceBatcher::Reply& reply);
  void ApplyEnvStep(Actor& a, const JointAction& actions,
                    const std::vector<std::vector<double>>& log_probs,
                    const std::vector<std::vector<double>>& values,
                    uint64_t version_of_step);
  void FinishSegments(Actor& a, bool terminal);
  void SubmitTrajectories(Actor& a,
                          std::shared_ptr<std::vector<Trajectory>> payload,
                          bool episode_ended);
  void SubmitGradientSegment(Actor& a, std::vector<Trajectory> trajs, bool episode_ended);
  void AfterSubmissionAck(Actor& a, const AckData& ack, bool episode_ended);
  void EndEpisodeBookkeeping(Actor& a);
  void SampleOpponentFor(Actor& a);
  std::vector<float> InputFor(const Actor& a, int player_slot, int agent) const;

  // ---- run management ----
  void CountFrame(Actor& a);
  void MaybeSnapshot();
  void EmitMetrics(uint64_t at);
  void Finalize(RunResult& result);

  ExperimentConfig cfg_;
  EnvSpec env_spec_;
  ArchSpec arch_;
  std::vector<std::string> players_;
  SimClock clock_;
  DelayModel delays_;
  ParameterStore store_;
  League league_;
  MetricsSink sink_;

  std::map<std::string, std::unique_ptr<Parent>> parents_;
  std::vector<std::unique_ptr<Actor>> actors_;

  uint64_t frames_total_ = 0;
  uint64_t episodes_ = 0;
  uint64_t trajectories_submitted_ = 0;
  uint64_t next_snapshot_at_ = 0;
  uint64_t snapshot_counter_ = 0;
  std::map<std::string, uint64_t> busy_ticks_;
  // deltas for metrics windows
  uint64_t last_frames_ = 0, last_trajs_ = 0, last_updates_ = 0, last_emit_ = 0;
  std::map<std::string, uint64_t> last_busy_;
};

std::string SimRun::LearnerId(const std::string& player) const {
  return players_.size() == 1 ? "learner" : player + "-learner";
}

uint64_t SimRun::Cost(const std::string& worker, DelayOp op) {
  uint64_t c = delays_.Cost(worker, op);
  busy_ticks_[worker] += c;
  return c;
}

void SimRun::SetUp() {
  // Players, stores, parents.
  for (size_t i = 0; i < players_.size(); ++i) {
    const std::string& p = players_[i];
    PolicyParameters init =
        InitParams(arch_, p, HashCombine(cfg_.seed, HashString("init/" + p)),
                   cfg_.policy_init_scale);
    store_.Publish(p, init);
    league_.RegisterPlayer(p, i == 0 ? PlayerRole::kMain : PlayerRole::kPeer, init);

    auto parent = std::make_unique<Parent>();
    parent->player_id = p;
    parent->coordinator =
        std::make_unique<Coordinator>(cfg_.topology, store_, p, cfg_.learn.lr);
    if (cfg_.topology.kind == TopologyKind::kCentralInference) {
      parent->batcher = std::make_unique<InferenceBatcher>(
          store_, p, cfg_.topology.inference_batch_max,
          HashCombine(cfg_.seed, HashString("batcher/" + p)));
    }
    if (cfg_.topology.kind == TopologyKind::kReplayQlearning) {
      if (cfg_.replay_prioritized)
        parent->replay = std::make_unique<PrioritizedBuffer>(cfg_.replay_capacity);
      else
        parent->replay_fifo = std::make_unique<FifoBuffer>(cfg_.replay_capacity);
    }
    parent->learner_rng = Rng(HashCombine(cfg_.seed, HashString("learner/" + p)));
    delays_.DeclareWorker(LearnerId(p));
    parents_[p] = std::move(parent);
  }
  league_.set_env_id(cfg_.env_id);

  // Actors.
  for (const std::string& p : players_) {
    for (int i = 0; i < cfg_.topology.actor_count; ++i) {
      auto a = std::make_unique<Actor>();
      a->worker_id = players_.size() == 1 ? "actor-" + std::to_string(i)
                                          : p + "-actor-" + std::to_string(i);
      a->player_id = p;
      a->index = i;
      a->env = MakeEnv(cfg_.env_id);
      uint64_t base = HashCombine(cfg_.seed, HashString("actor/" + a->worker_id));
      a->action_rng = Rng(HashCombine(base, 1));
      a->opponent_rng = Rng(HashCombine(base, 2));
      a->opponent_action_rng = Rng(HashCombine(base, 3));
      delays_.DeclareWorker(a->worker_id);
      if (auto it = cfg_.halt_after_frames.find(a->worker_id);
          it != cfg_.halt_after_frames.end())
        a->halt_after = it->second;
      actors_.push_back(std::move(a));
    }
  }

  // Delay injection table; unknown worker ids are an error.
  for (const auto& [worker, table] : cfg_.delays) {
    for (const auto& [op, dist] : table) delays_.Inject(worker, op, dist);
  }

  next_snapshot_at_ =
      cfg_.league.snapshot_every > 0 ? cfg_.league.snapshot_every : 0;
}

// ---------------------------------------------------------------- parent --

void SimRun::Deliver(Parent& parent, ParentMsg msg) {
  parent.inbox.push_back(std::move(msg));
  Pump(parent);
}

void SimRun::Pump(Parent& parent) {
  if (parent.busy || parent.inbox.empty()) return;
  parent.busy = true;
  ParentMsg msg = std::move(parent.inbox.front());
  parent.inbox.pop_front();
  std::vector<std::function<void()>> after;
  uint64_t cost = Execute(parent, msg, after);
  clock_.ScheduleAfter(cost, [this, &parent, after = std::move(after)] {
    for (const auto& fn : after) fn();
    parent.busy = false;
    Pump(parent);
  });
}

uint64_t SimRun::Execute(Parent& parent, ParentMsg& msg,
                         std::vector<std::function<void()>>& after) {
  const std::string& player = parent.player_id;
  uint64_t cost = 0;
  switch (msg.kind) {
    case ParentMsg::Kind::kParamRequest: {
      AckData ack{store_.FetchLatest(player), 0};
      after.push_back([cb = msg.ack, ack] { cb(ack); });
      break;
    }
    case ParentMsg::Kind::kTrajBatch: {
      uint8_t status = 0;
      // All-or-nothing admission so a retried message never duplicates the
      // trajectories that fit before the queue filled.
      if (parent.coordinator->QueueDepth() + msg.trajectories.size() >
          cfg_.topology.queue_capacity) {
        status = 2;  // backpressure: actor retries after a backoff
      } else {
        for (Trajectory& t : msg.trajectories) {
          auto result = parent.coordinator->SubmitTrajectory(std::move(t));
          if (result.status == SubmitResult::Status::kQueued) ++trajectories_submitted_;
          if (result.dropped()) status = 1;
        }
        cost += LearnOnBatches(parent);
      }
      AckData ack{store_.FetchLatest(player), status};
      after.push_back([cb = msg.ack, ack] { cb(ack); });
      break;
    }
    case ParentMsg::Kind::kGradMsg: {
      SubmitResult result =
          cfg_.topology.kind == TopologyKind::kBundledAllreduce
              ? parent.coordinator->SubmitUnitGradient(msg.update, msg.unit_index)
              : parent.coordinator->SubmitGradient(msg.update);
      if (result.status == SubmitResult::Status::kHeld) {
        parent.parked[msg.update.base_version].push_back(msg.ack);
        break;  // ack deferred until the epoch applies
      }
      if (result.applied()) {
        cost += Cost(LearnerId(player), DelayOp::kLearn);
        AckData ack{store_.FetchLatest(player), 0};
        auto parked = parent.parked.find(msg.update.base_version);
        if (parked != parent.parked.end()) {
          for (const Ack& cb : parked->second)
            after.push_back([cb, ack] { cb(ack); });
          parent.parked.erase(parked);
        }
        after.push_back([cb = msg.ack, ack] { cb(ack); });
      } else {  // dropped (stale / late / preempted)
        AckData ack{store_.FetchLatest(player), 1};
        after.push_back([cb = msg.ack, ack] { cb(ack); });
      }
      break;
    }
    case ParentMsg::Kind::kInferRequest: {
      bool was_empty = parent.batcher->PendingCount() == 0;
      bool full = parent.batcher->SubmitRequest(
          std::move(msg.obs), std::move(msg.mask),
          [&parent, cb = msg.infer_ack](const InferenceBatcher::Reply& r) {
            parent.pending_replies.emplace_back(cb, r);
          });
      if (full) {
        cost += Cost(LearnerId(player), DelayOp::kInference);
        parent.batcher->Flush();
        for (auto& [cb, reply] : parent.pending_replies)
          after.push_back([cb, reply] { cb(reply); });
        parent.pending_replies.clear();
      } else if (was_empty) {
        // First request of a fresh batch arms the timeout flush.
        clock_.ScheduleAfter(cfg_.topology.inference_timeout, [this, &parent] {
          ParentMsg tick;
          tick.kind = ParentMsg::Kind::kFlushTick;
          Deliver(parent, std::move(tick));
        });
      }
      break;
    }
    case ParentMsg::Kind::kFlushTick: {
      if (parent.batcher && parent.batcher->PendingCount() > 0) {
        cost += Cost(LearnerId(player), DelayOp::kInference);
        parent.batcher->Flush();
        for (auto& [cb, reply] : parent.pending_replies)
          after.push_back([cb, reply] { cb(reply); });
        parent.pending_replies.clear();
      }
      break;
    }
  }
  return cost;
}

GradientUpdate SimRun::ComputeGradient(const PolicyParameters& params,
                                       std::vector<Trajectory> batch,
                                       const std::string& producer) {
  return ComputeAlgorithmGradient(cfg_.learn, params, batch, producer);
}

uint64_t SimRun::LearnOnBatches(Parent& parent) {
  uint64_t cost = 0;
  while (auto batch = parent.coordinator->TryPopBatch()) {
    cost += Cost(LearnerId(parent.player_id), DelayOp::kLearn);
    if (cfg_.topology.kind == TopologyKind::kReplayQlearning) {
      // Push the freshly consumed trajectories into replay, then learn from
      // a prioritized sample.
      ParamsRef params = store_.FetchLatest(parent.player_id);
      QTable table = TableFromParams(*params);
      for (Trajectory& t : *batch) {
        double priority = TablePriority(t, table, cfg_.learn.gamma);
        if (parent.replay)
          parent.replay->Push(std::move(t), priority);
        else
          parent.replay_fifo->Push(std::move(t));
      }
      cost += LearnReplay(parent);
      continue;
    }
    ParamsRef params = store_.FetchLatest(parent.player_id);
    auto grouped = BuildTrainingBatches(cfg_.cooperation, *batch);
    std::vector<Trajectory> flat;
    for (auto& g : grouped)
      for (auto& t : g.trajectories) flat.push_back(std::move(t));
    GradientUpdate update = ComputeGradient(*params, std::move(flat), "learner");
    parent.coordinator->ApplyLearnerUpdate(update);
  }
  return cost;
}

uint64_t SimRun::LearnReplay(Parent& parent) {
  size_t have = parent.replay ? parent.replay->size() : parent.replay_fifo->size();
  if (have < cfg_.topology.batch_size) return 0;
  ParamsRef params = store_.FetchLatest(parent.player_id);
  QTable table = TableFromParams(*params);

  std::vector<std::pair<uint64_t, TrajectoryRef>> sampled;
  if (parent.replay)
    sampled = parent.replay->Sample(cfg_.topology.batch_size, parent.learner_rng);
  else
    sampled = parent.replay_fifo->Sample(
        std::min(cfg_.topology.batch_size, parent.replay_fifo->size()),
        parent.learner_rng);

  std::vector<Transition> transitions;
  for (const auto& [id, traj] : sampled)
    transitions.insert(transitions.end(), traj->steps.begin(), traj->steps.end());
  QTable next = QUpdate(table, transitions, cfg_.learn.alpha, cfg_.learn.gamma);

  PolicyParameters next_params = *params;
  next_params.version = params->version + 1;
  WriteTableToParams(next, next_params);
  parent.coordinator->PublishParams(std::move(next_params));

  if (parent.replay) {
    std::vector<uint64_t> ids;
    std::vector<double> priorities;
    for (const auto& [id, traj] : sampled) {
      ids.push_back(id);
      priorities.push_back(TablePriority(*traj, next, cfg_.learn.gamma));
    }
    // Multiple draws of one id are fine: the last write wins.
    parent.replay->UpdatePriorities(ids, priorities);
  }
  return 0;
}

// ----------------------------------------------------------------- actor --

std::vector<float> SimRun::InputFor(const Actor& a, int player_slot, int agent) const {
  const JointObservation& jo = a.obs[static_cast<size_t>(player_slot)];
  return PolicyInput(jo.per_agent_obs[static_cast<size_t>(agent)], agent,
                     env_spec_.agents_per_player, arch_);
}

void SimRun::StartActor(Actor& a) {
  if (cfg_.frames == 0) {
    a.halted = true;
    return;
  }
  if (cfg_.topology.kind == TopologyKind::kCentralInference) {
    // Central-inference actors never hold parameters.
    BeginEpisode(a);
    ScheduleStep(a);
    return;
  }
  uint64_t cost = Cost(a.worker_id, DelayOp::kFetch);
  clock_.ScheduleAfter(cost, [this, &a] {
    ParentMsg msg;
    msg.kind = ParentMsg::Kind::kParamRequest;
    msg.ack = [this, &a](const AckData& ack) {
      a.params = ack.params;
      BeginEpisode(a);
      ScheduleStep(a);
    };
    Deliver(ParentOf(a.player_id), std::move(msg));
  });
}

void SimRun::SampleOpponentFor(Actor& a) {
  if (env_spec_.players < 2) return;
  OpponentStrategy strategy = ParseOpponentStrategy(cfg_.league.strategy);
  GenerationKey pick;
  try {
    pick = league_.SampleOpponent(a.player_id, strategy, a.opponent_rng);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyPool) throw;
    // Nothing frozen yet: mirror the other trainer's live policy, or our own
    // for single-trainer self-play.
    std::string other = a.player_id;
    for (const std::string& p : players_)
      if (p != a.player_id) other = p;
    pick = {other, 0};
  }
  a.opponent_key = pick;
  if (pick.generation == 0) {
    a.opponent_params = store_.HasPlayer(pick.player_id)
                            ? store_.FetchLatest(pick.player_id)
                            : std::make_shared<const PolicyParameters>(
                                  league_.LiveParams(pick.player_id));
  } else {
    a.opponent_params = std::make_shared<const PolicyParameters>(
        league_.GenerationParams(pick));
  }
}

void SimRun::BeginEpisode(Actor& a) {
  a.obs = a.env->Reset(HashCombine(
      HashCombine(cfg_.seed, HashString("episode/" + a.worker_id)), a.episode_counter));
  ++a.episode_counter;
  a.segments.assign(static_cast<size_t>(env_spec_.agents_per_player), Trajectory{});
  a.episode_totals.assign(static_cast<size_t>(env_spec_.players), 0.0);
  a.segment_len = 0;
  SampleOpponentFor(a);
}

void SimRun::ScheduleStep(Actor& a) {
  if (a.halted) return;
  if (a.frames >= a.halt_after) {
    a.halted = true;
    return;
  }
  // The frame budget is checked at segment boundaries only, so every
  // submitted segment is complete (the socket workers behave the same way).
  if (a.segment_len == 0 && frames_total_ >= cfg_.frames) {
    a.halted = true;
    return;
  }
  if (cfg_.topology.kind == TopologyKind::kCentralInference) {
    uint64_t cost = Cost(a.worker_id, DelayOp::kSubmit);
    clock_.ScheduleAfter(cost, [this, &a] { RequestCentralAction(a); });
    return;
  }
  uint64_t cost =
      Cost(a.worker_id, DelayOp::kEnvStep) + Cost(a.worker_id, DelayOp::kInference);
  clock_.ScheduleAfter(cost, [this, &a] { DoLocalStep(a); });
}

void SimRun::DoLocalStep(Actor& a) {
  JointAction actions(static_cast<size_t>(env_spec_.players));
  std::vector<std::vector<double>> log_probs(actions.size());
  std::vector<std::vector<double>> values(actions.size());

  int own_slot = 0;
  if (players_.size() == 2) own_slot = a.player_id == players_[0] ? 0 : 1;
  for (int p = 0; p < env_spec_.players; ++p) {
    bool own = p == own_slot;
    const PolicyParameters& params = own ? *a.params : *a.opponent_params;
    Rng& rng = own ? a.action_rng : a.opponent_action_rng;
    for (int agent = 0; agent < env_spec_.agents_per_player; ++agent) {
      auto input = InputFor(a, p, agent);
      const auto& mask = a.obs[static_cast<size_t>(p)].action_mask[static_cast<size_t>(agent)];
      if (cfg_.topology.kind == TopologyKind::kReplayQlearning) {
        auto r = EpsGreedy(params, input, mask, cfg_.learn.epsilon_greedy, rng);
        actions[static_cast<size_t>(p)].push_back(r.action);
        log_probs[static_cast<size_t>(p)].push_back(r.log_prob);
        values[static_cast<size_t>(p)].push_back(r.value);
      } else {
        auto r = Infer(params, input, mask, rng);
        actions[static_cast<size_t>(p)].push_back(r.action);
        log_probs[static_cast<size_t>(p)].push_back(r.log_prob);
        values[static_cast<size_t>(p)].push_back(r.value);
      }
    }
  }
  ApplyEnvStep(a, actions, log_probs, values, a.params->version);
}

void SimRun::RequestCentralAction(Actor& a) {
  // Central inference runs on single-player single-agent environments; the
  // actor never holds parameters.
  auto input = a.obs[0].per_agent_obs[0];
  auto mask = a.obs[0].action_mask[0];
  ParentMsg msg;
  msg.kind = ParentMsg::Kind::kInferRequest;
  msg.obs = std::move(input);
  msg.mask = std::move(mask);
  msg.infer_ack = [this, &a](const InferenceBatcher::Reply& reply) {
    uint64_t cost = Cost(a.worker_id, DelayOp::kEnvStep);
    clock_.ScheduleAfter(cost, [this, &a, reply] { DoCentralStep(a, reply); });
  };
  Deliver(ParentOf(a.player_id), std::move(msg));
}

void SimRun::DoCentralStep(Actor& a, const InferenceBatcher::Reply& reply) {
  JointAction actions = {{reply.action}};
  std::vector<std::vector<double>> log_probs = {{reply.log_prob}};
  std::vector<std::vector<double>> values = {{reply.value}};
  ApplyEnvStep(a, actions, log_probs, values, reply.params_version);
}

void SimRun::ApplyEnvStep(Actor& a, const JointAction& actions,
                          const std::vector<std::vector<double>>& log_probs,
                          const std::vector<std::vector<double>>& values,
                          uint64_t version_of_step) {
  int own_slot = 0;
  if (players_.size() == 2) own_slot = a.player_id == players_[0] ? 0 : 1;
  StepResult r = a.env->Step(actions);

  // Joint cooperation trains against the team reward; per-agent rewards are
  // replaced by their sum at collection time.
  std::vector<float> own_rewards = r.rewards[static_cast<size_t>(own_slot)];
  if (cfg_.cooperation.mode == CooperationMode::Mode::kJoint) {
    float team = 0.0f;
    for (float x : own_rewards) team += x;
    std::fill(own_rewards.begin(), own_rewards.end(), team);
  }

  for (int agent = 0; agent < env_spec_.agents_per_player; ++agent) {
    Transition t;
    t.obs = InputFor(a, own_slot, agent);
    t.mask = a.obs[static_cast<size_t>(own_slot)].action_mask[static_cast<size_t>(agent)];
    t.action = actions[static_cast<size_t>(own_slot)][static_cast<size_t>(agent)];
    t.reward = own_rewards[static_cast<size_t>(agent)];
    t.done = r.done;
    t.behavior_log_prob =
        static_cast<float>(log_probs[static_cast<size_t>(own_slot)][static_cast<size_t>(agent)]);
    t.value_estimate =
        static_cast<float>(values[static_cast<size_t>(own_slot)][static_cast<size_t>(agent)]);
    t.param_version = version_of_step;
    t.agent_id = agent;
    t.player_id = a.player_id;
    t.next_obs = PolicyInput(
        r.observation[static_cast<size_t>(own_slot)].per_agent_obs[static_cast<size_t>(agent)],
        agent, env_spec_.agents_per_player, arch_);
    a.segments[static_cast<size_t>(agent)].steps.push_back(std::move(t));
    CountFrame(a);
  }
  for (int p = 0; p < env_spec_.players; ++p)
    for (float x : r.rewards[static_cast<size_t>(p)])
      a.episode_totals[static_cast<size_t>(p)] += x;

  // Next observations for the bootstrap and the following step.
  auto next_obs = r.observation;
  std::swap(a.obs, next_obs);
  ++a.segment_len;

  if (r.done || a.segment_len >= cfg_.unroll) {
    FinishSegments(a, r.done);
  } else {
    ScheduleStep(a);
  }
}

void SimRun::FinishSegments(Actor& a, bool terminal) {
  std::vector<Trajectory> out;
  int own_slot = 0;
  if (players_.size() == 2) own_slot = a.player_id == players_[0] ? 0 : 1;
  for (int agent = 0; agent < env_spec_.agents_per_player; ++agent) {
    Trajectory& t = a.segments[static_cast<size_t>(agent)];
    if (t.steps.empty()) continue;
    if (!terminal) {
      // Bootstrap from the next observation under the actor's snapshot (or
      // the learner's, for central inference).
      ParamsRef params = a.params ? a.params : store_.FetchLatest(a.player_id);
      auto input = InputFor(a, own_slot, agent);
      t.bootstrap_value = static_cast<float>(Forward(*params, input).value);
    } else {
      t.bootstrap_value = 0.0f;
    }
    out.push_back(std::move(t));
    a.segments[static_cast<size_t>(agent)] = Trajectory{};
  }
  a.segment_len = 0;
  bool episode_ended = terminal;
  if (IsTrajectoryKind(cfg_.topology.kind)) {
    SubmitTrajectories(a, std::make_shared<std::vector<Trajectory>>(std::move(out)),
                       episode_ended);
  } else {
    SubmitGradientSegment(a, std::move(out), episode_ended);
  }
}

void SimRun::SubmitTrajectories(Actor& a,
                                std::shared_ptr<std::vector<Trajectory>> payload,
                                bool episode_ended) {
  constexpr uint64_t kRetryBackoff = 4;
  uint64_t cost = Cost(a.worker_id, DelayOp::kSubmit);
  clock_.ScheduleAfter(cost, [this, &a, payload, episode_ended] {
    ParentMsg msg;
    msg.kind = ParentMsg::Kind::kTrajBatch;
    msg.trajectories = *payload;  // keep the payload for a possible retry
    msg.ack = [this, &a, payload, episode_ended](const AckData& ack) {
      if (ack.status == 2) {
        clock_.ScheduleAfter(kRetryBackoff, [this, &a, payload, episode_ended] {
          SubmitTrajectories(a, payload, episode_ended);
        });
        return;
      }
      AfterSubmissionAck(a, ack, episode_ended);
    };
    Deliver(ParentOf(a.player_id), std::move(msg));
  });
}

void SimRun::SubmitGradientSegment(Actor& a, std::vector<Trajectory> trajs,
                                   bool episode_ended) {
  // Bundled units and gradient actors compute the gradient locally.
  uint64_t grad_cost = Cost(a.worker_id, DelayOp::kLearn);
  uint64_t submit_cost = Cost(a.worker_id, DelayOp::kSubmit);
  ParamsRef params = a.params;
  auto grouped = BuildTrainingBatches(cfg_.cooperation, trajs);
  std::vector<Trajectory> flat;
  for (auto& g : grouped)
    for (auto& t : g.trajectories) flat.push_back(std::move(t));
  GradientUpdate update = ComputeGradient(*params, std::move(flat), a.worker_id);

  clock_.ScheduleAfter(grad_cost + submit_cost, [this, &a, update = std::move(update),
                                                 episode_ended]() mutable {
    ParentMsg msg;
    msg.kind = ParentMsg::Kind::kGradMsg;
    msg.update = std::move(update);
    msg.unit_index = a.index;
    msg.ack = [this, &a, episode_ended](const AckData& ack) {
      AfterSubmissionAck(a, ack, episode_ended);
    };
    Deliver(ParentOf(a.player_id), std::move(msg));
  });
}

void SimRun::AfterSubmissionAck(Actor& a, const AckData& ack, bool episode_ended) {
  if (cfg_.topology.kind != TopologyKind::kCentralInference) a.params = ack.params;
  if (episode_ended) EndEpisodeBookkeeping(a);
  ScheduleStep(a);
}

void SimRun::EndEpisodeBookkeeping(Actor& a) {
  ++episodes_;
  if (env_spec_.players == 2) {
    int own_slot = 0;
    if (players_.size() == 2) own_slot = a.player_id == players_[0] ? 0 : 1;
    double own = a.episode_totals[static_cast<size_t>(own_slot)];
    double other = a.episode_totals[static_cast<size_t>(1 - own_slot)];
    Outcome o = std::abs(own - other) < 1e-12 ? Outcome::kDraw
                : own > other                 ? Outcome::kAWin
                                              : Outcome::kBWin;
    league_.RecordMatch({{a.player_id, 0}, a.opponent_key, o, 1});
  }
  BeginEpisode(a);
}

// -------------------------------------------------------------- managing --

void SimRun::CountFrame(Actor& a) {
  ++frames_total_;
  ++a.frames;
  if (next_snapshot_at_ > 0 && frames_total_ >= next_snapshot_at_) MaybeSnapshot();
}

void SimRun::MaybeSnapshot() {
  ++snapshot_counter_;
  next_snapshot_at_ += cfg_.league.snapshot_every;
  for (const std::string& p : players_) {
    league_.SetLiveParams(p, *store_.FetchLatest(p));
    league_.SnapshotGeneration(p);
  }
  if (cfg_.league.eval_games > 0) {
    league_.EvaluationRound(EvalPairing::kAllPairs, cfg_.league.eval_games,
                            cfg_.env_id, HashCombine(cfg_.seed, snapshot_counter_));
  }
}

void SimRun::EmitMetrics(uint64_t at) {
  MetricsRecord rec;
  rec.timestamp = at;
  double window = static_cast<double>(at - last_emit_);
  if (window <= 0.0) window = 1.0;
  rec.frames_per_ktick = 1000.0 * static_cast<double>(frames_total_ - last_frames_) / window;
  rec.trajectories_per_ktick =
      1000.0 * static_cast<double>(trajectories_submitted_ - last_trajs_) / window;
  uint64_t updates = 0;
  uint64_t max_lag = 0;
  double lag_sum = 0.0;
  size_t lag_count = 0;
  for (const auto& [p, parent] : parents_) {
    updates += parent->coordinator->updates_applied();
    rec.queue_depths[p] = parent->coordinator->QueueDepth();
    auto stats = parent->coordinator->LagStats();
    max_lag = std::max(max_lag, parent->coordinator->MaxObservedLag());
    lag_sum += stats.mean * static_cast<double>(stats.count);
    lag_count += stats.count;
  }
  rec.updates_per_ktick = 1000.0 * static_cast<double>(updates - last_updates_) / window;
  rec.mean_lag = lag_count > 0 ? lag_sum / static_cast<double>(lag_count) : 0.0;
  rec.max_lag = max_lag;
  for (const auto& [worker, busy] : busy_ticks_) {
    rec.busy_fraction[worker] =
        static_cast<double>(busy - last_busy_[worker]) / window;
    last_busy_[worker] = busy;
  }
  last_frames_ = frames_total_;
  last_trajs_ = trajectories_submitted_;
  last_updates_ = updates;
  last_emit_ = at;
  sink_.Emit(rec);
}

void SimRun::Finalize(RunResult& result) {
  result.frames_produced = frames_total_;
  result.trajectories_submitted = trajectories_submitted_;
  result.episodes_completed = episodes_;
  result.sim_ticks = clock_.now();
  for (const std::string& p : players_) {
    ParamsRef params = store_.FetchLatest(p);
    result.final_versions[p] = params->version;
    result.final_checksums[p] = ParamsChecksum(*params);
    result.final_params[p] = *params;
    league_.SetLiveParams(p, *params);
  }
  uint64_t updates = 0;
  for (const auto& [p, parent] : parents_) {
    updates += parent->coordinator->updates_applied();
    auto acct = parent->coordinator->Accounting();
    result.accounting.produced += acct.produced;
    result.accounting.consumed += acct.consumed;
    result.accounting.queued += acct.queued;
    result.accounting.dropped += acct.dropped;
    result.max_lag = std::max(result.max_lag, parent->coordinator->MaxObservedLag());
    auto stats = parent->coordinator->LagStats();
    if (stats.count > 0) {
      if (result.lag.count == 0) {
        result.lag = stats;
      } else {
        double total = result.lag.mean * static_cast<double>(result.lag.count) +
                       stats.mean * static_cast<double>(stats.count);
        result.lag.count += stats.count;
        result.lag.mean = total / static_cast<double>(result.lag.count);
        result.lag.min = std::min(result.lag.min, stats.min);
        result.lag.max = std::max(result.lag.max, stats.max);
        for (const auto& [d, n] : stats.histogram) result.lag.histogram[d] += n;
      }
    }
  }
  result.updates_applied = updates;
  result.metrics = sink_.records();

  if (frames_total_ < cfg_.frames) {
    size_t parked = 0;
    for (const auto& [p, parent] : parents_) parked += parent->parked.size();
    bool any_halted_cfg = !cfg_.halt_after_frames.empty();
    if (parked > 0 || any_halted_cfg) {
      result.deadlock = parked > 0;
      std::ostringstream diag;
      diag << "run stalled at " << frames_total_ << "/" << cfg_.frames << " frames";
      if (parked > 0)
        diag << "; a synchronization epoch is waiting on gradients that will "
                "never arrive (halted or silent workers)";
      result.diagnostic = diag.str();
    }
  }

  if (!cfg_.league.file.empty()) {
    std::filesystem::path file(cfg_.league.file);
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    league_.Save(file);
    result.league_file = file;
  }

  std::ostringstream summary;
  summary << "# frames=" << result.frames_produced
          << " updates=" << result.updates_applied
          << " episodes=" << result.episodes_completed
          << " ticks=" << result.sim_ticks << " max_lag=" << result.max_lag << "\n";
  sink_.WriteSummary(summary.str());
}

RunResult SimRun::Run() {
  SetUp();
  for (auto& a : actors_) StartActor(*a);

  uint64_t next_metrics_at = cfg_.metrics_cadence;
  while (clock_.RunOne()) {
    while (clock_.now() >= next_metrics_at) {
      EmitMetrics(next_metrics_at);
      next_metrics_at += cfg_.metrics_cadence;
    }
  }
  if (clock_.now() > 0 && last_emit_ < clock_.now()) EmitMetrics(clock_.now());

  RunResult result;
  Finalize(result);
  return result;
}

}  // namespace

GradientUpdate ComputeAlgorithmGradient(const LearnParams& learn,
                                        const PolicyParameters& params,
                                        std::span<const Trajectory> batch,
                                        const std::string& producer) {
  if (learn.algorithm == "a2c")
    return A2cGradient(params, batch, learn.gamma, learn.value_coef,
                       learn.entropy_coef, producer);
  if (learn.algorithm == "ppo_dualclip")
    return PpoDualClipGradient(params, batch, learn.gamma, learn.clip_eps,
                               learn.dual_clip_c, learn.value_coef,
                               learn.entropy_coef, producer);
  if (learn.algorithm == "vtrace_ac")
    return VtraceGradient(params, batch, learn.gamma, learn.rho_bar, learn.c_bar,
                          learn.value_coef, learn.entropy_coef, producer);
  Throw(ErrorCode::kConfigInvalid, "no gradient for algorithm " + learn.algorithm);
}

std::string RenderConfig(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "seed = " << cfg.seed << "\n";
  os << "transport = " << cfg.transport << "\n";
  os << "run.frames = " << cfg.frames << "\n";
  os << "run.unroll = " << cfg.unroll << "\n";
  os << "run.max_wall_ms = " << cfg.max_wall_ms << "\n";
  os << "env.id = " << cfg.env_id << "\n";
  os << "topology.kind = " << TopologyKindName(cfg.topology.kind) << "\n";
  os << "topology.actor_count = " << cfg.topology.actor_count << "\n";
  os << "topology.learner_count = " << cfg.topology.learner_count << "\n";
  if (cfg.topology.kind == TopologyKind::kSyncQuorum)
    os << "topology.quorum_fraction = " << cfg.topology.quorum_fraction << "\n";
  if (cfg.topology.kind == TopologyKind::kBundledAllreduce)
    os << "topology.drop_fraction = " << cfg.topology.drop_fraction << "\n";
  if (cfg.topology.max_staleness == kUnlimitedStaleness)
    os << "topology.max_staleness = unlimited\n";
  else
    os << "topology.max_staleness = " << cfg.topology.max_staleness << "\n";
  os << "topology.batch_size = " << cfg.topology.batch_size << "\n";
  os << "topology.queue_capacity = " << cfg.topology.queue_capacity << "\n";
  os << "topology.inference_batch_max = " << cfg.topology.inference_batch_max << "\n";
  os << "topology.inference_timeout = " << cfg.topology.inference_timeout << "\n";
  os << "learn.algorithm = " << cfg.learn.algorithm << "\n";
  os << "learn.gamma = " << cfg.learn.gamma << "\n";
  os << "learn.lr = " << cfg.learn.lr << "\n";
  os << "learn.clip_eps = " << cfg.learn.clip_eps << "\n";
  os << "learn.dual_clip_c = " << cfg.learn.dual_clip_c << "\n";
  os << "learn.rho_bar = " << cfg.learn.rho_bar << "\n";
  os << "learn.c_bar = " << cfg.learn.c_bar << "\n";
  os << "learn.entropy_coef = " << cfg.learn.entropy_coef << "\n";
  os << "learn.value_coef = " << cfg.learn.value_coef << "\n";
  os << "learn.alpha = " << cfg.learn.alpha << "\n";
  os << "learn.epsilon_greedy = " << cfg.learn.epsilon_greedy << "\n";
  os << "policy.arch = " << cfg.policy_arch << "\n";
  os << "policy.hidden = " << cfg.policy_hidden << "\n";
  os << "policy.init_scale = " << cfg.policy_init_scale << "\n";
  os << "league.strategy = " << cfg.league.strategy << "\n";
  os << "league.snapshot_every = " << cfg.league.snapshot_every << "\n";
  os << "league.eval_games = " << cfg.league.eval_games << "\n";
  if (!cfg.league.file.empty()) os << "league.file = " << cfg.league.file << "\n";
  os << "league.pfsp_exponent = " << cfg.league.pfsp_exponent << "\n";
  if (!cfg.league.players.empty()) {
    os << "league.players = ";
    for (size_t i = 0; i < cfg.league.players.size(); ++i)
      os << (i ? "," : "") << cfg.league.players[i];
    os << "\n";
  }
  os << "cooperation.mode = "
     << (cfg.cooperation.mode == CooperationMode::Mode::kJoint ? "joint"
                                                               : "independent")
     << "\n";
  os << "cooperation.shared_policy = " << (cfg.cooperation.shared_policy ? "true" : "false")
     << "\n";
  os << "cooperation.agent_id_feature = "
     << (cfg.cooperation.agent_id_feature ? "true" : "false") << "\n";
  if (!cfg.metrics_file.empty()) os << "metrics.file = " << cfg.metrics_file << "\n";
  os << "metrics.cadence = " << cfg.metrics_cadence << "\n";
  os << "replay.capacity = " << cfg.replay_capacity << "\n";
  os << "replay.prioritized = " << (cfg.replay_prioritized ? "true" : "false") << "\n";
  os << "sockets.port = " << cfg.sockets_port << "\n";
  for (const auto& [worker, table] : cfg.delays) {
    for (const auto& [op, dist] : table) {
      os << "delay." << worker << "." << DelayOpName(op) << " = ";
      switch (dist.kind) {
        case DelayDistribution::Kind::kConstant: os << "const:" << dist.a; break;
        case DelayDistribution::Kind::kUniform:
          os << "uniform:" << dist.a << ":" << dist.b;
          break;
        case DelayDistribution::Kind::kExponential: os << "exp:" << dist.a; break;
      }
      os << "\n";
    }
  }
  for (const auto& [worker, frames] : cfg.crash_after_frames)
    os << "worker." << worker << ".crash_after_frames = " << frames << "\n";
  for (const auto& [worker, frames] : cfg.halt_after_frames)
    os << "worker." << worker << ".halt_after_frames = " << frames << "\n";
  return os.str();
}

RunResult RunExperiment(const ExperimentConfig& config) {
  config.Validate();
  if (config.transport == "sockets") return RunSocketsExperiment(config);
  SimRun run(config);
  return run.Run();
}

}  // namespace rlmesh
