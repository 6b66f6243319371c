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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <fstream>

#include "rlmesh/coord/coordinator.hpp"
#include "rlmesh/env/env.hpp"
#include "rlmesh/league/league.hpp"
#include "rlmesh/runtime/experiment.hpp"
#include "rlmesh/runtime/wire.hpp"

namespace rlmesh {

namespace {

using Clock = std::chrono::steady_clock;

void SendFrame(int fd, const WireMessage& msg) {
  Bytes frame = Encode(msg);
  size_t off = 0;
  while (off < frame.size()) {
    ssize_t n = ::send(fd, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
    if (n <= 0) Throw(ErrorCode::kIoError, "send failed");
    off += static_cast<size_t>(n);
  }
}

// Blocking read of the next message (worker side).
WireMessage ReadFrame(int fd, FrameReader& reader) {
  for (;;) {
    if (auto msg = reader.Next()) return std::move(*msg);
    uint8_t buf[4096];
    ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) Throw(ErrorCode::kIoError, "connection closed");
    reader.Feed({buf, static_cast<size_t>(n)});
  }
}

int ListenOn(int port, int backlog) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) Throw(ErrorCode::kIoError, "socket() failed");
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    Throw(ErrorCode::kIoError, "bind failed");
  }
  if (::listen(fd, backlog) != 0) {
    ::close(fd);
    Throw(ErrorCode::kIoError, "listen failed");
  }
  return fd;
}

int BoundPort(int fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  return ntohs(addr.sin_port);
}

int ConnectTo(int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) Throw(ErrorCode::kIoError, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  for (int attempt = 0; attempt < 50; ++attempt) {
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return fd;
    }
    ::usleep(20000);
  }
  ::close(fd);
  Throw(ErrorCode::kIoError, "connect failed");
}

struct Connection {
  int fd = -1;
  std::string worker_id;
  FrameReader reader;
  bool shutdown_sent = false;
  bool closed = false;
};

}  // namespace

// Parent process: listens, spawns one actor process per configured actor,
// then serves the learner loop over framed TCP. One long-lived duplex
// connection per worker, one in-flight request per connection.
RunResult RunSocketsExperiment(const ExperimentConfig& cfg) {
  const std::string player = cfg.TrainingPlayers().front();
  EnvSpec env_spec = SpecForEnv(cfg.env_id);
  if (env_spec.players != 1)
    Throw(ErrorCode::kConfigInvalid,
          "the sockets transport runs single-player environments");
  ArchSpec arch = cfg.ResolveArch();

  int listen_fd = ListenOn(cfg.sockets_port, cfg.topology.actor_count);
  int port = BoundPort(listen_fd);

  // Hand the config to workers through a temp file.
  auto cfg_path = std::filesystem::temp_directory_path() /
                  ("rlmesh-worker-" + std::to_string(::getpid()) + ".cfg");
  {
    std::ofstream out(cfg_path);
    out << RenderConfig(cfg);
  }

  std::vector<pid_t> children;
  for (int i = 0; i < cfg.topology.actor_count; ++i) {
    std::string worker_id = "actor-" + std::to_string(i);
    pid_t pid = ::fork();
    if (pid < 0) Throw(ErrorCode::kIoError, "fork failed");
    if (pid == 0) {
      std::string port_str = std::to_string(port);
      ::execl("/proc/self/exe", "rlmesh", "worker", "--id", worker_id.c_str(),
              "--port", port_str.c_str(), "--config", cfg_path.c_str(),
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    children.push_back(pid);
  }

  ParameterStore store;
  store.Publish(player,
                InitParams(arch, player, HashCombine(cfg.seed, HashString("init/" + player)),
                           cfg.policy_init_scale));
  League league(cfg.league.pfsp_exponent);
  league.RegisterPlayer(player, PlayerRole::kMain, *store.FetchLatest(player));
  league.set_env_id(cfg.env_id);
  Coordinator coordinator(cfg.topology, store, player, cfg.learn.lr);

  std::vector<Connection> conns;
  {
    auto accept_deadline = Clock::now() + std::chrono::seconds(15);
    while (conns.size() < static_cast<size_t>(cfg.topology.actor_count)) {
      pollfd p{listen_fd, POLLIN, 0};
      int ready = ::poll(&p, 1, 200);
      if (ready > 0) {
        int fd = ::accept(listen_fd, nullptr, nullptr);
        if (fd < 0) Throw(ErrorCode::kIoError, "accept failed");
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        Connection conn;
        conn.fd = fd;
        conns.push_back(std::move(conn));
      } else if (Clock::now() > accept_deadline) {
        ::close(listen_fd);
        Throw(ErrorCode::kWorkerCrashed, "actor workers failed to connect");
      }
    }
  }
  ::close(listen_fd);

  RunResult result;
  auto start = Clock::now();
  uint64_t frames_total = 0;
  uint64_t episodes = 0;
  uint64_t trajs = 0;
  uint64_t next_snapshot_at = cfg.league.snapshot_every;
  uint64_t snapshot_counter = 0;
  size_t live = conns.size();
  bool crashed = false;
  bool stop_requested = false;
  std::string diagnostic;

  auto elapsed_ms = [&] {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)
            .count());
  };

  auto maybe_snapshot = [&] {
    while (cfg.league.snapshot_every > 0 && frames_total >= next_snapshot_at) {
      ++snapshot_counter;
      next_snapshot_at += cfg.league.snapshot_every;
      league.SetLiveParams(player, *store.FetchLatest(player));
      league.SnapshotGeneration(player);
      if (cfg.league.eval_games > 0) {
        league.EvaluationRound(EvalPairing::kAllPairs, cfg.league.eval_games,
                               cfg.env_id, HashCombine(cfg.seed, snapshot_counter));
      }
    }
  };

  auto handle_message = [&](Connection& conn, WireMessage msg) {
    if (std::holds_alternative<ParamRequestMsg>(msg)) {
      ParamPushMsg push;
      push.params = *store.FetchLatest(player);
      SendFrame(conn.fd, push);
      return;
    }
    if (!std::holds_alternative<TrajBatchMsg>(msg))
      Throw(ErrorCode::kProtocolError, "unexpected message from actor");
    auto& batch = std::get<TrajBatchMsg>(msg);
    uint8_t status = 0;
    if (coordinator.QueueDepth() + batch.trajectories.size() >
        cfg.topology.queue_capacity) {
      status = 2;
    } else {
      for (Trajectory& t : batch.trajectories) {
        frames_total += t.size();
        auto r = coordinator.SubmitTrajectory(std::move(t));
        if (r.status == SubmitResult::Status::kQueued) ++trajs;
        if (r.dropped()) status = 1;
      }
      while (auto popped = coordinator.TryPopBatch()) {
        ParamsRef params = store.FetchLatest(player);
        GradientUpdate update =
            ComputeAlgorithmGradient(cfg.learn, *params, *popped, "learner");
        coordinator.ApplyLearnerUpdate(update);
      }
      maybe_snapshot();
    }
    if (frames_total >= cfg.frames || stop_requested) {
      SendFrame(conn.fd, ShutdownMsg{stop_requested ? "run aborted" : "frame budget reached"});
      conn.shutdown_sent = true;
    } else {
      ParamPushMsg push;
      push.params = *store.FetchLatest(player);
      push.status = status;
      SendFrame(conn.fd, push);
    }
  };

  while (live > 0) {
    if (elapsed_ms() > cfg.max_wall_ms) {
      crashed = true;
      diagnostic = "wall-clock watchdog expired";
      break;
    }
    std::vector<pollfd> fds;
    for (Connection& c : conns) {
      if (!c.closed) fds.push_back({c.fd, POLLIN, 0});
    }
    if (fds.empty()) break;
    int ready = ::poll(fds.data(), fds.size(), 200);
    if (ready <= 0) continue;
    for (pollfd& p : fds) {
      if (!(p.revents & (POLLIN | POLLHUP | POLLERR))) continue;
      auto it = std::find_if(conns.begin(), conns.end(),
                             [&](const Connection& c) { return c.fd == p.fd; });
      Connection& conn = *it;
      uint8_t buf[16384];
      ssize_t n = ::recv(conn.fd, buf, sizeof buf, 0);
      if (n <= 0) {
        conn.closed = true;
        ::close(conn.fd);
        --live;
        if (!conn.shutdown_sent && frames_total < cfg.frames) {
          crashed = true;
          diagnostic = "actor connection lost before shutdown";
          stop_requested = true;  // wind the remaining workers down now
        }
        continue;
      }
      try {
        conn.reader.Feed({buf, static_cast<size_t>(n)});
        while (auto msg = conn.reader.Next()) handle_message(conn, std::move(*msg));
      } catch (const Error&) {
        conn.closed = true;
        ::close(conn.fd);
        --live;
        crashed = true;
        diagnostic = "protocol error on actor connection";
      }
      if (conn.shutdown_sent && !conn.closed) {
        // The worker exits after the shutdown message; wait for its EOF via
        // the next poll round.
      }
    }
  }

  for (Connection& c : conns) {
    if (!c.closed) ::close(c.fd);
  }
  for (pid_t pid : children) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    if (!crashed && (!WIFEXITED(status) || WEXITSTATUS(status) != 0)) {
      crashed = true;
      diagnostic = "actor process exited abnormally";
    }
  }
  std::filesystem::remove(cfg_path);

  result.worker_crashed = crashed;
  result.diagnostic = diagnostic;
  result.frames_produced = frames_total;
  result.trajectories_submitted = trajs;
  result.updates_applied = coordinator.updates_applied();
  result.episodes_completed = episodes;
  result.wall_seconds = static_cast<double>(elapsed_ms()) / 1000.0;
  ParamsRef final_params = store.FetchLatest(player);
  result.final_versions[player] = final_params->version;
  result.final_checksums[player] = ParamsChecksum(*final_params);
  result.final_params[player] = *final_params;
  result.accounting = coordinator.Accounting();
  result.lag = coordinator.LagStats();
  result.max_lag = coordinator.MaxObservedLag();

  if (!cfg.league.file.empty()) {
    league.SetLiveParams(player, *final_params);
    std::filesystem::path file(cfg.league.file);
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    league.Save(file);
    result.league_file = file;
  }
  return result;
}

// Worker process: one environment, local inference, trajectory exchange.
// The rng streams and episode seeding mirror the simulated actor exactly so
// the two transports produce identical learning trajectories at zero delay.
int RunSocketActorWorker(const ExperimentConfig& cfg, const std::string& worker_id,
                         int port) {
  EnvSpec env_spec = SpecForEnv(cfg.env_id);
  ArchSpec arch = cfg.ResolveArch();
  int fd = ConnectTo(port);
  FrameReader reader;

  uint64_t base = HashCombine(cfg.seed, HashString("actor/" + worker_id));
  Rng action_rng(HashCombine(base, 1));
  uint64_t episode_seed_base = HashCombine(cfg.seed, HashString("episode/" + worker_id));
  uint64_t crash_after = kUnlimitedStaleness;
  if (auto it = cfg.crash_after_frames.find(worker_id); it != cfg.crash_after_frames.end())
    crash_after = it->second;

  SendFrame(fd, ParamRequestMsg{cfg.TrainingPlayers().front(), 0});
  WireMessage first = ReadFrame(fd, reader);
  if (!std::holds_alternative<ParamPushMsg>(first)) return 3;
  PolicyParameters params = std::get<ParamPushMsg>(first).params;

  auto env = MakeEnv(cfg.env_id);
  uint64_t episode_counter = 0;
  uint64_t frames = 0;
  auto obs = env->Reset(HashCombine(episode_seed_base, episode_counter));
  ++episode_counter;

  Trajectory segment;
  int segment_len = 0;
  for (;;) {
    auto input = PolicyInput(obs[0].per_agent_obs[0], 0, env_spec.agents_per_player,
                             arch);
    const auto& mask = obs[0].action_mask[0];
    InferResult inf = Infer(params, input, mask, action_rng);
    StepResult r = env->Step({{inf.action}});

    Transition t;
    t.obs = input;
    t.mask = mask;
    t.action = inf.action;
    t.reward = r.rewards[0][0];
    t.done = r.done;
    t.behavior_log_prob = static_cast<float>(inf.log_prob);
    t.value_estimate = static_cast<float>(inf.value);
    t.next_obs = PolicyInput(r.observation[0].per_agent_obs[0], 0,
                             env_spec.agents_per_player, arch);
    t.param_version = params.version;
    t.agent_id = 0;
    t.player_id = params.player_id;
    segment.steps.push_back(std::move(t));
    ++segment_len;
    ++frames;
    obs = r.observation;

    if (crash_after != kUnlimitedStaleness && frames >= crash_after) ::_exit(7);

    if (r.done || segment_len >= cfg.unroll) {
      if (r.done) {
        segment.bootstrap_value = 0.0f;
        obs = env->Reset(HashCombine(episode_seed_base, episode_counter));
        ++episode_counter;
      } else {
        auto next_input = PolicyInput(obs[0].per_agent_obs[0], 0,
                                      env_spec.agents_per_player, arch);
        segment.bootstrap_value = static_cast<float>(Forward(params, next_input).value);
      }
      for (;;) {
        TrajBatchMsg batch;
        batch.player_id = params.player_id;
        batch.trajectories = {segment};
        SendFrame(fd, batch);
        WireMessage reply = ReadFrame(fd, reader);
        if (std::holds_alternative<ShutdownMsg>(reply)) {
          ::close(fd);
          return 0;
        }
        const auto& push = std::get<ParamPushMsg>(reply);
        if (push.status == 2) {
          ::usleep(2000);  // backpressure: retry the same segment
          continue;
        }
        params = push.params;
        break;
      }
      segment = Trajectory{};
      segment_len = 0;
    }
  }
}

}  // namespace rlmesh
