#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mqe/policy.hpp"
#include "mqe/tasks.hpp"

namespace mqe {

/// Worker count from MQE_WORKERS, else the hardware concurrency.
int default_workers();

/// Fixed pool running a block-partitioned loop; the caller thread takes the
/// first block. Synchronizes only at the end of each run().
class WorkerPool {
 public:
  explicit WorkerPool(int n_workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  int size() const { return n_; }
  /// Calls fn(begin, end) on disjoint contiguous blocks covering [0, n).
  void run(int n, const std::function<void(int, int)>& fn);

 private:
  void loop(int worker);

  int n_;
  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_start_;
  std::condition_variable cv_done_;
  const std::function<void(int, int)>* job_ = nullptr;
  int job_n_ = 0;
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
  std::vector<std::exception_ptr> errors_;
};

struct EnvInfo {
  Outcome outcome = Outcome::None;      // set on the step that finished the episode
  std::vector<double> episode_return;   // per agent, valid when done
  int episode_length = 0;
  std::vector<double> terminal_obs;     // n_agents * obs_dim, valid when done
  bool operator==(const EnvInfo&) const = default;
};

struct TransitionView {
  int env = 0;
  const EpisodeState& state;  // post-step, pre-reset
  std::span<const VelocityCommand> actions;
  std::span<const double> rewards;
  std::span<const double> terms;
  Termination termination;
};

using TransitionHook = std::function<void(const TransitionView&)>;
using ResetHook = std::function<void(int env, const EpisodeState&)>;

/// N independent seeded environments of one task stepped in parallel.
/// Outputs are reused buffers laid out (env, agent, feature).
class EnvBatch {
 public:
  EnvBatch(TaskId task, const EnvConfig& cfg, int n_envs, std::uint64_t master_seed,
           int n_workers = default_workers());
  EnvBatch(std::shared_ptr<const Task> task, int n_envs, std::uint64_t master_seed,
           int n_workers = default_workers());

  const Task& task() const { return *task_; }
  std::shared_ptr<const Task> task_ptr() const { return task_; }
  Spaces spaces() const { return spaces_; }
  int n_envs() const { return n_envs_; }
  int n_agents() const { return n_agents_; }
  int n_workers() const { return pool_.size(); }
  std::uint64_t master_seed() const { return seed_; }

  std::span<const double> reset();
  /// actions: n_envs * n_agents * 3 (vx, vy, yaw_rate). Validated before any
  /// env advances; finished envs are reset inside the call.
  void step(std::span<const double> actions);

  std::span<const double> obs() const { return obs_; }
  std::span<const double> privileged_obs() const { return priv_; }
  std::span<const double> rewards() const { return rewards_; }
  std::span<const std::uint8_t> dones() const { return dones_; }
  const EnvInfo& info(int env) const { return infos_[static_cast<std::size_t>(env)]; }
  std::span<const double> terms(int env) const;
  const EpisodeState& env_state(int env) const { return states_[static_cast<std::size_t>(env)]; }

  /// Called from worker threads, once per env and step, before auto-reset.
  void set_transition_hook(TransitionHook hook) { on_transition_ = std::move(hook); }
  /// Called for every reset (initial and automatic), after the reset.
  void set_reset_hook(ResetHook hook) { on_reset_ = std::move(hook); }

 private:
  void reset_env(int e);
  void write_obs(int e, double* obs, double* priv);

  std::shared_ptr<const Task> task_;
  Spaces spaces_;
  int n_envs_;
  int n_agents_;
  int obs_dim_;
  int priv_dim_;
  std::uint64_t seed_;
  WorkerPool pool_;
  std::vector<EpisodeState> states_;
  std::vector<Rng> reset_rngs_;
  std::vector<std::vector<double>> returns_;
  std::vector<double> obs_, priv_, rewards_, terms_;
  std::vector<std::uint8_t> dones_;
  std::vector<EnvInfo> infos_;
  std::vector<VelocityCommand> commands_;
  TransitionHook on_transition_;
  ResetHook on_reset_;
};

/// Generates batch actions for a policy; random streams are per env.
class BatchPolicy {
 public:
  BatchPolicy(const PolicySpec& spec, const EnvBatch& batch);
  void act(const EnvBatch& batch, std::span<double> actions);

 private:
  PolicySpec spec_;
  const ScriptInfo* script_ = nullptr;
  std::vector<Rng> rngs_;
  std::vector<VelocityCommand> cmds_;
};

struct BenchTrial {
  double agent_steps_per_sec = 0.0;
  double policy_sec = 0.0;
  double step_sec = 0.0;
};

struct BenchResult {
  std::string task;
  int n_envs = 0;
  int n_workers = 0;
  int n_steps = 0;
  std::string policy;
  std::vector<BenchTrial> trials;
  double mean = 0.0;
  double stddev = 0.0;
  double policy_fraction = 0.0;  // share of wall time spent producing actions
};

/// Steady-state throughput: one warm-up of min(n_steps/10, 100) steps, then
/// `trials` timed runs of n_steps each.
BenchResult bench(TaskId task, const EnvConfig& cfg, int n_envs, int n_steps,
                  const PolicySpec& policy, int trials = 5, int n_workers = default_workers(),
                  std::uint64_t seed = 0);

}  // namespace mqe
