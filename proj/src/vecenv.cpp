#include "mqe/vecenv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <string>

namespace mqe {

int default_workers() {
  if (const char* env = std::getenv("MQE_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

WorkerPool::WorkerPool(int n_workers) : n_(std::max(1, n_workers)) {
  errors_.resize(static_cast<std::size_t>(n_));
  for (int w = 1; w < n_; ++w) threads_.emplace_back([this, w] { loop(w); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_start_.notify_all();
  for (std::thread& t : threads_) t.join();
}

namespace {

std::pair<int, int> block(int n, int w, int workers) {
  const auto lo = static_cast<long long>(n) * w / workers;
  const auto hi = static_cast<long long>(n) * (w + 1) / workers;
  return {static_cast<int>(lo), static_cast<int>(hi)};
}

}  // namespace

void WorkerPool::loop(int worker) {
  std::uint64_t seen = 0;
  for (;;) {
    const std::function<void(int, int)>* job = nullptr;
    int n = 0;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      n = job_n_;
    }
    const auto [lo, hi] = block(n, worker, n_);
    try {
      if (lo < hi) (*job)(lo, hi);
    } catch (...) {
      errors_[static_cast<std::size_t>(worker)] = std::current_exception();
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (--pending_ == 0) cv_done_.notify_one();
    }
  }
}

void WorkerPool::run(int n, const std::function<void(int, int)>& fn) {
  if (n_ == 1) {
    if (n > 0) fn(0, n);
    return;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    job_ = &fn;
    job_n_ = n;
    pending_ = n_ - 1;
    ++generation_;
  }
  cv_start_.notify_all();
  const auto [lo, hi] = block(n, 0, n_);
  std::exception_ptr own;
  try {
    if (lo < hi) fn(lo, hi);
  } catch (...) {
    own = std::current_exception();
  }
  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_done_.wait(lock, [&] { return pending_ == 0; });
  }
  if (own) std::rethrow_exception(own);
  for (std::exception_ptr& e : errors_) {
    if (e) {
      std::exception_ptr first = e;
      for (std::exception_ptr& x : errors_) x = nullptr;
      std::rethrow_exception(first);
    }
  }
}

EnvBatch::EnvBatch(TaskId task, const EnvConfig& cfg, int n_envs, std::uint64_t master_seed,
                   int n_workers)
    : EnvBatch(std::make_shared<const Task>(task, cfg), n_envs, master_seed, n_workers) {}

EnvBatch::EnvBatch(std::shared_ptr<const Task> task, int n_envs, std::uint64_t master_seed,
                   int n_workers)
    : task_(std::move(task)),
      spaces_(task_->spaces()),
      n_envs_(n_envs),
      n_agents_(spaces_.n_agents),
      obs_dim_(spaces_.obs_dim),
      priv_dim_(spaces_.privileged_obs_dim),
      seed_(master_seed),
      pool_(n_workers) {
  if (n_envs < 1) throw ConfigError("n_envs must be >= 1 (got " + std::to_string(n_envs) + ")");
  const auto ne = static_cast<std::size_t>(n_envs);
  const auto na = static_cast<std::size_t>(n_agents_);
  states_.resize(ne);
  reset_rngs_.resize(ne);
  returns_.assign(ne, std::vector<double>(na, 0.0));
  obs_.assign(ne * na * static_cast<std::size_t>(obs_dim_), 0.0);
  priv_.assign(ne * static_cast<std::size_t>(priv_dim_), 0.0);
  rewards_.assign(ne * na, 0.0);
  terms_.assign(ne * task_->spec().terms.size(), 0.0);
  dones_.assign(ne, 0);
  infos_.resize(ne);
  for (EnvInfo& info : infos_) {
    info.episode_return.assign(na, 0.0);
    info.terminal_obs.assign(na * static_cast<std::size_t>(obs_dim_), 0.0);
  }
  commands_.resize(ne * na);
}

std::span<const double> EnvBatch::terms(int env) const {
  const std::size_t nt = task_->spec().terms.size();
  return std::span<const double>(terms_).subspan(static_cast<std::size_t>(env) * nt, nt);
}

void EnvBatch::write_obs(int e, double* obs, double* priv) {
  const EpisodeState& st = states_[static_cast<std::size_t>(e)];
  const auto od = static_cast<std::size_t>(obs_dim_);
  for (int a = 0; a < n_agents_; ++a) {
    task_->observe(st, a, std::span<double>(obs + static_cast<std::size_t>(a) * od, od));
  }
  if (priv) task_->observe_privileged(st, std::span<double>(priv, static_cast<std::size_t>(priv_dim_)));
}

void EnvBatch::reset_env(int e) {
  const auto ei = static_cast<std::size_t>(e);
  task_->reset(states_[ei], reset_rngs_[ei]);
  std::fill(returns_[ei].begin(), returns_[ei].end(), 0.0);
  if (on_reset_) on_reset_(e, states_[ei]);
}

std::span<const double> EnvBatch::reset() {
  const auto na = static_cast<std::size_t>(n_agents_);
  const auto od = static_cast<std::size_t>(obs_dim_);
  pool_.run(n_envs_, [&](int lo, int hi) {
    for (int e = lo; e < hi; ++e) {
      const auto ei = static_cast<std::size_t>(e);
      reset_rngs_[ei] = Rng(derive_seed(seed_, ei));
      reset_env(e);
      dones_[ei] = 0;
      infos_[ei].outcome = Outcome::None;
      infos_[ei].episode_length = 0;
      std::fill_n(rewards_.begin() + static_cast<std::ptrdiff_t>(ei * na), na, 0.0);
      write_obs(e, obs_.data() + ei * na * od, priv_.data() + ei * static_cast<std::size_t>(priv_dim_));
    }
  });
  return obs_;
}

void EnvBatch::step(std::span<const double> actions) {
  const auto na = static_cast<std::size_t>(n_agents_);
  const std::size_t expected = static_cast<std::size_t>(n_envs_) * na * 3;
  if (actions.size() != expected) {
    throw Fault("step: action buffer has " + std::to_string(actions.size()) +
                " values, expected " + std::to_string(expected) + " (n_envs " +
                std::to_string(n_envs_) + " x n_agents " + std::to_string(n_agents_) + " x 3)");
  }
  for (std::size_t i = 0; i < expected; ++i) {
    if (!std::isfinite(actions[i])) {
      const std::size_t env = i / (na * 3);
      const std::size_t agent = (i / 3) % na;
      throw Fault("step: non-finite action for env " + std::to_string(env) + " agent " +
                  std::to_string(agent));
    }
  }
  for (std::size_t k = 0; k < commands_.size(); ++k) {
    commands_[k] = {actions[3 * k], actions[3 * k + 1], actions[3 * k + 2]};
  }
  const auto od = static_cast<std::size_t>(obs_dim_);
  const std::size_t nt = task_->spec().terms.size();
  pool_.run(n_envs_, [&](int lo, int hi) {
    for (int e = lo; e < hi; ++e) {
      const auto ei = static_cast<std::size_t>(e);
      EpisodeState& st = states_[ei];
      const std::span<const VelocityCommand> cmds(commands_.data() + ei * na, na);
      const std::span<double> rew(rewards_.data() + ei * na, na);
      const StepOutcome out = task_->step(st, cmds, rew);
      std::copy(st.term_values.begin(), st.term_values.end(), terms_.begin() + static_cast<std::ptrdiff_t>(ei * nt));
      for (std::size_t a = 0; a < na; ++a) returns_[ei][a] += rew[a];
      if (on_transition_) {
        on_transition_(TransitionView{e, st, cmds, rew,
                                      std::span<const double>(terms_.data() + ei * nt, nt),
                                      out.termination});
      }
      EnvInfo& info = infos_[ei];
      double* obs = obs_.data() + ei * na * od;
      if (out.termination.done) {
        dones_[ei] = 1;
        info.outcome = out.termination.outcome;
        info.episode_length = st.step;
        info.episode_return = returns_[ei];
        for (int a = 0; a < n_agents_; ++a) {
          task_->observe(st, a, std::span<double>(info.terminal_obs.data() + static_cast<std::size_t>(a) * od, od));
        }
        reset_env(e);
      } else {
        dones_[ei] = 0;
        info.outcome = Outcome::None;
        info.episode_length = 0;
      }
      write_obs(e, obs, priv_.data() + ei * static_cast<std::size_t>(priv_dim_));
    }
  });
}

BatchPolicy::BatchPolicy(const PolicySpec& spec, const EnvBatch& batch) : spec_(spec) {
  if (spec.kind == PolicyKind::Scripted) script_ = &find_script(spec.script, batch.task().spec().id);
  if (spec.kind == PolicyKind::Random) {
    for (int e = 0; e < batch.n_envs(); ++e) {
      rngs_.emplace_back(derive_seed(batch.master_seed(), static_cast<std::uint64_t>(e), kPolicySalt));
    }
  }
  cmds_.resize(static_cast<std::size_t>(batch.n_agents()));
}

void BatchPolicy::act(const EnvBatch& batch, std::span<double> actions) {
  const Spaces sp = batch.spaces();
  const auto na = static_cast<std::size_t>(sp.n_agents);
  for (int e = 0; e < batch.n_envs(); ++e) {
    const std::size_t base = static_cast<std::size_t>(e) * na * 3;
    switch (spec_.kind) {
      case PolicyKind::Zero:
        std::fill_n(actions.begin() + static_cast<std::ptrdiff_t>(base), na * 3, 0.0);
        break;
      case PolicyKind::Random: {
        Rng& rng = rngs_[static_cast<std::size_t>(e)];
        for (std::size_t k = 0; k < na * 3; ++k) {
          actions[base + k] = rng.uniform(sp.action_low[k % 3], sp.action_high[k % 3]);
        }
        break;
      }
      case PolicyKind::Scripted:
        std::fill(cmds_.begin(), cmds_.end(), VelocityCommand{});
        script_->fn(batch.task(), batch.env_state(e), cmds_);
        for (std::size_t a = 0; a < na; ++a) {
          actions[base + 3 * a] = cmds_[a].vx;
          actions[base + 3 * a + 1] = cmds_[a].vy;
          actions[base + 3 * a + 2] = cmds_[a].yaw_rate;
        }
        break;
    }
  }
}

BenchResult bench(TaskId task, const EnvConfig& cfg, int n_envs, int n_steps,
                  const PolicySpec& policy, int trials, int n_workers, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  EnvBatch batch(task, cfg, n_envs, seed, n_workers);
  BatchPolicy pol(policy, batch);
  std::vector<double> actions(static_cast<std::size_t>(n_envs) *
                              static_cast<std::size_t>(batch.n_agents()) * 3);
  batch.reset();
  const int warmup = std::min(std::max(n_steps / 10, 1), 100);
  for (int s = 0; s < warmup; ++s) {
    pol.act(batch, actions);
    batch.step(actions);
  }
  BenchResult r;
  r.task = std::string(task_name(task));
  r.n_envs = n_envs;
  r.n_workers = batch.n_workers();
  r.n_steps = n_steps;
  r.policy = policy.text();
  double policy_total = 0.0;
  double wall_total = 0.0;
  for (int t = 0; t < trials; ++t) {
    BenchTrial trial;
    for (int s = 0; s < n_steps; ++s) {
      const auto t0 = clock::now();
      pol.act(batch, actions);
      const auto t1 = clock::now();
      batch.step(actions);
      const auto t2 = clock::now();
      trial.policy_sec += std::chrono::duration<double>(t1 - t0).count();
      trial.step_sec += std::chrono::duration<double>(t2 - t1).count();
    }
    const double wall = trial.policy_sec + trial.step_sec;
    trial.agent_steps_per_sec = static_cast<double>(n_envs) * batch.n_agents() * n_steps / wall;
    policy_total += trial.policy_sec;
    wall_total += wall;
    r.trials.push_back(trial);
  }
  double sum = 0.0;
  for (const BenchTrial& t : r.trials) sum += t.agent_steps_per_sec;
  r.mean = sum / static_cast<double>(r.trials.size());
  double ss = 0.0;
  for (const BenchTrial& t : r.trials) ss += (t.agent_steps_per_sec - r.mean) * (t.agent_steps_per_sec - r.mean);
  r.stddev = r.trials.size() > 1 ? std::sqrt(ss / static_cast<double>(r.trials.size() - 1)) : 0.0;
  r.policy_fraction = wall_total > 0.0 ? policy_total / wall_total : 0.0;
  return r;
}

}  // namespace mqe
