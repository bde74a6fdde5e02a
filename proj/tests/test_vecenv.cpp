#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <vector>

#include "mqe/vecenv.hpp"

using namespace mqe;

namespace {

std::vector<double> random_actions(const EnvBatch& b, Rng& rng) {
  std::vector<double> a(static_cast<std::size_t>(b.n_envs() * b.n_agents() * 3));
  for (std::size_t k = 0; k < a.size(); k += 3) {
    a[k] = rng.uniform(-1.5, 1.5);
    a[k + 1] = rng.uniform(-1, 1);
    a[k + 2] = rng.uniform(-2, 2);
  }
  return a;
}

std::vector<double> slice(std::span<const double> v, int env, int per_env) {
  const auto first = v.begin() + env * per_env;
  return {first, first + per_env};
}

}  // namespace

TEST(EnvBatch, ObservationShape) {
  EnvBatch b(TaskId::NarrowGate, EnvConfig{}, 500, 1, 1);
  const auto obs = b.reset();
  EXPECT_EQ(obs.size(), 500u * 2u * 13u);
  EXPECT_EQ(b.rewards().size(), 1000u);
  EXPECT_EQ(b.dones().size(), 500u);
}

TEST(EnvBatch, RejectsEmptyBatch) {
  EXPECT_THROW(EnvBatch(TaskId::NarrowGate, EnvConfig{}, 0, 1, 1), ConfigError);
}

TEST(EnvBatch, RejectsBadActions) {
  EnvBatch b(TaskId::NarrowGate, EnvConfig{}, 4, 1, 1);
  b.reset();
  const std::vector<double> before(b.obs().begin(), b.obs().end());
  std::vector<double> short_actions(5, 0.0);
  EXPECT_THROW(b.step(short_actions), Fault);
  std::vector<double> nan_actions(24, 0.0);
  nan_actions[17] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(b.step(nan_actions), Fault);
  EXPECT_EQ(std::vector<double>(b.obs().begin(), b.obs().end()), before);
}

TEST(EnvBatch, SameSeedSameObservations) {
  EnvBatch a(TaskId::SheepdogHard, EnvConfig{}, 8, 42, 1);
  EnvBatch b(TaskId::SheepdogHard, EnvConfig{}, 8, 42, 1);
  a.reset();
  b.reset();
  Rng ra(3), rb(3);
  for (int s = 0; s < 50; ++s) {
    a.step(random_actions(a, ra));
    b.step(random_actions(b, rb));
    ASSERT_TRUE(std::equal(a.obs().begin(), a.obs().end(), b.obs().begin()));
    ASSERT_TRUE(std::equal(a.rewards().begin(), a.rewards().end(), b.rewards().begin()));
  }
}

TEST(EnvBatch, DifferentSeedsDiffer) {
  EnvBatch a(TaskId::NarrowGate, EnvConfig{}, 2, 1, 1);
  EnvBatch b(TaskId::NarrowGate, EnvConfig{}, 2, 2, 1);
  EXPECT_FALSE(std::equal(a.reset().begin(), a.reset().end(), b.reset().begin()));
}

TEST(EnvBatch, EnvStreamIndependentOfBatchSize) {
  EnvBatch small(TaskId::Football2v2, EnvConfig{}, 3, 5, 1);
  EnvBatch large(TaskId::Football2v2, EnvConfig{}, 7, 5, 1);
  small.reset();
  large.reset();
  const int per_env = small.n_agents() * small.spaces().obs_dim;
  std::vector<double> as(static_cast<std::size_t>(3 * small.n_agents() * 3), 0.7);
  std::vector<double> al(static_cast<std::size_t>(7 * large.n_agents() * 3), -0.4);
  std::copy(as.begin(), as.end(), al.begin());
  for (int s = 0; s < 100; ++s) {
    small.step(as);
    large.step(al);
    for (int e = 0; e < 3; ++e)
      ASSERT_EQ(slice(small.obs(), e, per_env), slice(large.obs(), e, per_env));
  }
}

TEST(EnvBatch, AutoResetReportsEpisode) {
  EnvConfig cfg;
  cfg.task.episode_len = 20;
  EnvBatch b(TaskId::NarrowGate, cfg, 3, 9, 1);
  b.reset();
  std::vector<double> zero(18, 0.0);
  double returned = 0.0;
  for (int s = 0; s < 20; ++s) {
    b.step(zero);
    returned += b.rewards()[0];
    const bool last = s == 19;
    for (int e = 0; e < 3; ++e) ASSERT_EQ(b.dones()[static_cast<std::size_t>(e)], last ? 1 : 0);
  }
  const EnvInfo& info = b.info(0);
  EXPECT_EQ(info.outcome, Outcome::Timeout);
  EXPECT_EQ(info.episode_length, 20);
  EXPECT_NEAR(info.episode_return[0], returned, 1e-12);
  EXPECT_EQ(info.terminal_obs.size(), 2u * 13u);
  EXPECT_EQ(b.env_state(0).step, 0);
  EXPECT_NE(std::vector<double>(b.obs().begin(), b.obs().begin() + 26), info.terminal_obs);
}

TEST(EnvBatch, WorkerCountDoesNotChangeResults) {
  EnvBatch one(TaskId::PushBox, EnvConfig{}, 16, 11, 1);
  EnvBatch many(TaskId::PushBox, EnvConfig{}, 16, 11, 8);
  one.reset();
  many.reset();
  Rng r1(8), r2(8);
  for (int s = 0; s < 300; ++s) {
    one.step(random_actions(one, r1));
    many.step(random_actions(many, r2));
    ASSERT_TRUE(std::equal(one.obs().begin(), one.obs().end(), many.obs().begin()));
    ASSERT_TRUE(std::equal(one.privileged_obs().begin(), one.privileged_obs().end(),
                           many.privileged_obs().begin()));
    ASSERT_TRUE(std::equal(one.rewards().begin(), one.rewards().end(), many.rewards().begin()));
    ASSERT_TRUE(std::equal(one.dones().begin(), one.dones().end(), many.dones().begin()));
  }
}

TEST(EnvBatch, ScriptedPolicyIsDeterministic) {
  const PolicySpec p = parse_policy("scripted:narrow_gate_solver");
  EnvBatch a(TaskId::NarrowGate, EnvConfig{}, 4, 2, 1);
  EnvBatch b(TaskId::NarrowGate, EnvConfig{}, 4, 2, 3);
  BatchPolicy pa(p, a), pb(p, b);
  a.reset();
  b.reset();
  std::vector<double> xa(24), xb(24);
  int successes = 0;
  for (int s = 0; s < 500; ++s) {
    pa.act(a, xa);
    pb.act(b, xb);
    ASSERT_EQ(xa, xb);
    a.step(xa);
    b.step(xb);
    for (int e = 0; e < 4; ++e)
      if (a.dones()[static_cast<std::size_t>(e)]) successes += a.info(e).outcome == Outcome::Success;
  }
  EXPECT_GE(successes, 4);
}

TEST(WorkerPool, BlocksCoverRangeOnce) {
  for (int workers : {1, 3, 8}) {
    WorkerPool pool(workers);
    for (int n : {0, 1, 5, 64, 1001}) {
      std::vector<std::atomic<int>> hits(static_cast<std::size_t>(n));
      pool.run(n, [&](int b, int e) {
        for (int i = b; i < e; ++i) hits[static_cast<std::size_t>(i)]++;
      });
      for (int i = 0; i < n; ++i) ASSERT_EQ(hits[static_cast<std::size_t>(i)].load(), 1);
    }
  }
}

TEST(WorkerPool, PropagatesExceptions) {
  WorkerPool pool(4);
  EXPECT_THROW(pool.run(100, [](int b, int) {
    if (b > 0) throw Fault("boom");
  }),
               Fault);
  int total = 0;
  pool.run(1, [&](int b, int e) { total += e - b; });
  EXPECT_EQ(total, 1);
}

TEST(Bench, ReportsTrials) {
  const BenchResult r = bench(TaskId::NarrowGate, EnvConfig{}, 8, 20, parse_policy("random"), 3, 1);
  EXPECT_EQ(r.task, "narrow_gate");
  EXPECT_EQ(r.n_envs, 8);
  EXPECT_EQ(r.trials.size(), 3u);
  for (const BenchTrial& t : r.trials) EXPECT_GT(t.agent_steps_per_sec, 0.0);
  EXPECT_GT(r.mean, 0.0);
  EXPECT_GE(r.policy_fraction, 0.0);
  EXPECT_LE(r.policy_fraction, 1.0);
}
