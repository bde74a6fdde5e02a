// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mqe/kernels.hpp"
#include "mqe/oracle.hpp"
#include "mqe/trajectory.hpp"
#include "mqe/vecenv.hpp"

using namespace mqe;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void verdict(bool ok, const char* name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void note(const std::string& text) {
  std::printf("  %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// Reward oracle

void reward_oracle() {
  const auto t0 = Clock::now();
  bool ok = true;
  double worst = 0.0;
  for (TaskId id : all_tasks()) {
    EnvConfig cfg;
    EnvBatch batch(id, cfg, 4, 2024, default_workers());
    const PolicySpec policy = parse_policy("random");
    BatchPolicy pol(policy, batch);
    std::stringstream file;
    {
      TrajectoryWriter writer(file, batch, policy, 250);
      batch.reset();
      writer.flush();
      std::vector<double> actions(static_cast<std::size_t>(4 * batch.n_agents() * 3));
      for (int s = 0; s < 250; ++s) {
        pol.act(batch, actions);
        batch.step(actions);
        writer.flush();
      }
    }
    const ReplayReport r = replay_trajectory(file);
    const bool task_ok = r.transitions == 1000 && r.ok(1e-9);
    ok = ok && task_ok;
    worst = std::max(worst, r.max_discrepancy);
    note(fmt("%-16s transitions %zu  episodes %zu  max discrepancy %.3g  termination mismatches %zu",
             r.task.c_str(), r.transitions, r.episodes, r.max_discrepancy,
             r.termination_mismatches));
  }

  // Scales of the collaborative reward table, term by term.
  const std::map<std::string, double> table = {
      {"narrow_gate.gate_crossing", 5.0},       {"narrow_gate.gate_distance", 1.0},
      {"narrow_gate.agent_spacing", 0.025},     {"narrow_gate.collision", -2.0},
      {"climb_seesaw.destination", 10.0},       {"climb_seesaw.height", 1.0},
      {"climb_seesaw.seesaw_progress", 5.0},    {"climb_seesaw.seesaw_distance", -0.5},
      {"climb_seesaw.collision", -2.0},         {"climb_seesaw.fall", -2.0},
      {"climb_seesaw.agent_spacing", 0.25},     {"sheepdog_easy.sheep_crossing", 1.0},
      {"sheepdog_easy.sheep_gate_distance", 2.0}, {"sheepdog_hard.sheep_crossing", 1.0},
      {"sheepdog_hard.sheep_gate_proximity", 1.0}, {"push_box.box_crossing", 1.0},
      {"push_box.box_gate_distance", 10.0},     {"football_2v1.goal", 10.0},
      {"football_2v1.ball_goal_proximity", 3.0},
  };
  const EnvConfig defaults;
  int checked = 0;
  for (TaskId id : all_tasks()) {
    const TaskSpec spec = make_task_spec(id, defaults);
    if (!spec.collaborative) continue;
    std::size_t n_table = 0;
    for (const auto& [k, v] : table) n_table += k.rfind(spec.name + ".", 0) == 0;
    if (n_table != spec.terms.size()) {
      ok = false;
      note(spec.name + ": term count differs from the table");
    }
    for (const RewardTerm& t : spec.terms) {
      const auto it = table.find(spec.name + "." + t.name);
      if (it == table.end() || it->second != t.scale) {
        ok = false;
        note("scale mismatch " + spec.name + "." + t.name);
      }
      ++checked;
    }
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 120.0;
  verdict(ok, "reward_oracle",
          fmt("12 tasks x 1000 random transitions, max discrepancy %.3g (tol 1e-9); %d table "
              "scales match; %.1f s (limit 120 s)",
              worst, checked, dt));
}

// ---------------------------------------------------------------------------
// Physics

RigidBody random_body(Rng& rng, int id) {
  RigidBody b;
  b.id = id;
  if (rng.uniform() < 0.5) {
    b.shape = Shape::disc(rng.uniform(0.1, 0.5));
  } else {
    b.shape = Shape::rect(rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5));
  }
  b.mass = rng.uniform(1.0, 50.0);
  const double r = b.shape.bound_radius();
  b.inertia = 0.5 * b.mass * r * r;
  b.yaw = rng.uniform(-kPi, kPi);
  b.friction_mu = rng.uniform(0.0, 1.0);
  return b;
}

void physics_suite() {
  const auto t0 = Clock::now();
  Rng rng(77);

  // Momentum over isolated two-body collisions.
  double worst_dp = 0.0;
  int collided = 0;
  int tried = 0;
  while (collided < 10000) {
    ++tried;
    WorldState w;
    RigidBody a = random_body(rng, 0);
    RigidBody b = random_body(rng, 1);
    const double ang = rng.uniform(-kPi, kPi);
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    const double gap = rng.uniform(-0.01, 0.02);
    b.pos = dir * (a.shape.bound_radius() + b.shape.bound_radius() + gap);
    const double closing = rng.uniform(0.1, 3.0);
    a.vel = dir * (closing * 0.5) + Vec2{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    b.vel = dir * (-closing * 0.5) + Vec2{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    a.yaw_rate = rng.uniform(-2.0, 2.0);
    b.yaw_rate = rng.uniform(-2.0, 2.0);
    w.bodies = {a, b};
    const Vec2 p0 = linear_momentum(w);
    const Vec2 va = w.bodies[0].vel;
    const std::vector<Wrench> none(2);
    PhysicsScratch scratch;
    step_world(w, none, kControlDt, scratch);
    const Vec2 p1 = linear_momentum(w);
    if (w.bodies[0].vel == va) continue;
    ++collided;
    worst_dp = std::max(worst_dp, norm(p1 - p0));
  }
  const bool momentum_ok = worst_dp <= 1e-6;
  note(fmt("momentum: %d two-body collisions (%d sampled approaches), max |dp| %.3g kg m/s "
           "(tol 1e-6)",
           collided, tried, worst_dp));

  // Penetration and energy in crowded walled scenes.
  const std::vector<BlockSpec> blocks = {BlockSpec::walled_arena(4.0, 4.0)};
  auto arena = std::make_shared<const Arena>(compose_track(blocks, {0.0, 0.0}));
  double worst_depth = 0.0;
  double worst_rise = 0.0;
  long stress_steps = 0;
  for (int scene = 0; scene < 40; ++scene) {
    for (int pass = 0; pass < 2; ++pass) {
      const bool driven = pass == 0;
      WorldState w;
      w.arena = arena;
      const int n = 10;
      for (int k = 0; k < n; ++k) {
        RigidBody b = random_body(rng, k);
        b.pos = {0.6 + 0.9 * (k % 4) + rng.uniform(-0.05, 0.05),
                 -1.35 + 0.9 * (k / 4) + rng.uniform(-0.05, 0.05)};
        b.shape = b.shape.kind == ShapeKind::Disc ? Shape::disc(std::min(b.shape.radius, 0.3))
                                                  : Shape::rect(std::min(b.shape.half_w, 0.25),
                                                                std::min(b.shape.half_h, 0.25));
        b.vel = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        b.ground_friction = rng.uniform() < 0.5;
        w.bodies.push_back(b);
      }
      for (RigidBody& wall : wall_bodies(*arena, n)) w.bodies.push_back(wall);
      std::vector<Wrench> forces(w.bodies.size());
      PhysicsScratch scratch;
      StepReport report;
      report.measure_depth = true;
      double ke = kinetic_energy(w);
      for (int s = 0; s < 125; ++s) {
        if (driven) {
          for (int k = 0; k < n; ++k) {
            const RigidBody& b = w.bodies[static_cast<std::size_t>(k)];
            const Vec2 to_center = Vec2{2.0, 0.0} - b.pos;
            forces[static_cast<std::size_t>(k)].force =
                to_center * (200.0 / std::max(norm(to_center), 1e-9)) +
                Vec2{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};
          }
        }
        step_world(w, forces, kControlDt, scratch, &report);
        worst_depth = std::max(worst_depth, report.max_depth);
        ++stress_steps;
        if (!driven) {
          const double ke1 = kinetic_energy(w);
          worst_rise = std::max(worst_rise, ke1 - ke);
          ke = ke1;
        }
      }
    }
  }
  const bool depth_ok = worst_depth <= 1e-3;
  const bool energy_ok = worst_rise <= 1e-9;
  note(fmt("penetration: %ld stress steps, max depth %.3g m (tol 1e-3)", stress_steps, worst_depth));
  note(fmt("energy: zero-input scenes, max per-step KE rise %.3g J (tol 1e-9)", worst_rise));

  // Coulomb stop time.
  WorldState w;
  RigidBody disc;
  disc.shape = Shape::disc(0.3);
  disc.mass = 10.0;
  disc.inertia = 0.45;
  disc.friction_mu = 0.5;
  disc.ground_friction = true;
  disc.vel = {2.0, 0.0};
  w.bodies = {disc};
  const std::vector<Wrench> none(1);
  PhysicsScratch scratch;
  double t_stop = -1.0;
  for (int s = 1; s <= 200 && t_stop < 0.0; ++s) {
    step_world(w, none, kControlDt, scratch);
    if (norm(w.bodies[0].vel) == 0.0) t_stop = s * kControlDt;
  }
  const double analytic = 2.0 / (0.5 * 9.81);
  const bool coulomb_ok = t_stop > 0.0 && std::abs(t_stop - analytic) <= 2.0 * kControlDt;
  note(fmt("coulomb: stop at %.3f s, analytic %.4f s (tol %.2f s)", t_stop, analytic,
           2.0 * kControlDt));

  const double dt = seconds_since(t0);
  verdict(momentum_ok && depth_ok && energy_ok && coulomb_ok && dt < 300.0, "physics",
          fmt("max |dp| %.3g, max depth %.3g m, max KE rise %.3g J, stop time error %.3f s; %.1f s "
              "(limit 300 s)",
              worst_dp, worst_depth, worst_rise, std::abs(t_stop - analytic), dt));
}

// ---------------------------------------------------------------------------
// Determinism

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  }
  template <class T>
  void add(std::span<const T> s) {
    add(s.data(), s.size_bytes());
  }
};

std::vector<std::uint64_t> step_hashes(TaskId id, int workers, int n_envs, int n_steps) {
  EnvConfig cfg;
  EnvBatch batch(id, cfg, n_envs, 99, workers);
  BatchPolicy pol(parse_policy("random"), batch);
  std::vector<double> actions(static_cast<std::size_t>(n_envs * batch.n_agents() * 3));
  std::vector<std::uint64_t> out;
  out.reserve(static_cast<std::size_t>(n_steps) + 1);
  {
    Fnv f;
    f.add(batch.reset());
    f.add(batch.privileged_obs());
    out.push_back(f.h);
  }
  for (int s = 0; s < n_steps; ++s) {
    pol.act(batch, actions);
    batch.step(actions);
    Fnv f;
    f.add(std::span<const double>(actions));
    f.add(batch.obs());
    f.add(batch.privileged_obs());
    f.add(batch.rewards());
    f.add(batch.dones());
    for (int e = 0; e < n_envs; ++e) {
      if (!batch.dones()[static_cast<std::size_t>(e)]) continue;
      const EnvInfo& info = batch.info(e);
      f.add(&info.outcome, sizeof info.outcome);
      f.add(&info.episode_length, sizeof info.episode_length);
      f.add(std::span<const double>(info.episode_return));
      f.add(std::span<const double>(info.terminal_obs));
    }
    out.push_back(f.h);
  }
  return out;
}

void determinism() {
  const auto t0 = Clock::now();
  bool ok = true;
  for (TaskId id : all_tasks()) {
    const auto a = step_hashes(id, 1, 64, 10000);
    const auto b = step_hashes(id, 8, 64, 10000);
    std::size_t first = a.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) {
        first = i;
        break;
      }
    }
    const bool same = first == a.size() && a.size() == b.size();
    ok = ok && same;
    note(fmt("%-16s 1 vs 8 workers: %s", std::string(task_name(id)).c_str(),
             same ? "identical over 10000 steps" : fmt("diverge at step %zu", first).c_str()));
  }
  const double dt = seconds_since(t0);
  verdict(ok && dt < 600.0, "determinism",
          fmt("64 envs x 10000 steps x 12 tasks, bitwise StepResult equality; %.1f s (limit 600 s)",
              dt));
}

// ---------------------------------------------------------------------------
// Scripted solvability

struct EpisodeLog {
  bool done = false;
  Outcome outcome = Outcome::None;
  int length = 0;
  std::vector<double> term_sum;
  std::vector<int> term_fires;
  std::vector<int> crossing_step;  // per agent, -1 if never
  int crossing_latch_flips = 0;
  Vec2 start_box;
  Vec2 box_at_250;
  double min_seesaw = 1e9;
  double max_seesaw = -1e9;
};

std::vector<EpisodeLog> first_episodes(TaskId id, const std::string& policy_text, int n_envs,
                                       std::uint64_t seed) {
  EnvConfig cfg;
  EnvBatch batch(id, cfg, n_envs, seed, default_workers());
  const Task& task = batch.task();
  const std::size_t nt = task.spec().terms.size();
  std::vector<EpisodeLog> logs(static_cast<std::size_t>(n_envs));
  std::vector<std::vector<std::uint8_t>> last_crossed(static_cast<std::size_t>(n_envs));
  for (EpisodeLog& l : logs) {
    l.term_sum.assign(nt, 0.0);
    l.term_fires.assign(nt, 0);
    l.crossing_step.assign(static_cast<std::size_t>(task.spec().n_agents), -1);
  }
  batch.set_reset_hook([&](int e, const EpisodeState& st) {
    EpisodeLog& l = logs[static_cast<std::size_t>(e)];
    if (l.done) return;
    if (task.roster().box >= 0) l.start_box = st.world.bodies[static_cast<std::size_t>(task.roster().box)].pos;
    last_crossed[static_cast<std::size_t>(e)] = st.latches.crossed;
  });
  batch.set_transition_hook([&](const TransitionView& t) {
    EpisodeLog& l = logs[static_cast<std::size_t>(t.env)];
    if (l.done) return;
    const EpisodeState& st = t.state;
    for (std::size_t k = 0; k < nt; ++k) {
      l.term_sum[k] += t.terms[k];
      l.term_fires[k] += t.terms[k] != 0.0;
    }
    auto& prev = last_crossed[static_cast<std::size_t>(t.env)];
    for (std::size_t i = 0; i < st.latches.crossed.size(); ++i) {
      if (st.latches.crossed[i] != prev[i]) {
        ++l.crossing_latch_flips;
        if (i < l.crossing_step.size()) l.crossing_step[i] = st.step;
      }
    }
    prev = st.latches.crossed;
    if (task.roster().box >= 0 && st.step == 250) {
      l.box_at_250 = st.world.bodies[static_cast<std::size_t>(task.roster().box)].pos;
    }
    if (!st.world.joints.empty() && task.geometry().seesaw) {
      l.min_seesaw = std::min(l.min_seesaw, st.world.seesaw_angle());
      l.max_seesaw = std::max(l.max_seesaw, st.world.seesaw_angle());
    }
    if (t.termination.done) {
      l.done = true;
      l.outcome = t.termination.outcome;
      l.length = st.step;
    }
  });
  BatchPolicy pol(parse_policy(policy_text), batch);
  batch.reset();
  std::vector<double> actions(static_cast<std::size_t>(n_envs * batch.n_agents() * 3));
  const int max_steps = task.spec().episode_len;
  for (int s = 0; s < max_steps; ++s) {
    pol.act(batch, actions);
    batch.step(actions);
    if (std::all_of(logs.begin(), logs.end(), [](const EpisodeLog& l) { return l.done; })) break;
  }
  return logs;
}

int term_index(TaskId id, const std::string& name) {
  const TaskSpec spec = make_task_spec(id, EnvConfig{});
  for (std::size_t k = 0; k < spec.terms.size(); ++k)
    if (spec.terms[k].name == name) return static_cast<int>(k);
  return -1;
}

void scripted_solvability() {
  const auto t0 = Clock::now();
  const int n = 8;

  // Narrow gate.
  bool gate_ok = true;
  {
    const auto logs = first_episodes(TaskId::NarrowGate, "scripted:narrow_gate_solver", n, 1);
    const int k = term_index(TaskId::NarrowGate, "gate_crossing");
    int successes = 0;
    for (const EpisodeLog& l : logs) {
      successes += l.outcome == Outcome::Success;
      const bool each_once = l.crossing_latch_flips == 2 && l.crossing_step[0] > 0 &&
                             l.crossing_step[1] > 0 && l.term_sum[static_cast<std::size_t>(k)] == 10.0;
      gate_ok = gate_ok && each_once;
    }
    gate_ok = gate_ok && successes == n;
    note(fmt("narrow_gate: success %d/%d, each agent's +5 crossing fired exactly once: %s", successes,
             n, gate_ok ? "yes" : "no"));
  }

  // Climb on seesaw.
  bool climb_ok = true;
  {
    const auto pair = first_episodes(TaskId::ClimbSeesaw, "scripted:climb_seesaw_pair", n, 1);
    const int k = term_index(TaskId::ClimbSeesaw, "destination");
    int dest = 0;
    int success = 0;
    for (const EpisodeLog& l : pair) {
      dest += l.term_sum[static_cast<std::size_t>(k)] >= 10.0;
      success += l.outcome == Outcome::Success;
    }
    const auto single = first_episodes(TaskId::ClimbSeesaw, "scripted:climb_seesaw_single", n, 1);
    int single_success = 0;
    double single_min = 1e9;
    for (const EpisodeLog& l : single) {
      single_success += l.outcome == Outcome::Success;
      single_min = std::min(single_min, l.min_seesaw);
    }
    climb_ok = dest == n && success == n && single_success == 0;
    note(fmt("climb_seesaw: pair destination +10 in %d/%d (success %d/%d); single success %d/%d, "
             "lowest plank angle %.3f rad",
             dest, n, success, n, single_success, n, single_min));
  }

  // Push box.
  bool box_ok = true;
  {
    const auto single = first_episodes(TaskId::PushBox, "scripted:push_box_single", n, 1);
    double worst = 0.0;
    for (const EpisodeLog& l : single) worst = std::max(worst, norm(l.box_at_250 - l.start_box));
    const auto pair = first_episodes(TaskId::PushBox, "scripted:push_box_pair", n, 1);
    int success = 0;
    for (const EpisodeLog& l : pair) success += l.outcome == Outcome::Success;
    box_ok = worst < 0.05 && success == n;
    note(fmt("push_box: single robot moves the box at most %.4f m in 5 s (limit 0.05); pair "
             "success %d/%d",
             worst, success, n));
  }

  // Sumo.
  bool sumo_ok = true;
  {
    const auto logs = first_episodes(TaskId::Sumo, "scripted:sumo_pusher", n, 1);
    int wins = 0;
    for (const EpisodeLog& l : logs) wins += l.outcome == Outcome::TeamAWin;
    sumo_ok = wins == n;
    note(fmt("sumo: pusher beats the zero-policy opponent in %d/%d", wins, n));
  }

  const double dt = seconds_since(t0);
  verdict(gate_ok && climb_ok && box_ok && sumo_ok && dt < 300.0, "scripted_solvability",
          fmt("narrow_gate %s, climb_seesaw %s, push_box %s, sumo %s; %.1f s (limit 300 s)",
              gate_ok ? "ok" : "failed", climb_ok ? "ok" : "failed", box_ok ? "ok" : "failed",
              sumo_ok ? "ok" : "failed", dt));
}

// ---------------------------------------------------------------------------
// NPC behavior

void npc_behavior() {
  // Flight from an approaching dog.
  const EnvConfig cfg;
  const Task task(TaskId::SheepdogEasy, cfg);
  const Roster& ro = task.roster();
  const int sheep = ro.sheep[0];
  const double sheep_r = cfg.bodies.sheep_radius;
  const int n_episodes = 100;
  const int horizon = 150;
  std::vector<std::vector<double>> dist(n_episodes);
  int contact_horizon = horizon;
  for (int ep = 0; ep < n_episodes; ++ep) {
    EpisodeState st;
    Rng rng(derive_seed(5150, static_cast<std::uint64_t>(ep)));
    task.reset(st, rng);
    RigidBody& s = st.world.bodies[static_cast<std::size_t>(sheep)];
    const double ang = rng.uniform(-0.5, 0.5);
    const Vec2 back{-std::cos(ang), std::sin(ang)};
    for (std::size_t i = 0; i < ro.agents.size(); ++i) {
      RigidBody& dog = st.world.bodies[static_cast<std::size_t>(ro.agents[i])];
      dog.pos = s.pos + back * 1.6 + Vec2{0.0, i == 0 ? 0.45 : -0.45};
      dog.yaw = std::atan2(-back.y, -back.x);
      dog.vel = {};
    }
    st.prev = st.world;
    std::vector<VelocityCommand> cmds(ro.agents.size());
    std::vector<double> rewards(ro.agents.size());
    for (int t = 0; t <= horizon; ++t) {
      const RigidBody& sh = st.world.bodies[static_cast<std::size_t>(sheep)];
      const RigidBody& d0 = st.world.bodies[static_cast<std::size_t>(ro.agents[0])];
      dist[static_cast<std::size_t>(ep)].push_back(norm(sh.pos - d0.pos));
      double wall_gap = 1e9;
      for (const Segment& seg : task.arena().walls) {
        const Vec2 ab = seg.b - seg.a;
        const double u = std::clamp(dot(sh.pos - seg.a, ab) / norm2(ab), 0.0, 1.0);
        wall_gap = std::min(wall_gap, norm(sh.pos - (seg.a + ab * u)) - sh.shape.radius);
      }
      if (wall_gap <= 0.02 || sh.pos.x > task.geometry().gate.x - sheep_r) {
        contact_horizon = std::min(contact_horizon, t);
        break;
      }
      if (t == horizon) break;
      for (std::size_t i = 0; i < ro.agents.size(); ++i) {
        const RigidBody& dog = st.world.bodies[static_cast<std::size_t>(ro.agents[i])];
        const Vec2 to = sh.pos - dog.pos;
        const Vec2 v = to * (0.15 / norm(to));
        const Vec2 body = rotate(v, -dog.yaw);
        cmds[i] = {body.x, body.y, 0.0};
      }
      if (task.step(st, cmds, rewards).termination.done) {
        contact_horizon = std::min(contact_horizon, t + 1);
        break;
      }
    }
  }
  std::vector<double> mean(static_cast<std::size_t>(contact_horizon) + 1, 0.0);
  for (int t = 0; t <= contact_horizon; ++t) {
    for (const auto& d : dist) mean[static_cast<std::size_t>(t)] += d[static_cast<std::size_t>(t)];
    mean[static_cast<std::size_t>(t)] /= n_episodes;
  }
  double worst_drop = 0.0;
  for (std::size_t t = 1; t < mean.size(); ++t) worst_drop = std::max(worst_drop, mean[t - 1] - mean[t]);
  const bool flee_ok = contact_horizon >= 25 && worst_drop <= 0.0;
  note(fmt("sheep flight: %d episodes, %d steps before the first wall contact, mean distance "
           "%.3f -> %.3f m, largest step decrease %.3g m",
           n_episodes, contact_horizon, mean.front(), mean.back(), worst_drop));

  // Closed form with noise off.
  SheepParams sp;
  sp.noise_sigma = 0.0;
  sp.a_max = 1e9;
  Rng rng(31337);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const int n_herd = 1 + static_cast<int>(rng.uniform() * 9.0);
    const int n_dogs = static_cast<int>(rng.uniform() * 3.0);
    std::vector<RigidBody> herd(static_cast<std::size_t>(n_herd)), dogs(static_cast<std::size_t>(n_dogs));
    for (RigidBody& b : herd) b.pos = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    for (RigidBody& b : dogs) b.pos = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    std::vector<Vec2> hp, dp, acc(herd.size());
    for (const RigidBody& b : herd) hp.push_back(b.pos);
    for (const RigidBody& b : dogs) dp.push_back(b.pos);
    herd_policy(hp, dp, sp, rng, acc);
    double cx = 0.0, cy = 0.0;
    for (const RigidBody& b : herd) {
      cx += b.pos.x;
      cy += b.pos.y;
    }
    cx /= n_herd;
    cy /= n_herd;
    for (std::size_t k = 0; k < herd.size(); ++k) {
      double ax = sp.k_cohere * (cx - herd[k].pos.x);
      double ay = sp.k_cohere * (cy - herd[k].pos.y);
      for (const RigidBody& d : dogs) {
        const double dx = herd[k].pos.x - d.pos.x;
        const double dy = herd[k].pos.y - d.pos.y;
        const double r = std::sqrt(dx * dx + dy * dy);
        if (r <= 0.0 || r >= sp.sense_radius) continue;
        const double mag = sp.k_repulse * (1.0 / r - 1.0 / sp.sense_radius);
        ax += mag * dx / r;
        ay += mag * dy / r;
      }
      const Vec2 single = sheep_policy(herd[k], dogs, herd, sp, rng);
      worst = std::max({worst, std::abs(single.x - ax), std::abs(single.y - ay),
                        std::abs(acc[k].x - ax), std::abs(acc[k].y - ay)});
    }
  }
  const bool closed_ok = worst <= 1e-12;
  note(fmt("closed form: 2000 random herds, max |a - a_closed| %.3g (tol 1e-12)", worst));

  // Defender positioning in a static scene.
  const Task fb(TaskId::Football2v1, cfg);
  double worst_err = 0.0;
  for (int ep = 0; ep < 20; ++ep) {
    EpisodeState st;
    Rng r2(derive_seed(8080, static_cast<std::uint64_t>(ep)));
    fb.reset(st, r2);
    RigidBody& ball = st.world.bodies[static_cast<std::size_t>(fb.roster().ball)];
    const Vec2 mid = 0.5 * (fb.geometry().goal_pos + fb.geometry().goal_neg);
    ball.pos = mid + Vec2{r2.uniform(-1.0, 2.5), r2.uniform(-1.5, 1.5)};
    st.prev = st.world;
    std::vector<VelocityCommand> cmds(2);
    std::vector<double> rewards(2);
    for (int t = 0; t < 250; ++t) fb.step(st, cmds, rewards);
    const RigidBody& def = st.world.bodies[static_cast<std::size_t>(fb.roster().defender)];
    const Vec2 target =
        defender_target(st.world.bodies[static_cast<std::size_t>(fb.roster().ball)].pos,
                        fb.geometry().goal_pos);
    worst_err = std::max(worst_err, norm(def.pos - target));
  }
  const bool defender_ok = worst_err <= 0.1;
  note(fmt("defender: 20 static scenes, max error to the ball-goal midpoint after 5 s %.4f m "
           "(tol 0.1)",
           worst_err));

  verdict(flee_ok && closed_ok && defender_ok, "npc_behavior",
          fmt("flight %s, closed form %.3g, defender error %.4f m", flee_ok ? "ok" : "failed", worst,
              worst_err));
}

// ---------------------------------------------------------------------------
// Throughput

void throughput() {
  const EnvConfig cfg;
  const PolicySpec random = parse_policy("random");
  const std::vector<TaskId> tasks = {TaskId::NarrowGate, TaskId::ClimbSeesaw, TaskId::SheepdogEasy};
  const std::vector<int> counts = {500, 1000};
  std::map<std::pair<int, int>, BenchResult> res;
  for (std::size_t t = 0; t < tasks.size(); ++t)
    for (std::size_t c = 0; c < counts.size(); ++c)
      res[{static_cast<int>(t), static_cast<int>(c)}] =
          bench(tasks[t], cfg, counts[c], 300, random, 5, default_workers(), 0);
  note(fmt("agent-steps/s, mean ± std over 5 trials, random policy, %d workers",
           res.begin()->second.n_workers));
  std::string head = fmt("%-8s", "envs");
  for (TaskId t : tasks) head += fmt("%-26s", std::string(task_name(t)).c_str());
  note(head);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::string row = fmt("%-8d", counts[c]);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const BenchResult& r = res[{static_cast<int>(t), static_cast<int>(c)}];
      row += fmt("%-26s", fmt("%.0f ± %.0f", r.mean, r.stddev).c_str());
    }
    note(row);
  }
  const double at500 = res[{0, 0}].mean;
  const double at1000 = res[{0, 1}].mean;
  verdict(at500 >= 50000.0 && at1000 > at500, "throughput",
          fmt("narrow_gate %.0f agent-steps/s at 500 envs (target >= 50000), %.0f at 1000 envs "
              "(must exceed the 500-env figure); %u hardware threads",
              at500, at1000, std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------
// Reward taxonomy

void taxonomy() {
  EnvConfig cfg;
  EnvBatch batch(TaskId::NarrowGate, cfg, 1, 1, 1);
  const PolicySpec policy = parse_policy("scripted:narrow_gate_solver");
  BatchPolicy pol(policy, batch);
  std::stringstream file;
  Outcome outcome = Outcome::None;
  {
    TrajectoryWriter writer(file, batch, policy, 500);
    batch.reset();
    writer.flush();
    std::vector<double> actions(static_cast<std::size_t>(batch.n_agents() * 3));
    for (int s = 0; s < 500 && outcome == Outcome::None; ++s) {
      pol.act(batch, actions);
      batch.step(actions);
      writer.flush();
      if (batch.dones()[0]) outcome = batch.info(0).outcome;
    }
  }
  const ReplayReport r = replay_trajectory(file);
  const double state = r.state_return[0];
  const double change = r.change_return[0];
  verdict(outcome == Outcome::Success && r.ok() && state > change, "reward_taxonomy",
          fmt("successful narrow_gate episode (%s): cumulative state-based %.4f vs change-based "
              "%.4f",
              std::string(to_string(outcome)).c_str(), state, change));
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only(argv + 1, argv + argc);
  auto want = [&](const char* name) {
    return only.empty() || std::find(only.begin(), only.end(), name) != only.end();
  };
  std::printf("acceptance suite (%s kernels, %d workers)\n",
              std::string(kernels::active().name).c_str(), default_workers());
  if (want("reward_oracle")) reward_oracle();
  if (want("physics")) physics_suite();
  if (want("determinism")) determinism();
  if (want("scripted_solvability")) scripted_solvability();
  if (want("npc_behavior")) npc_behavior();
  if (want("throughput")) throughput();
  if (want("reward_taxonomy")) taxonomy();
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
