#include "mqe/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include <json.hpp>

#include "mqe/trajectory.hpp"

namespace mqe {
namespace {

using nlohmann::json;
using P2 = std::array<double, 2>;
using Body = std::array<double, 7>;  // x, y, yaw, vx, vy, w, z

double num(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

P2 p2(const json& j) { return {num(j.at(0)), num(j.at(1))}; }

double dist(double dx, double dy) { return std::sqrt(dx * dx + dy * dy); }
double dist(const Body& b, const P2& p) { return dist(b[0] - p[0], b[1] - p[1]); }
double dist(const Body& a, const Body& b) { return dist(a[0] - b[0], a[1] - b[1]); }

struct Term {
  std::string name;
  bool state_based = true;
  double scale = 1.0;
  double exponent = 1.0;
  std::optional<P2> clip;

  double shape(double x) const {
    if (clip) x = std::min(std::max(x, (*clip)[0]), (*clip)[1]);
    if (exponent == 1.0) return x;
    if (exponent == 2.0) return x * x;
    return std::pow(x, exponent);
  }
};

struct Model {
  std::string task;
  bool collaborative = true;
  int n_envs = 0;
  int n_agents = 0;
  int episode_len = 0;
  std::vector<int> team_of;
  std::vector<int> agents, sheep;
  int box = -1, ball = -1, cylinder = -1;
  int n_dynamic = 0;
  P2 gate{}, goal_pos{}, goal_neg{}, ring_center{}, bridge_near{}, bridge_far{};
  P2 door_a{}, door_b{};
  double gate_hw = 0, goal_hw = 0, ring_r = 0, base_neg = 0, base_pos = 0;
  double door_clear = 0, platform_x = 0, platform_h = 0, r = 0;
  bool has_seesaw = false;
  double ss_near = 0, ss_far = 0, ss_y = 0, ss_hw = 0;
  std::vector<Term> terms;
};

Model read_header(const json& h) {
  if (!h.contains("schema") || h["schema"] != kTrajectorySchema) {
    throw TrajectoryError(1, std::string("expected schema ") + kTrajectorySchema);
  }
  Model m;
  m.task = h.at("task").get<std::string>();
  m.collaborative = h.at("collaborative").get<bool>();
  m.n_envs = h.at("n_envs").get<int>();
  m.n_agents = h.at("n_agents").get<int>();
  m.episode_len = h.at("episode_len").get<int>();
  m.team_of = h.at("team_of").get<std::vector<int>>();
  const json& ro = h.at("roster");
  m.agents = ro.at("agents").get<std::vector<int>>();
  m.sheep = ro.at("sheep").get<std::vector<int>>();
  m.box = ro.at("box").get<int>();
  m.ball = ro.at("ball").get<int>();
  m.cylinder = ro.at("cylinder").get<int>();
  m.n_dynamic = ro.at("n_dynamic").get<int>();
  const json& g = h.at("geometry");
  m.gate = p2(g.at("gate"));
  m.gate_hw = num(g.at("gate_half_width"));
  m.goal_pos = p2(g.at("goal_pos"));
  m.goal_neg = p2(g.at("goal_neg"));
  m.goal_hw = num(g.at("goal_half_width"));
  m.ring_center = p2(g.at("ring_center"));
  m.ring_r = num(g.at("ring_radius"));
  m.base_neg = num(g.at("baseline_neg"));
  m.base_pos = num(g.at("baseline_pos"));
  m.bridge_near = p2(g.at("bridge_near"));
  m.bridge_far = p2(g.at("bridge_far"));
  m.door_a = p2(g.at("door_target_a"));
  m.door_b = p2(g.at("door_target_b"));
  m.door_clear = num(g.at("door_clear"));
  m.platform_x = num(g.at("platform_x"));
  m.platform_h = num(g.at("platform_height"));
  m.r = num(g.at("robot_radius"));
  if (g.contains("seesaw")) {
    const json& s = g["seesaw"];
    m.has_seesaw = true;
    m.ss_near = num(s.at("x_near"));
    m.ss_far = num(s.at("x_far"));
    m.ss_y = num(s.at("y_center"));
    m.ss_hw = num(s.at("half_width"));
  }
  for (const json& t : h.at("terms")) {
    Term term;
    term.name = t.at("name").get<std::string>();
    term.state_based = t.at("kind").get<std::string>() == "state";
    term.scale = num(t.at("scale"));
    term.exponent = num(t.at("exponent"));
    if (!t.at("clip").is_null()) term.clip = p2(t["clip"]);
    m.terms.push_back(term);
  }
  if (m.n_envs < 1 || m.n_agents < 1 || static_cast<int>(m.team_of.size()) != m.n_agents ||
      static_cast<int>(m.agents.size()) != m.n_agents) {
    throw TrajectoryError(1, "inconsistent header sizes");
  }
  return m;
}

struct EnvTrack {
  bool live = false;
  int step = 0;
  std::vector<Body> bodies;
  std::vector<std::uint8_t> crossed;  // by body id
  std::vector<std::uint8_t> reached;  // by agent index
  int goal = 0;
};

struct Observed {
  std::vector<Body> bodies;
  int collisions = 0;
  std::vector<int> fell, fallen;
};

// Competitive result from team A's view: 1, -1, 0, or 2 for both at once.
int contest(const Model& m, const Observed& o, int goal) {
  const auto& B = o.bodies;
  auto team_any = [&](int team, auto&& pred) {
    for (int i = 0; i < m.n_agents; ++i)
      if (m.team_of[i] == team && !o.fallen[i] && pred(B[m.agents[i]])) return true;
    return false;
  };
  bool a = false, b = false;
  if (m.task == "push_cylinder") {
    a = B[m.cylinder][0] > m.base_pos;
    b = B[m.cylinder][0] < m.base_neg;
  } else if (m.task == "revolving_door") {
    a = team_any(0, [&](const Body& x) { return x[0] > m.gate[0] + m.door_clear; });
    b = team_any(1, [&](const Body& x) { return x[0] < m.gate[0] - m.door_clear; });
  } else if (m.task == "sumo") {
    for (int i = 0; i < m.n_agents; ++i) {
      const bool out = o.fallen[i] || dist(B[m.agents[i]], m.ring_center) > m.ring_r;
      if (!out) continue;
      if (m.team_of[i] == 1) a = true;
      else b = true;
    }
  } else if (m.task == "traverse_bridge") {
    a = team_any(0, [&](const Body& x) { return x[0] >= m.bridge_far[0] + m.r; });
    b = team_any(1, [&](const Body& x) { return x[0] <= m.bridge_near[0] - m.r; });
  } else if (m.task == "football_1v1" || m.task == "football_2v2") {
    a = goal == 1;
    b = goal == -1;
  }
  bool standing[2] = {false, false};
  for (int i = 0; i < m.n_agents; ++i)
    if (!o.fallen[i]) standing[m.team_of[i]] = true;
  if (!standing[1]) a = true;
  if (!standing[0]) b = true;
  return a && b ? 2 : a ? 1 : b ? -1 : 0;
}

struct Eval {
  std::vector<double> terms;
  double total = 0.0;
  bool done = false;
  std::string outcome = "none";
};

Eval evaluate(const Model& m, EnvTrack& env, const Observed& o) {
  const std::vector<Body>& prev = env.bodies;
  const std::vector<Body>& cur = o.bodies;

  auto crossed_now = [&](int id) {
    if (env.crossed[static_cast<std::size_t>(id)]) return 0;
    const bool hit = prev[id][0] <= m.gate[0] && cur[id][0] > m.gate[0] &&
                     std::abs(cur[id][1] - m.gate[1]) <= m.gate_hw;
    if (hit) env.crossed[static_cast<std::size_t>(id)] = 1;
    return hit ? 1 : 0;
  };
  std::vector<int> tracked;
  if (m.task == "narrow_gate") tracked = m.agents;
  else if (m.task == "sheepdog_easy" || m.task == "sheepdog_hard") tracked = m.sheep;
  else if (m.task == "push_box") tracked = {m.box};
  int crossings = 0;
  for (int id : tracked) crossings += crossed_now(id);

  int arrivals = 0;
  if (m.task == "climb_seesaw") {
    for (int i = 0; i < m.n_agents; ++i) {
      const Body& x = cur[m.agents[i]];
      if (env.reached[i] || o.fallen[i]) continue;
      if (x[0] >= m.platform_x + m.r && x[6] >= m.platform_h - 0.05) {
        env.reached[i] = 1;
        ++arrivals;
      }
    }
  }

  int scored = 0;
  if (m.ball >= 0 && env.goal == 0) {
    const Body& b = cur[m.ball];
    if (b[0] >= m.goal_pos[0] && std::abs(b[1] - m.goal_pos[1]) <= m.goal_hw) scored = 1;
    if (b[0] <= m.goal_neg[0] && std::abs(b[1] - m.goal_neg[1]) <= m.goal_hw) scored = -1;
    env.goal = scored;
  }

  auto progress = [&](const Body& x) {
    const bool beside = std::abs(x[1] - m.ss_y) > m.ss_hw;
    if (beside && x[0] < m.ss_far) return 0.0;
    return std::min(std::max(x[0] - m.ss_near, 0.0), m.ss_far - m.ss_near);
  };
  auto plank_gap = [&](const Body& x) {
    double dx = 0.0;
    if (x[0] < m.ss_near) dx = m.ss_near - x[0];
    if (x[0] > m.ss_far) dx = x[0] - m.ss_far;
    const double dy = std::max(std::abs(x[1] - m.ss_y) - m.ss_hw, 0.0);
    return std::sqrt(dx * dx + dy * dy);
  };
  auto team_total = [&](const std::vector<Body>& bodies, int team, auto&& f) {
    double s = 0.0;
    for (int i = 0; i < m.n_agents; ++i)
      if (m.team_of[i] == team) s += f(bodies[m.agents[i]]);
    return s;
  };

  Eval ev;
  for (const Term& t : m.terms) {
    const std::string& n = t.name;
    double v = 0.0;
    if (n == "gate_crossing" || n == "sheep_crossing" || n == "box_crossing") {
      v = crossings;
    } else if (n == "gate_distance") {
      for (int id : m.agents) v += t.shape(dist(prev[id], m.gate) - dist(cur[id], m.gate));
    } else if (n == "sheep_gate_distance") {
      for (int id : m.sheep) v += t.shape(dist(prev[id], m.gate) - dist(cur[id], m.gate));
    } else if (n == "box_gate_distance") {
      v = t.shape(dist(prev[m.box], m.gate) - dist(cur[m.box], m.gate));
    } else if (n == "agent_spacing") {
      for (int i = 0; i < m.n_agents; ++i)
        for (int j = i + 1; j < m.n_agents; ++j)
          v += t.shape(dist(cur[m.agents[i]], cur[m.agents[j]]));
    } else if (n == "collision") {
      v = o.collisions;
    } else if (n == "destination") {
      v = arrivals;
    } else if (n == "height") {
      for (int id : m.agents) v += t.shape(std::max(cur[id][6], 0.0));
    } else if (n == "seesaw_progress") {
      for (int id : m.agents) v += t.shape(progress(cur[id]) - progress(prev[id]));
    } else if (n == "seesaw_distance") {
      for (int id : m.agents) v += t.shape(plank_gap(cur[id]));
    } else if (n == "fall") {
      for (int f : o.fell) v += f;
    } else if (n == "sheep_gate_proximity") {
      for (int id : m.sheep) v += t.shape(std::exp(-dist(cur[id], m.gate)));
    } else if (n == "goal") {
      v = scored == 1 ? 1.0 : 0.0;
    } else if (n == "ball_goal_proximity") {
      v = t.shape(std::exp(-dist(cur[m.ball], m.goal_pos)));
    } else if (n == "win") {
      const int c = contest(m, o, env.goal);
      v = c == 1 ? 1.0 : c == -1 ? -1.0 : 0.0;
    } else if (n == "cylinder_advance") {
      v = t.shape(cur[m.cylinder][0] - prev[m.cylinder][0]);
    } else if (n == "ball_advance") {
      v = t.shape(cur[m.ball][0] - prev[m.ball][0]);
    } else if (n == "door_progress") {
      auto f = [&](const std::vector<Body>& s) {
        return -team_total(s, 0, [&](const Body& x) { return dist(x, m.door_a); }) +
               team_total(s, 1, [&](const Body& x) { return dist(x, m.door_b); });
      };
      v = t.shape(f(cur) - f(prev));
    } else if (n == "ring_margin") {
      auto f = [&](const std::vector<Body>& s) {
        return team_total(s, 1, [&](const Body& x) { return dist(x, m.ring_center); }) -
               team_total(s, 0, [&](const Body& x) { return dist(x, m.ring_center); });
      };
      v = t.shape(f(cur) - f(prev));
    } else if (n == "bridge_progress") {
      auto f = [&](const std::vector<Body>& s) {
        return team_total(s, 0, [](const Body& x) { return x[0]; }) +
               team_total(s, 1, [](const Body& x) { return x[0]; });
      };
      v = t.shape(f(cur) - f(prev));
    } else {
      throw std::runtime_error("oracle: unknown reward term " + n);
    }
    ev.terms.push_back(t.scale * v);
    ev.total += t.scale * v;
  }

  const int step = env.step + 1;
  const bool everyone_fell =
      std::all_of(o.fallen.begin(), o.fallen.end(), [](int f) { return f != 0; });
  if (m.collaborative) {
    if (!tracked.empty() && std::all_of(tracked.begin(), tracked.end(), [&](int id) {
          return env.crossed[static_cast<std::size_t>(id)] != 0;
        })) {
      ev.outcome = "success";
    } else if (m.task == "climb_seesaw" &&
               std::any_of(env.reached.begin(), env.reached.end(), [](auto f) { return f; })) {
      ev.outcome = "success";
    } else if (m.task == "football_2v1" && env.goal != 0) {
      ev.outcome = env.goal == 1 ? "goal" : "own_goal";
    } else if (everyone_fell) {
      ev.outcome = "fallen";
    }
  } else {
    const int c = contest(m, o, env.goal);
    if (c == 1) ev.outcome = "team_a_win";
    if (c == -1) ev.outcome = "team_b_win";
    if (c == 2) ev.outcome = "draw";
  }
  if (ev.outcome == "none" && step >= m.episode_len) ev.outcome = "timeout";
  ev.done = ev.outcome != "none";
  return ev;
}

std::vector<Body> read_bodies(const json& j, int n_dynamic, std::size_t line) {
  const json& arr = j.at("bodies");
  if (!arr.is_array() || static_cast<int>(arr.size()) != n_dynamic) {
    throw TrajectoryError(line, "expected " + std::to_string(n_dynamic) + " bodies");
  }
  std::vector<Body> out(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i].size() != out[i].size()) throw TrajectoryError(line, "body with wrong field count");
    for (std::size_t k = 0; k < out[i].size(); ++k) out[i][k] = num(arr[i][k]);
  }
  return out;
}

std::vector<int> read_flags(const json& j, const char* key, int n, std::size_t line) {
  std::vector<int> v = j.at(key).get<std::vector<int>>();
  if (static_cast<int>(v.size()) != n) throw TrajectoryError(line, std::string("bad ") + key + " size");
  return v;
}

}  // namespace

ReplayReport replay_trajectory(std::istream& in) {
  ReplayReport rep;
  std::string text;
  std::size_t line = 0;
  auto parse = [&]() -> json {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw TrajectoryError(line, std::string("malformed record: ") + e.what());
    }
  };

  if (!std::getline(in, text)) throw TrajectoryError(1, "empty trajectory");
  line = 1;
  Model m;
  try {
    m = read_header(parse());
  } catch (const json::exception& e) {
    throw TrajectoryError(1, std::string("bad header: ") + e.what());
  }
  rep.task = m.task;
  rep.n_envs = m.n_envs;
  rep.n_agents = m.n_agents;
  rep.state_return.assign(static_cast<std::size_t>(m.n_envs), 0.0);
  rep.change_return.assign(static_cast<std::size_t>(m.n_envs), 0.0);
  std::vector<EnvTrack> envs(static_cast<std::size_t>(m.n_envs));

  auto issue = [&](int env, int step, std::string what) {
    if (rep.issues.size() < 20) rep.issues.push_back({line, env, step, std::move(what)});
  };
  auto note = [&](double d, int env, int step, const std::string& field) {
    if (!(d <= rep.max_discrepancy)) {
      rep.max_discrepancy = std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
      rep.worst_env = env;
      rep.worst_step = step;
      rep.worst_line = line;
      rep.worst_field = field;
    }
  };

  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    const json j = parse();
    try {
      const std::string type = j.at("type").get<std::string>();
      const int e = j.at("env").get<int>();
      if (e < 0 || e >= m.n_envs) throw TrajectoryError(line, "env out of range");
      EnvTrack& env = envs[static_cast<std::size_t>(e)];
      if (type == "reset") {
        env.live = true;
        env.step = 0;
        env.bodies = read_bodies(j, m.n_dynamic, line);
        env.crossed.assign(static_cast<std::size_t>(m.n_dynamic), 0);
        env.reached.assign(static_cast<std::size_t>(m.n_agents), 0);
        env.goal = 0;
        continue;
      }
      if (type != "step") throw TrajectoryError(line, "unknown record type " + type);
      const int step = j.at("step").get<int>();
      if (!env.live) {
        issue(e, step, "step record without a preceding reset");
        continue;
      }
      Observed o;
      o.bodies = read_bodies(j, m.n_dynamic, line);
      o.collisions = j.at("collisions").get<int>();
      o.fell = read_flags(j, "fell", m.n_agents, line);
      o.fallen = read_flags(j, "fallen", m.n_agents, line);
      const std::vector<double> rewards = j.at("rewards").get<std::vector<double>>();
      std::vector<double> terms;
      for (const json& t : j.at("terms")) terms.push_back(num(t));
      if (static_cast<int>(rewards.size()) != m.n_agents || terms.size() != m.terms.size()) {
        throw TrajectoryError(line, "reward or term vector has the wrong size");
      }

      const Eval ev = evaluate(m, env, o);
      ++rep.transitions;
      if (step != env.step + 1) issue(e, step, "step counter expected " + std::to_string(env.step + 1));
      for (int i = 0; i < m.n_agents; ++i) {
        const double want = m.team_of[i] == 0 ? ev.total : -ev.total;
        note(std::abs(rewards[static_cast<std::size_t>(i)] - want), e, step,
             "rewards[" + std::to_string(i) + "]");
      }
      for (std::size_t k = 0; k < terms.size(); ++k) {
        note(std::abs(terms[k] - ev.terms[k]), e, step, "terms." + m.terms[k].name);
        (m.terms[k].state_based ? rep.state_return : rep.change_return)[static_cast<std::size_t>(e)] +=
            ev.terms[k];
      }
      const bool done = j.at("done").get<bool>();
      const std::string outcome = j.at("outcome").get<std::string>();
      if (done != ev.done || outcome != ev.outcome) {
        ++rep.termination_mismatches;
        issue(e, step, "termination recorded " + std::string(done ? "done/" : "running/") + outcome +
                           ", oracle " + (ev.done ? "done/" : "running/") + ev.outcome);
      }
      env.step = step;
      env.bodies = std::move(o.bodies);
      if (done) {
        ++rep.episodes;
        env.live = false;
      }
    } catch (const json::exception& ex) {
      throw TrajectoryError(line, std::string("malformed record: ") + ex.what());
    }
  }
  rep.lines = line;
  return rep;
}

ReplayReport replay_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return replay_trajectory(in);
}

}  // namespace mqe
