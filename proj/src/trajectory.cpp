#include "mqe/trajectory.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

namespace mqe {
namespace {

using nlohmann::json;

void put(std::string& s, double v) {
  if (!std::isfinite(v)) {
    s += "null";
    return;
  }
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  s.append(buf, r.ptr);
}

void put(std::string& s, long long v) { s += std::to_string(v); }

template <class T, class F>
void put_array(std::string& s, const std::vector<T>& v, F&& f) {
  s += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    f(v[i]);
  }
  s += ']';
}

void put_bodies(std::string& s, const Task& task, const WorldState& w) {
  s += "\"bodies\":[";
  for (int i = 0; i < task.roster().n_dynamic; ++i) {
    const RigidBody& b = w.bodies[static_cast<std::size_t>(i)];
    if (i) s += ',';
    s += '[';
    const double f[kBodyFields] = {b.pos.x, b.pos.y, b.yaw, b.vel.x, b.vel.y, b.yaw_rate, b.z};
    for (int k = 0; k < kBodyFields; ++k) {
      if (k) s += ',';
      put(s, f[k]);
    }
    s += ']';
  }
  s += "],\"joints\":";
  put_array(s, w.joints, [&](const HingeJoint& j) { put(s, j.angle); });
}

json vec(Vec2 v) { return json::array({v.x, v.y}); }

}  // namespace

std::string trajectory_header(const EnvBatch& batch, const PolicySpec& policy, int n_steps) {
  const Task& task = batch.task();
  const TaskSpec& spec = task.spec();
  const TaskGeometry& g = task.geometry();
  const Roster& ro = task.roster();

  json config = json::object();
  for (const std::string& line : [&] {
         std::vector<std::string> lines;
         const std::string text = dump_config(task.config());
         std::size_t pos = 0;
         while (pos < text.size()) {
           const std::size_t nl = text.find('\n', pos);
           lines.push_back(text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
           if (nl == std::string::npos) break;
           pos = nl + 1;
         }
         return lines;
       }()) {
    const std::size_t eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    auto trim = [](std::string v) {
      const auto lo = v.find_first_not_of(" \t");
      const auto hi = v.find_last_not_of(" \t");
      return lo == std::string::npos ? std::string() : v.substr(lo, hi - lo + 1);
    };
    config[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  json geo = {{"gate", vec(g.gate)},
              {"gate_half_width", g.gate_half_width},
              {"goal_pos", vec(g.goal_pos)},
              {"goal_neg", vec(g.goal_neg)},
              {"goal_half_width", g.goal_half_width},
              {"ring_center", vec(g.ring_center)},
              {"ring_radius", g.ring_radius},
              {"baseline_neg", g.baseline_neg},
              {"baseline_pos", g.baseline_pos},
              {"bridge_near", vec(g.bridge_near)},
              {"bridge_far", vec(g.bridge_far)},
              {"door_target_a", vec(g.door_target_a)},
              {"door_target_b", vec(g.door_target_b)},
              {"door_clear", g.door_clear},
              {"platform_x", g.platform_x},
              {"platform_height", g.platform_height},
              {"robot_radius", g.robot_radius}};
  if (g.seesaw) {
    geo["seesaw"] = {{"x_near", g.seesaw->x_near},
                     {"x_far", g.seesaw->x_far},
                     {"y_center", g.seesaw->y_center},
                     {"half_width", g.seesaw->half_width}};
  }

  json terms = json::array();
  for (const RewardTerm& t : spec.terms) {
    json jt = {{"name", t.name},
               {"kind", to_string(t.kind)},
               {"scale", t.scale},
               {"exponent", t.exponent}};
    jt["clip"] = t.clip ? json::array({(*t.clip)[0], (*t.clip)[1]}) : json(nullptr);
    terms.push_back(jt);
  }

  json h = {{"schema", kTrajectorySchema},
            {"task", spec.name},
            {"collaborative", spec.collaborative},
            {"n_envs", batch.n_envs()},
            {"n_agents", batch.n_agents()},
            {"team_of", spec.team_of},
            {"master_seed", batch.master_seed()},
            {"policy", policy.text()},
            {"n_steps", n_steps},
            {"episode_len", spec.episode_len},
            {"body_fields", json::array({"x", "y", "yaw", "vx", "vy", "yaw_rate", "z"})},
            {"roster",
             {{"agents", ro.agents},
              {"sheep", ro.sheep},
              {"box", ro.box},
              {"ball", ro.ball},
              {"cylinder", ro.cylinder},
              {"door", ro.door},
              {"defender", ro.defender},
              {"n_dynamic", ro.n_dynamic}}},
            {"geometry", geo},
            {"terms", terms},
            {"config", config}};
  return h.dump();
}

std::string reset_record(const Task& task, int env, const EpisodeState& st) {
  std::string s;
  s.reserve(64 + 140 * static_cast<std::size_t>(task.roster().n_dynamic));
  s += "{\"type\":\"reset\",\"env\":";
  put(s, static_cast<long long>(env));
  s += ',';
  put_bodies(s, task, st.world);
  s += '}';
  return s;
}

std::string step_record(const Task& task, const TransitionView& t) {
  const EpisodeState& st = t.state;
  std::string s;
  s.reserve(256 + 140 * static_cast<std::size_t>(task.roster().n_dynamic));
  s += "{\"type\":\"step\",\"env\":";
  put(s, static_cast<long long>(t.env));
  s += ",\"step\":";
  put(s, static_cast<long long>(st.step));
  s += ",\"actions\":[";
  for (std::size_t i = 0; i < t.actions.size(); ++i) {
    if (i) s += ',';
    s += '[';
    put(s, t.actions[i].vx);
    s += ',';
    put(s, t.actions[i].vy);
    s += ',';
    put(s, t.actions[i].yaw_rate);
    s += ']';
  }
  s += "],";
  put_bodies(s, task, st.world);
  s += ",\"collisions\":";
  put(s, static_cast<long long>(st.events.collisions));
  s += ",\"fell\":";
  put_array(s, st.events.fell, [&](std::uint8_t v) { s += v ? '1' : '0'; });
  s += ",\"fallen\":";
  put_array(s, st.events.fallen, [&](std::uint8_t v) { s += v ? '1' : '0'; });
  s += ",\"rewards\":[";
  for (std::size_t i = 0; i < t.rewards.size(); ++i) {
    if (i) s += ',';
    put(s, t.rewards[i]);
  }
  s += "],\"terms\":[";
  for (std::size_t i = 0; i < t.terms.size(); ++i) {
    if (i) s += ',';
    put(s, t.terms[i]);
  }
  s += "],\"done\":";
  s += t.termination.done ? "true" : "false";
  s += ",\"outcome\":\"";
  s += to_string(t.termination.outcome);
  s += "\"}";
  return s;
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out, EnvBatch& batch, const PolicySpec& policy,
                                   int n_steps)
    : out_(out), batch_(batch), buffers_(static_cast<std::size_t>(batch.n_envs())) {
  out_ << trajectory_header(batch, policy, n_steps) << '\n';
  ++lines_;
  const Task& task = batch.task();
  batch_.set_reset_hook([this, &task](int env, const EpisodeState& st) {
    std::string& b = buffers_[static_cast<std::size_t>(env)];
    b += reset_record(task, env, st);
    b += '\n';
  });
  batch_.set_transition_hook([this, &task](const TransitionView& t) {
    std::string& b = buffers_[static_cast<std::size_t>(t.env)];
    b += step_record(task, t);
    b += '\n';
  });
}

TrajectoryWriter::~TrajectoryWriter() {
  batch_.set_reset_hook(nullptr);
  batch_.set_transition_hook(nullptr);
}

void TrajectoryWriter::flush() {
  for (std::string& b : buffers_) {
    if (b.empty()) continue;
    out_ << b;
    for (char c : b) lines_ += c == '\n';
    b.clear();
  }
  out_.flush();
  if (!out_) throw Fault("trajectory: write failed");
}

}  // namespace mqe
