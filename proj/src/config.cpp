#include "mqe/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

#include "mqe/terrain.hpp"

namespace mqe {

namespace {

struct ScaleDefault {
  const char* key;
  double scale;
};

constexpr ScaleDefault kScaleDefaults[] = {
    {"narrow_gate.gate_crossing", 5.0},
    {"narrow_gate.gate_distance", 1.0},
    {"narrow_gate.agent_spacing", 0.025},
    {"narrow_gate.collision", -2.0},
    {"climb_seesaw.destination", 10.0},
    {"climb_seesaw.height", 1.0},
    {"climb_seesaw.seesaw_progress", 5.0},
    {"climb_seesaw.seesaw_distance", -0.5},
    {"climb_seesaw.collision", -2.0},
    {"climb_seesaw.fall", -2.0},
    {"climb_seesaw.agent_spacing", 0.25},
    {"sheepdog_easy.sheep_crossing", 1.0},
    {"sheepdog_easy.sheep_gate_distance", 2.0},
    {"sheepdog_hard.sheep_crossing", 1.0},
    {"sheepdog_hard.sheep_gate_proximity", 1.0},
    {"push_box.box_crossing", 1.0},
    {"push_box.box_gate_distance", 10.0},
    {"football_2v1.goal", 10.0},
    {"football_2v1.ball_goal_proximity", 3.0},
    {"push_cylinder.win", 10.0},
    {"push_cylinder.cylinder_advance", 1.0},
    {"revolving_door.win", 10.0},
    {"revolving_door.door_progress", 1.0},
    {"sumo.win", 10.0},
    {"sumo.ring_margin", 1.0},
    {"traverse_bridge.win", 10.0},
    {"traverse_bridge.bridge_progress", 1.0},
    {"football_1v1.win", 10.0},
    {"football_1v1.ball_advance", 1.0},
    {"football_2v2.win", 10.0},
    {"football_2v2.ball_advance", 1.0},
};

constexpr const char* kTaskNames[] = {
    "narrow_gate",    "climb_seesaw", "sheepdog_easy", "sheepdog_hard",
    "push_box",       "football_2v1", "push_cylinder", "revolving_door",
    "sumo",           "traverse_bridge", "football_1v1", "football_2v2",
};

using FieldRef = std::variant<double*, int*, bool*>;

struct Field {
  const char* key;
  const char* description;
  std::function<FieldRef(EnvConfig&)> ref;
};

#define MQE_FIELD(key, desc, expr) \
  Field { key, desc, [](EnvConfig& c) -> FieldRef { return &(expr); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      MQE_FIELD("physics.gravity", "gravity (m/s^2), shared with locomotion", c.physics.gravity),
      MQE_FIELD("physics.substeps", "physics substeps per control step", c.physics.substeps),
      MQE_FIELD("physics.solver_iterations", "sequential impulse iterations",
                c.physics.solver_iterations),
      MQE_FIELD("physics.penetration_slop", "allowed overlap before projection (m)",
                c.physics.penetration_slop),
      MQE_FIELD("physics.projection_passes", "end-of-step overlap projection passes",
                c.physics.projection_passes),
      MQE_FIELD("physics.speculative_margin", "contact detection margin (m)",
                c.physics.speculative_margin),
      MQE_FIELD("physics.max_step_height", "highest ledge a body can step onto (m)",
                c.physics.max_step_height),
      MQE_FIELD("physics.level_separation", "height gap above which bodies do not collide (m)",
                c.physics.level_separation),
      MQE_FIELD("physics.seesaw_quasi_static_speed", "plank speed below which it is held (rad/s)",
                c.physics.seesaw_quasi_static_speed),
      MQE_FIELD("physics.seesaw_hold_torque", "plank torque the hinge absorbs at rest (N*m)",
                c.physics.seesaw_hold_torque),
      MQE_FIELD("locomotion.vx_max", "forward command bound (m/s)", c.locomotion.bounds.vx_max),
      MQE_FIELD("locomotion.vy_max", "lateral command bound (m/s)", c.locomotion.bounds.vy_max),
      MQE_FIELD("locomotion.yaw_max", "yaw rate bound (rad/s)", c.locomotion.bounds.yaw_max),
      MQE_FIELD("locomotion.foot_mu", "foot friction in F_max", c.locomotion.foot_mu),
      MQE_FIELD("locomotion.f_max_factor", "F_max = factor * m * g * foot_mu",
                c.locomotion.f_max_factor),
      MQE_FIELD("locomotion.topple_impulse", "toppling impulse threshold (N*s)",
                c.locomotion.topple_impulse),
      MQE_FIELD("locomotion.topple_window", "toppling impulse window (s)",
                c.locomotion.topple_window),
      MQE_FIELD("locomotion.fall_drop", "support drop that counts as a fall (m)",
                c.locomotion.fall_drop),
      MQE_FIELD("sheep.sense_radius", "dog sensing radius (m)", c.sheep.sense_radius),
      MQE_FIELD("sheep.k_repulse", "repulsion gain (m^2/s^2)", c.sheep.k_repulse),
      MQE_FIELD("sheep.k_cohere", "cohesion gain (1/s^2)", c.sheep.k_cohere),
      MQE_FIELD("sheep.noise_sigma", "acceleration noise std (m/s^2)", c.sheep.noise_sigma),
      MQE_FIELD("sheep.v_max", "speed cap (m/s)", c.sheep.v_max),
      MQE_FIELD("sheep.a_max", "acceleration cap (m/s^2)", c.sheep.a_max),
      MQE_FIELD("bodies.robot_radius", "robot disc radius (m)", c.bodies.robot_radius),
      MQE_FIELD("bodies.robot_mass", "robot mass (kg)", c.bodies.robot_mass),
      MQE_FIELD("bodies.box_half", "box half side (m)", c.bodies.box_half),
      MQE_FIELD("bodies.box_mass", "box mass (kg)", c.bodies.box_mass),
      MQE_FIELD("bodies.box_mu", "box friction", c.bodies.box_mu),
      MQE_FIELD("bodies.ball_radius", "football radius (m)", c.bodies.ball_radius),
      MQE_FIELD("bodies.ball_mass", "football mass (kg)", c.bodies.ball_mass),
      MQE_FIELD("bodies.ball_mu", "football friction", c.bodies.ball_mu),
      MQE_FIELD("bodies.cylinder_radius", "cylinder radius (m)", c.bodies.cylinder_radius),
      MQE_FIELD("bodies.cylinder_mass", "cylinder mass (kg)", c.bodies.cylinder_mass),
      MQE_FIELD("bodies.cylinder_mu", "cylinder friction", c.bodies.cylinder_mu),
      MQE_FIELD("bodies.sheep_radius", "sheep radius (m)", c.bodies.sheep_radius),
      MQE_FIELD("bodies.sheep_mass", "sheep mass (kg)", c.bodies.sheep_mass),
      MQE_FIELD("bodies.sheep_mu", "sheep friction", c.bodies.sheep_mu),
      MQE_FIELD("bodies.door_inertia", "revolving door inertia (kg*m^2)", c.bodies.door_inertia),
      MQE_FIELD("bodies.door_damping", "revolving door damping (N*m*s/rad)",
                c.bodies.door_damping),
      MQE_FIELD("bodies.plank_inertia", "seesaw plank inertia (kg*m^2)", c.bodies.plank_inertia),
      MQE_FIELD("bodies.plank_damping", "seesaw damping (N*m*s/rad)", c.bodies.plank_damping),
      MQE_FIELD("bodies.plank_counterweight_arm", "unloaded plank torque as robot weight arm (m)",
                c.bodies.plank_counterweight_arm),
      MQE_FIELD("terrain.room_length", "flat room length (m)", c.terrain.room_length),
      MQE_FIELD("terrain.room_width", "track width (m)", c.terrain.room_width),
      MQE_FIELD("terrain.gate_width", "narrow gate width (m)", c.terrain.gate_width),
      MQE_FIELD("terrain.sheep_gate_width", "sheepdog gate width (m)", c.terrain.sheep_gate_width),
      MQE_FIELD("terrain.box_gate_width", "push box gate width (m)", c.terrain.box_gate_width),
      MQE_FIELD("terrain.door_gate_width", "revolving door opening (m)", c.terrain.door_gate_width),
      MQE_FIELD("terrain.plank_len", "seesaw plank length (m)", c.terrain.plank_len),
      MQE_FIELD("terrain.plank_width", "seesaw plank width (m)", c.terrain.plank_width),
      MQE_FIELD("terrain.platform_height", "seesaw platform height (m)",
                c.terrain.platform_height),
      MQE_FIELD("terrain.bridge_width", "bridge deck width (m)", c.terrain.bridge_width),
      MQE_FIELD("terrain.bridge_length", "bridge length (m)", c.terrain.bridge_length),
      MQE_FIELD("terrain.deck_height", "bridge deck height (m)", c.terrain.deck_height),
      MQE_FIELD("terrain.ring_radius", "sumo ring radius (m)", c.terrain.ring_radius),
      MQE_FIELD("terrain.ring_height", "sumo platform height (m)", c.terrain.ring_height),
      MQE_FIELD("terrain.pitch_length", "football pitch length (m)", c.terrain.pitch_length),
      MQE_FIELD("terrain.pitch_width", "football pitch width (m)", c.terrain.pitch_width),
      MQE_FIELD("terrain.goal_width", "football goal width (m)", c.terrain.goal_width),
      MQE_FIELD("terrain.cylinder_arena_w", "push cylinder arena length (m)",
                c.terrain.cylinder_arena_w),
      MQE_FIELD("terrain.cylinder_arena_h", "push cylinder arena width (m)",
                c.terrain.cylinder_arena_h),
      MQE_FIELD("terrain.track_spacing", "grid spacing between env tracks (m)",
                c.terrain.track_spacing),
      MQE_FIELD("task.episode_len", "episode length in control steps", c.task.episode_len),
      MQE_FIELD("task.football_episode_len", "football episode length in control steps",
                c.task.football_episode_len),
      MQE_FIELD("task.spacing_clip", "upper clip of inter-agent distance (m)",
                c.task.spacing_clip),
      MQE_FIELD("task.collision_impulse", "robot-robot impulse counted as a collision (N*s)",
                c.task.collision_impulse),
      MQE_FIELD("task.defender_speed", "football defender speed (m/s)", c.task.defender_speed),
  };
  return f;
}

#undef MQE_FIELD

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("invalid number for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  int v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid integer for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return v;
}

bool known_task(std::string_view name) {
  for (const char* t : kTaskNames)
    if (name == t) return true;
  return false;
}

void validate(const EnvConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid configuration: ") + what);
  };
  require(c.physics.gravity > 0.0, "physics.gravity must be > 0");
  require(c.physics.substeps >= 1, "physics.substeps must be >= 1");
  require(c.physics.solver_iterations >= 1, "physics.solver_iterations must be >= 1");
  require(c.physics.projection_passes >= 0, "physics.projection_passes must be >= 0");
  require(c.locomotion.bounds.vx_max > 0.0 && c.locomotion.bounds.vy_max >= 0.0 &&
              c.locomotion.bounds.yaw_max >= 0.0,
          "command bounds must be non-negative (vx_max > 0)");
  require(c.locomotion.f_max_factor > 0.0 && c.locomotion.foot_mu > 0.0,
          "F_max factor and foot_mu must be > 0");
  require(c.locomotion.topple_window > 0.0, "locomotion.topple_window must be > 0");
  require(c.sheep.sense_radius >= 0.0 && c.sheep.k_repulse >= 0.0 && c.sheep.k_cohere >= 0.0 &&
              c.sheep.noise_sigma >= 0.0 && c.sheep.a_max >= 0.0,
          "sheep parameters must be non-negative");
  require(c.sheep.v_max > 0.0, "sheep.v_max must be > 0");
  require(c.task.defender_speed > 0.0, "task.defender_speed must be > 0");
  require(c.task.episode_len >= 1 && c.task.football_episode_len >= 1,
          "episode lengths must be >= 1");
  require(c.bodies.robot_radius > 0.0 && c.bodies.robot_mass > 0.0, "robot size and mass > 0");
  require(c.bodies.box_mass > 0.0 && c.bodies.ball_mass > 0.0 && c.bodies.cylinder_mass > 0.0 &&
              c.bodies.sheep_mass > 0.0,
          "object masses must be > 0");
}

}  // namespace

EnvConfig::EnvConfig() {
  for (const ScaleDefault& s : kScaleDefaults) reward_scales[s.key] = s.scale;
}

std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
    if (back == v) break;
  }
  return buf;
}

std::vector<ConfigKey> config_keys() {
  std::vector<ConfigKey> out;
  for (const Field& f : fields()) out.push_back({f.key, f.description});
  EnvConfig defaults;
  for (const auto& [k, v] : defaults.reward_scales) {
    out.push_back({"reward." + k, "reward term scale (0 disables the term)"});
  }
  for (const char* t : kTaskNames) {
    out.push_back({std::string("blocks.") + t, "block list replacing the default track"});
  }
  return out;
}

void apply_override(EnvConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  EnvConfig next = cfg;
  bool matched = false;
  for (const Field& f : fields()) {
    if (key != f.key) continue;
    matched = true;
    FieldRef ref = f.ref(next);
    if (auto* d = std::get_if<double*>(&ref)) **d = parse_double(key, value);
    if (auto* i = std::get_if<int*>(&ref)) **i = parse_int(key, value);
    if (auto* b = std::get_if<bool*>(&ref)) {
      if (value != "true" && value != "false")
        throw ConfigError("invalid boolean for " + std::string(key));
      **b = value == "true";
    }
    if (key == "physics.gravity") next.locomotion.gravity = next.physics.gravity;
    break;
  }
  if (!matched && key.starts_with("reward.")) {
    const std::string term(key.substr(7));
    auto it = next.reward_scales.find(term);
    if (it == next.reward_scales.end()) {
      throw ConfigError("unknown reward term '" + term + "'");
    }
    it->second = parse_double(key, value);
    matched = true;
  }
  if (!matched && key.starts_with("blocks.")) {
    const std::string task(key.substr(7));
    if (!known_task(task)) throw ConfigError("unknown task in key '" + std::string(key) + "'");
    const auto blocks = parse_block_list(value);
    (void)compose_track(blocks, {0.0, 0.0});
    next.blocks[task] = format_block_list(blocks);
    matched = true;
  }
  if (!matched) {
    throw ConfigError("unknown configuration key '" + std::string(key) +
                      "' (see validate-config --list-keys)");
  }
  validate(next);
  cfg = std::move(next);
}

std::string dump_config(const EnvConfig& cfg) {
  std::ostringstream out;
  EnvConfig copy = cfg;
  for (const Field& f : fields()) {
    FieldRef ref = f.ref(copy);
    out << f.key << " = ";
    if (auto* d = std::get_if<double*>(&ref)) out << format_double(**d);
    if (auto* i = std::get_if<int*>(&ref)) out << **i;
    if (auto* b = std::get_if<bool*>(&ref)) out << (**b ? "true" : "false");
    out << '\n';
  }
  for (const auto& [k, v] : cfg.reward_scales) out << "reward." << k << " = " << format_double(v) << '\n';
  for (const auto& [k, v] : cfg.blocks) out << "blocks." << k << " = " << v << '\n';
  return out.str();
}

ConfigDocument parse_config_text(std::string_view text) {
  ConfigDocument doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    for (const auto& [k, v] : doc.entries) {
      if (k == key) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    doc.entries.emplace_back(std::move(key), std::move(value));
  }
  return doc;
}

ConfigDocument load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace mqe
