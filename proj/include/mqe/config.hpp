#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mqe/locomotion.hpp"
#include "mqe/npc.hpp"
#include "mqe/physics.hpp"

namespace mqe {

struct BodyParams {
  double robot_radius = 0.35;
  double robot_mass = 12.0;
  double box_half = 0.4;
  double box_mass = 45.0;
  double box_mu = 0.6;
  double ball_radius = 0.11;
  double ball_mass = 0.45;
  double ball_mu = 0.1;
  double cylinder_radius = 0.3;
  double cylinder_mass = 20.0;
  double cylinder_mu = 0.4;
  double sheep_radius = 0.2;
  double sheep_mass = 5.0;
  double sheep_mu = 0.3;
  double door_inertia = 4.0;
  double door_damping = 4.0;
  double plank_inertia = 10.0;
  double plank_damping = 5.0;
  // Unloaded plank torque expressed as a robot weight at this arm (m).
  double plank_counterweight_arm = 0.6;
  bool operator==(const BodyParams&) const = default;
};

struct TerrainParams {
  double room_length = 4.0;
  double room_width = 6.0;
  double gate_width = 0.8;
  double sheep_gate_width = 1.2;
  double box_gate_width = 2.0;
  double door_gate_width = 1.8;
  double plank_len = 3.0;
  double plank_width = 1.0;
  double platform_height = 0.5;
  double bridge_width = 0.45;
  double bridge_length = 4.0;
  double deck_height = 0.6;
  double ring_radius = 1.5;
  double ring_height = 0.6;
  double pitch_length = 8.0;
  double pitch_width = 5.0;
  double goal_width = 1.2;
  double cylinder_arena_w = 6.0;
  double cylinder_arena_h = 4.0;
  // Grid spacing between environment tracks (metadata only).
  double track_spacing = 20.0;
  bool operator==(const TerrainParams&) const = default;
};

struct TaskParams {
  int episode_len = 500;
  int football_episode_len = 1000;
  double spacing_clip = 2.0;
  double collision_impulse = 1.0;  // N*s, robot-robot onset threshold
  double defender_speed = 1.0;
  bool operator==(const TaskParams&) const = default;
};

/// Every tunable of the environment. All fields are reachable through
/// documented override keys (see config_keys()).
struct EnvConfig {
  PhysicsParams physics;
  LocomotionParams locomotion;
  SheepParams sheep;
  BodyParams bodies;
  TerrainParams terrain;
  TaskParams task;
  // "<task>.<term>" -> scale; defaults filled by default_reward_scales().
  std::map<std::string, double> reward_scales;
  // "<task>" -> block list text replacing the task's default recipe.
  std::map<std::string, std::string> blocks;

  EnvConfig();
  bool operator==(const EnvConfig&) const = default;
};

struct ConfigKey {
  std::string key;
  std::string description;
};

/// Documented numeric keys (reward scale and block keys are listed too).
std::vector<ConfigKey> config_keys();

/// Applies one "key = value" override; throws ConfigError on unknown keys or
/// malformed values.
void apply_override(EnvConfig& cfg, std::string_view key, std::string_view value);

/// Effective configuration as "key = value" lines that re-load identically.
std::string dump_config(const EnvConfig& cfg);

/// Plain-text document: one "key = value" per line, '#' comments.
struct ConfigDocument {
  std::vector<std::pair<std::string, std::string>> entries;
};

ConfigDocument parse_config_text(std::string_view text);
ConfigDocument load_config_file(const std::string& path);

std::string format_double(double v);

}  // namespace mqe
