#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqe/common.hpp"
#include "mqe/rng.hpp"

namespace mqe {

enum class BlockKind {
  Flat,
  WallWithGate,
  Platform,
  Seesaw,
  Bridge,
  WalledArena,
  FootballPitch,
  SumoRing,
};

std::string_view to_string(BlockKind kind);

/// One parametric terrain block. Only the fields of its kind are meaningful.
struct BlockSpec {
  BlockKind kind = BlockKind::Flat;
  double len_x = 4.0;
  double len_y = 6.0;
  bool side_walls = true;

  double gate_width = 0.8;
  double gate_offset = 0.0;

  double height = 0.5;  // Platform

  double plank_len = 3.0;
  double plank_width = 1.0;
  double pivot_height = 0.25;

  double bridge_width = 0.45;
  double deck_height = 0.6;

  double arena_w = 6.0;
  double arena_h = 4.0;

  double pitch_length = 8.0;
  double pitch_width = 5.0;
  double goal_width = 1.2;
  double goal_depth = 0.5;

  double ring_radius = 1.5;
  double platform_height = 0.6;

  // Explicit start along the track; default is end-to-end placement.
  std::optional<double> x_start;

  static BlockSpec flat(double len_x, double len_y);
  static BlockSpec wall_with_gate(double gate_width, double gate_offset, double len_x,
                                  double len_y);
  static BlockSpec platform(double height, double len_x, double len_y);
  static BlockSpec seesaw(double plank_len, double plank_width, double pivot_height,
                          double len_y);
  static BlockSpec bridge(double width, double length, double deck_height, double len_y);
  static BlockSpec walled_arena(double w, double h);
  static BlockSpec football_pitch(double length, double width, double goal_width);
  static BlockSpec sumo_ring(double radius, double platform_height, double extent);

  bool operator==(const BlockSpec&) const = default;
};

struct Segment {
  Vec2 a;
  Vec2 b;
  bool operator==(const Segment&) const = default;
};

struct PlacedBlock {
  BlockSpec spec;
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
  double yc = 0.0;
  bool operator==(const PlacedBlock&) const = default;
};

/// Plank of a seesaw block in world coordinates. Signed arm s = x - pivot_x.
struct SeesawGeometry {
  double x_near = 0.0;
  double x_far = 0.0;
  double pivot_x = 0.0;
  double y_center = 0.0;
  double half_width = 0.0;
  double pivot_height = 0.0;
  double max_angle = 0.0;
  bool operator==(const SeesawGeometry&) const = default;
};

struct Arena {
  std::vector<PlacedBlock> blocks;
  std::vector<Segment> walls;
  std::map<std::string, Vec2> anchors;
  std::optional<SeesawGeometry> seesaw;
  Vec2 lo;
  Vec2 hi;

  Vec2 anchor(const std::string& label) const;
  bool has_anchor(const std::string& label) const { return anchors.contains(label); }
  bool operator==(const Arena&) const = default;
};

/// Places blocks end to end along +x starting at `origin` (x = track start,
/// y = track centerline). Throws ConfigError on empty or overlapping input.
Arena compose_track(std::span<const BlockSpec> blocks, Vec2 origin);

/// Support height at (x, y). Returns kVoidHeight outside every block.
/// `seesaw_angle` tilts the plank of a seesaw block, positive raises the far end.
double height_at(const Arena& arena, double x, double y, double seesaw_angle = 0.0);

/// Parses "Flat(4x6); WallWithGate(0.8, 0, 1x6); Flat(4x6)".
std::vector<BlockSpec> parse_block_list(std::string_view text);
std::string format_block_list(std::span<const BlockSpec> blocks);

struct SpawnRect {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;
  double yaw_lo = 0.0;
  double yaw_hi = 0.0;
};

struct Pose {
  Vec2 pos;
  double yaw = 0.0;
  bool operator==(const Pose&) const = default;
};

/// Uniform rejection sampling keeping bodies i, j at least
/// radii[i] + radii[j] + margin apart; after 100 failed tries a body goes to
/// the first free point of a lattice over its rect.
std::vector<Pose> spawn_layout(std::span<const SpawnRect> regions, std::span<const double> radii,
                               double margin, Rng& rng);

}  // namespace mqe
