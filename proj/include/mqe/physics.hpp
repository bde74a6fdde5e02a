#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mqe/common.hpp"
#include "mqe/terrain.hpp"

namespace mqe {

enum class ShapeKind : std::uint8_t { Disc, Rect, Segment };

struct Shape {
  ShapeKind kind = ShapeKind::Disc;
  double radius = 0.0;
  double half_w = 0.0;  // along body x
  double half_h = 0.0;  // along body y
  Vec2 a;               // segment endpoints, world frame
  Vec2 b;

  static Shape disc(double r) { return {ShapeKind::Disc, r, 0, 0, {}, {}}; }
  static Shape rect(double hw, double hh) { return {ShapeKind::Rect, 0, hw, hh, {}, {}}; }
  static Shape segment(Vec2 a, Vec2 b) { return {ShapeKind::Segment, 0, 0, 0, a, b}; }

  /// Radius of the bounding circle around the body's position.
  double bound_radius() const;
  bool operator==(const Shape&) const = default;
};

enum class BodyClass : std::uint8_t { Robot, Object, Npc, Static, HingeLink };

struct RigidBody {
  int id = 0;
  Shape shape;
  Vec2 pos;
  double yaw = 0.0;
  double z = 0.0;
  Vec2 vel;
  double yaw_rate = 0.0;
  double mass = 1.0;  // ignored for statics
  double inertia = 1.0;
  double friction_mu = 0.5;
  BodyClass body_class = BodyClass::Object;
  // Coulomb friction against the ground (objects, fallen robots).
  bool ground_friction = false;
  // Rail constraint: the body may only translate along world x.
  bool lock_y = false;

  bool is_static() const { return body_class == BodyClass::Static; }
  double inv_mass_x() const;
  double inv_mass_y() const;
  double inv_inertia() const;
  bool operator==(const RigidBody&) const = default;
};

enum class HingeAxis : std::uint8_t { Vertical, Horizontal };

struct HingeJoint {
  int link_body = -1;  // -1 when the link is terrain (seesaw plank)
  HingeAxis axis = HingeAxis::Vertical;
  double pivot_x = 0.0;
  double pivot_y = 0.0;
  double pivot_z = 0.0;
  double angle = 0.0;
  double ang_vel = 0.0;
  double lo = -1e9;
  double hi = 1e9;
  double damping = 0.0;
  double inertia = 1.0;
  // Torque of the unloaded link about its pivot (zero for a symmetric plank).
  double imbalance_torque = 0.0;
  bool operator==(const HingeJoint&) const = default;
};

struct PhysicsParams {
  double gravity = 9.81;
  int substeps = 4;
  int solver_iterations = 8;
  double penetration_slop = 2e-4;
  int projection_passes = 16;
  double speculative_margin = 0.05;
  double max_step_height = 0.15;
  // Bodies farther apart than this vertically do not collide (different levels).
  double level_separation = 0.3;
  double seesaw_quasi_static_speed = 0.05;
  double seesaw_hold_torque = 10.0;
  bool operator==(const PhysicsParams&) const = default;
};

struct Wrench {
  Vec2 force;
  double torque = 0.0;
  bool operator==(const Wrench&) const = default;
};

struct Contact {
  int body_a = 0;
  int body_b = 0;
  Vec2 normal;  // from a to b
  double depth = 0.0;
  Vec2 point;
  int n_points = 1;
  Vec2 points[2];
  double depths[2] = {0.0, 0.0};
};

struct WorldState {
  std::vector<RigidBody> bodies;
  std::vector<HingeJoint> joints;
  double time = 0.0;
  std::int64_t step_count = 0;
  std::shared_ptr<const Arena> arena;
  PhysicsParams params;

  int seesaw_joint() const;
  double seesaw_angle() const;
  /// Support height under (x, y) including the current seesaw tilt.
  double support(Vec2 p) const;
  bool operator==(const WorldState& o) const {
    return bodies == o.bodies && joints == o.joints && time == o.time &&
           step_count == o.step_count && params == o.params;
  }
};

/// Per-step contact bookkeeping filled by step_world.
struct StepReport {
  // Normal impulse accumulated over the control step per robot-robot pair,
  // indexed pair_index(i, j) over the robot list passed to step_world.
  std::vector<double> robot_pair_impulse;
  // Contact impulse each robot received from other robots this step (N*s).
  std::vector<double> robot_impulse;
  double max_depth = 0.0;
  // Re-run detection after the step to fill max_depth (costs a narrow phase).
  bool measure_depth = false;
};

/// Reusable stepping buffers.
struct PhysicsScratch {
  std::vector<Contact> contacts;
  std::vector<double> acc_n;
  std::vector<double> acc_t;
  std::vector<Vec2> ground_lin;
  std::vector<double> ground_ang;
  std::vector<Vec2> prev_pos;
  std::vector<double> bx, by, br;
  std::vector<std::uint8_t> mask;
  std::vector<int> robot_slot;
};

inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

/// Advances the world by `dt` using params.substeps semi-implicit substeps.
/// `forces` holds one wrench per body, applied for the whole step.
/// `robots` lists robot body ids for the StepReport pair bookkeeping.
/// Throws Fault naming the body on non-finite input.
void step_world(WorldState& world, std::span<const Wrench> forces, double dt,
                PhysicsScratch& scratch, StepReport* report = nullptr,
                std::span<const int> robots = {});

/// Pure form of step_world.
WorldState stepped(const WorldState& world, std::span<const Wrench> forces, double dt);

/// Every overlapping solid pair once, normal a -> b, depth > 0, sorted by ids.
std::vector<Contact> detect_contacts(const WorldState& world);

struct LeverLoad {
  double mass = 0.0;
  double arm = 0.0;  // signed distance along the plank, positive toward the far end
};

/// Net torque about the seesaw pivot; positive raises the far end.
double seesaw_torque_balance(const HingeJoint& plank, std::span<const LeverLoad> loads,
                             double gravity = 9.81);

double kinetic_energy(const WorldState& world);
Vec2 linear_momentum(const WorldState& world);

/// Static wall bodies for an arena's segments.
std::vector<RigidBody> wall_bodies(const Arena& arena, int first_id);

}  // namespace mqe
