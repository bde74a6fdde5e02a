#pragma once

#include <array>

#include "mqe/physics.hpp"

namespace mqe {

/// High-level action: body-frame planar velocity and yaw rate.
struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
  bool operator==(const VelocityCommand&) const = default;
};

struct CommandBounds {
  double vx_max = 1.5;
  double vy_max = 1.0;
  double yaw_max = 2.0;
  bool operator==(const CommandBounds&) const = default;
};

struct LocomotionParams {
  CommandBounds bounds;
  double gravity = 9.81;
  double foot_mu = 0.8;
  // F_max = f_max_factor * m * g * foot_mu.
  double f_max_factor = 2.0;
  double topple_impulse = 25.0;  // N*s over the window
  double topple_window = 0.2;    // s
  double fall_drop = 0.3;        // m
  bool operator==(const LocomotionParams&) const = default;
};

/// Actuation cap for a robot of mass `mass`.
double max_force(const LocomotionParams& p, double mass);
/// Tracking time constant: the stalled full-forward command saturates at F_max.
double tracking_time_constant(const LocomotionParams& p);

VelocityCommand clip_command(const VelocityCommand& cmd, const CommandBounds& bounds);

/// First-order velocity tracking in the body frame, with a feed-forward term
/// for the rotation of the target during the step. Force magnitude <= F_max.
Wrench track_command(const RigidBody& robot, const VelocityCommand& cmd, double dt,
                     const LocomotionParams& params, bool upright = true);

inline constexpr int kImpulseRing = 16;

struct RobotStatus {
  bool upright = true;
  double lateral_impulse_window = 0.0;
  double airborne_time = 0.0;
  std::array<double, kImpulseRing> ring{};
  int ring_pos = 0;
  bool operator==(const RobotStatus&) const = default;
};

/// Fall detection after a control step. `impulse` is the contact impulse the
/// robot received from other robots during the step. Upright robots get their
/// height snapped to the support; fallen robots switch to ground friction.
RobotStatus update_stability(RigidBody& robot, const RobotStatus& status,
                             const WorldState& world, double impulse, double dt,
                             const LocomotionParams& params);

}  // namespace mqe
