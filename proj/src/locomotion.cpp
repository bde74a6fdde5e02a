#include "mqe/locomotion.hpp"

#include <algorithm>
#include <cmath>

namespace mqe {

double max_force(const LocomotionParams& p, double mass) {
  return p.f_max_factor * mass * p.gravity * p.foot_mu;
}

double tracking_time_constant(const LocomotionParams& p) {
  return p.bounds.vx_max / (p.f_max_factor * p.gravity * p.foot_mu);
}

VelocityCommand clip_command(const VelocityCommand& cmd, const CommandBounds& b) {
  return {std::clamp(cmd.vx, -b.vx_max, b.vx_max), std::clamp(cmd.vy, -b.vy_max, b.vy_max),
          std::clamp(cmd.yaw_rate, -b.yaw_max, b.yaw_max)};
}

Wrench track_command(const RigidBody& robot, const VelocityCommand& raw, double dt,
                     const LocomotionParams& p, bool upright) {
  if (!upright) return {};
  const VelocityCommand cmd = clip_command(raw, p.bounds);
  const double tau = tracking_time_constant(p);
  const double gain = dt / tau;

  Wrench w;
  const double yaw_rate_next = robot.yaw_rate + gain * (cmd.yaw_rate - robot.yaw_rate);
  w.torque = robot.inertia * (yaw_rate_next - robot.yaw_rate) / dt;
  const double t_max = robot.inertia * 2.0 * p.bounds.yaw_max / tau;
  w.torque = std::clamp(w.torque, -t_max, t_max);

  const Vec2 body_cmd{cmd.vx, cmd.vy};
  const Vec2 target_now = rotate(body_cmd, robot.yaw);
  const Vec2 target_next = rotate(body_cmd, robot.yaw + dt * yaw_rate_next);
  const Vec2 dv = (target_next - target_now) + gain * (target_now - robot.vel);
  w.force = dv * (robot.mass / dt);
  const double f_max = max_force(p, robot.mass);
  const double mag = norm(w.force);
  if (mag > f_max) w.force = w.force * (f_max / mag);
  return w;
}

RobotStatus update_stability(RigidBody& robot, const RobotStatus& status,
                             const WorldState& world, double impulse, double dt,
                             const LocomotionParams& p) {
  RobotStatus out = status;
  const double support = world.support(robot.pos);
  if (!out.upright) {
    robot.z = std::isfinite(support) ? support : kVoidDepth;
    robot.ground_friction = true;
    return out;
  }
  const int window = std::clamp(static_cast<int>(std::lround(p.topple_window / dt)), 1,
                                kImpulseRing);
  out.ring[static_cast<std::size_t>(out.ring_pos)] = impulse;
  out.ring_pos = (out.ring_pos + 1) % window;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) sum += out.ring[static_cast<std::size_t>(i)];
  out.lateral_impulse_window = sum;

  const bool dropped = !(support >= robot.z - p.fall_drop);
  out.airborne_time = dropped ? out.airborne_time + dt : 0.0;
  if (dropped || sum > p.topple_impulse) {
    out.upright = false;
    robot.z = std::isfinite(support) ? support : kVoidDepth;
    robot.ground_friction = true;
    return out;
  }
  robot.z = support;
  return out;
}

}  // namespace mqe
