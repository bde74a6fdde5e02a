#pragma once

#include <span>
#include <vector>

#include "mqe/locomotion.hpp"
#include "mqe/rng.hpp"

namespace mqe {

struct SheepParams {
  double sense_radius = 3.0;  // m
  double k_repulse = 6.0;     // m^2/s^2
  double k_cohere = 0.5;      // 1/s^2
  double noise_sigma = 0.5;   // m/s^2
  double v_max = 1.2;         // m/s
  double a_max = 4.0;         // m/s^2
  bool operator==(const SheepParams&) const = default;
};

struct DefenderParams {
  double speed = 1.0;  // m/s
  Vec2 goal_anchor;
  double arrival_tolerance = 0.05;
  bool operator==(const DefenderParams&) const = default;
};

/// max(0, 1/d - 1/R): zero at and beyond R, strictly decreasing inside.
double repulsion_kernel(double distance, double sense_radius);

/// Acceleration of one sheep from dog repulsion and herd cohesion plus white
/// noise, clamped to a_max. `rng` is only drawn from when noise_sigma > 0.
Vec2 sheep_policy(const RigidBody& sheep, std::span<const RigidBody> dogs,
                  std::span<const RigidBody> herd, const SheepParams& params, Rng& rng);

/// Same rule for a whole herd in one pass (vectorized repulsion). Noise is
/// drawn per sheep in herd order, x then y.
void herd_policy(std::span<const Vec2> sheep_pos, std::span<const Vec2> dog_pos,
                 const SheepParams& params, Rng& rng, std::span<Vec2> accel_out);

/// Walk to the ball-goal midpoint at params.speed, facing the ball.
VelocityCommand defender_policy(const RigidBody& ball, const DefenderParams& params,
                                const RigidBody& self, const CommandBounds& bounds);

Vec2 defender_target(Vec2 ball, Vec2 goal);

}  // namespace mqe
