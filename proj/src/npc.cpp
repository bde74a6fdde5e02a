#include "mqe/npc.hpp"

#include <algorithm>
#include <cmath>

#include "mqe/kernels.hpp"

namespace mqe {

double repulsion_kernel(double distance, double sense_radius) {
  if (!(distance > 0.0) || distance >= sense_radius) return 0.0;
  return std::max(0.0, 1.0 / distance - 1.0 / sense_radius);
}

namespace {

Vec2 clamp_norm(Vec2 v, double max) {
  const double n = norm(v);
  return n > max ? v * (max / n) : v;
}

struct HerdBuffers {
  std::vector<double> sx, sy, dx, dy, ax, ay;
};

HerdBuffers& buffers() {
  thread_local HerdBuffers b;
  return b;
}

}  // namespace

void herd_policy(std::span<const Vec2> sheep_pos, std::span<const Vec2> dog_pos,
                 const SheepParams& p, Rng& rng, std::span<Vec2> accel_out) {
  const std::size_t n = sheep_pos.size();
  HerdBuffers& b = buffers();
  b.sx.resize(n);
  b.sy.resize(n);
  b.ax.assign(n, 0.0);
  b.ay.assign(n, 0.0);
  b.dx.resize(dog_pos.size());
  b.dy.resize(dog_pos.size());
  Vec2 centroid;
  for (std::size_t i = 0; i < n; ++i) {
    b.sx[i] = sheep_pos[i].x;
    b.sy[i] = sheep_pos[i].y;
    centroid += sheep_pos[i];
  }
  if (n > 0) centroid = centroid / static_cast<double>(n);
  for (std::size_t j = 0; j < dog_pos.size(); ++j) {
    b.dx[j] = dog_pos[j].x;
    b.dy[j] = dog_pos[j].y;
  }
  kernels::active().repulsion(b.sx.data(), b.sy.data(), n, b.dx.data(), b.dy.data(),
                              dog_pos.size(), p.sense_radius, p.k_repulse, b.ax.data(),
                              b.ay.data());
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 a{b.ax[i], b.ay[i]};
    a += p.k_cohere * (centroid - sheep_pos[i]);
    if (p.noise_sigma > 0.0) {
      const double ex = p.noise_sigma * rng.normal();
      const double ey = p.noise_sigma * rng.normal();
      a += Vec2{ex, ey};
    }
    accel_out[i] = clamp_norm(a, p.a_max);
  }
}

Vec2 sheep_policy(const RigidBody& sheep, std::span<const RigidBody> dogs,
                  std::span<const RigidBody> herd, const SheepParams& p, Rng& rng) {
  Vec2 a;
  for (const RigidBody& d : dogs) {
    const Vec2 away = sheep.pos - d.pos;
    const double dist = norm(away);
    const double w = repulsion_kernel(dist, p.sense_radius);
    if (w > 0.0) a += (p.k_repulse * w / dist) * away;
  }
  Vec2 centroid;
  for (const RigidBody& s : herd) centroid += s.pos;
  if (!herd.empty()) centroid = centroid / static_cast<double>(herd.size());
  a += p.k_cohere * (centroid - sheep.pos);
  if (p.noise_sigma > 0.0) {
    const double ex = p.noise_sigma * rng.normal();
    const double ey = p.noise_sigma * rng.normal();
    a += Vec2{ex, ey};
  }
  return clamp_norm(a, p.a_max);
}

Vec2 defender_target(Vec2 ball, Vec2 goal) { return 0.5 * (ball + goal); }

VelocityCommand defender_policy(const RigidBody& ball, const DefenderParams& p,
                                const RigidBody& self, const CommandBounds& bounds) {
  const Vec2 target = defender_target(ball.pos, p.goal_anchor);
  const Vec2 diff = target - self.pos;
  const double dist = norm(diff);
  Vec2 world_vel;
  if (dist > p.arrival_tolerance) {
    const double speed = std::min(p.speed, dist / 0.5);
    world_vel = diff * (speed / dist);
  }
  const Vec2 body = rotate(world_vel, -self.yaw);
  const Vec2 to_ball = ball.pos - self.pos;
  double yaw_rate = 0.0;
  if (norm2(to_ball) > 1e-12) {
    const double err = wrap_angle(std::atan2(to_ball.y, to_ball.x) - self.yaw);
    yaw_rate = 3.0 * err;
  }
  return clip_command({body.x, body.y, yaw_rate}, bounds);
}

}  // namespace mqe
