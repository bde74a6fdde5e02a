#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "mqe/physics.hpp"
#include "mqe/rng.hpp"

using namespace mqe;

namespace {

constexpr double kDt = 0.02;

RigidBody disc(int id, double r, Vec2 pos, double mass = 10.0) {
  RigidBody b;
  b.id = id;
  b.shape = Shape::disc(r);
  b.pos = pos;
  b.mass = mass;
  b.inertia = 0.5 * mass * r * r;
  return b;
}

RigidBody wall(int id, Vec2 a, Vec2 b) {
  RigidBody w;
  w.id = id;
  w.shape = Shape::segment(a, b);
  w.pos = 0.5 * (a + b);
  w.body_class = BodyClass::Static;
  w.mass = 0.0;
  w.inertia = 0.0;
  return w;
}

}  // namespace

TEST(Physics, FreeDiscIntegrates) {
  WorldState w;
  w.bodies = {disc(0, 0.3, {0, 0})};
  w.bodies[0].vel = {1, 0};
  const WorldState out = stepped(w, std::vector<Wrench>(1), kDt);
  EXPECT_NEAR(out.bodies[0].pos.x, 0.02, 1e-15);
  EXPECT_EQ(out.bodies[0].pos.y, 0.0);
  EXPECT_EQ(out.step_count, 1);
}

TEST(Physics, HeadOnInelasticCollisionStops) {
  WorldState w;
  w.bodies = {disc(0, 0.3, {-0.305, 0}), disc(1, 0.3, {0.305, 0})};
  w.bodies[0].vel = {1, 0};
  w.bodies[1].vel = {-1, 0};
  const WorldState out = stepped(w, std::vector<Wrench>(2), kDt);
  EXPECT_NEAR(out.bodies[0].vel.x, 0.0, 1e-12);
  EXPECT_NEAR(out.bodies[1].vel.x, 0.0, 1e-12);
  EXPECT_NEAR(linear_momentum(out).x, 0.0, 1e-12);
}

TEST(Physics, CoulombStopTime) {
  WorldState w;
  RigidBody b = disc(0, 0.3, {0, 0});
  b.friction_mu = 0.5;
  b.ground_friction = true;
  b.vel = {2, 0};
  w.bodies = {b};
  PhysicsScratch s;
  const std::vector<Wrench> none(1);
  double t = 0.0;
  while (norm(w.bodies[0].vel) > 0.0 && t < 2.0) {
    step_world(w, none, kDt, s);
    t += kDt;
  }
  EXPECT_NEAR(t, 2.0 / (0.5 * 9.81), 2 * kDt);
  EXPECT_NEAR(w.bodies[0].pos.x, 2.0 * 2.0 / (2 * 0.5 * 9.81), 0.05);
}

TEST(Contacts, SeparatedDiscs) {
  WorldState w;
  w.bodies = {disc(0, 0.3, {0, 0}), disc(1, 0.3, {1, 0})};
  EXPECT_TRUE(detect_contacts(w).empty());
}

TEST(Contacts, OverlappingDiscs) {
  WorldState w;
  w.bodies = {disc(0, 0.3, {0, 0}), disc(1, 0.3, {0.5, 0})};
  const auto c = detect_contacts(w);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0].depth, 0.1, 1e-15);
  EXPECT_NEAR(c[0].normal.x, 1.0, 1e-15);
  EXPECT_NEAR(c[0].normal.y, 0.0, 1e-15);
}

TEST(Contacts, DiscAgainstWall) {
  WorldState w;
  w.bodies = {disc(0, 0.3, {0.2, 0.7}), wall(1, {0, -100}, {0, 100})};
  const auto c = detect_contacts(w);
  ASSERT_EQ(c.size(), 1u);
  // Oracle: distance from the center to the line x = 0.
  EXPECT_NEAR(c[0].depth, 0.3 - 0.2, 1e-12);
  EXPECT_NEAR(std::abs(c[0].normal.x), 1.0, 1e-12);
  EXPECT_NEAR(c[0].normal.y, 0.0, 1e-12);
}

TEST(Contacts, RectAgainstRect) {
  WorldState w;
  RigidBody a = disc(0, 0, {0, 0});
  a.shape = Shape::rect(0.5, 0.5);
  RigidBody b = a;
  b.id = 1;
  b.pos = {0.9, 0.2};
  w.bodies = {a, b};
  const auto c = detect_contacts(w);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0].depth, 0.1, 1e-12);
  EXPECT_NEAR(c[0].normal.x, 1.0, 1e-12);
}

TEST(Seesaw, TorqueBalance) {
  HingeJoint plank;
  plank.axis = HingeAxis::Horizontal;
  EXPECT_EQ(seesaw_torque_balance(plank, {}), 0.0);
  const std::vector<LeverLoad> one = {{12.0, 1.0}};
  EXPECT_NEAR(seesaw_torque_balance(plank, one), -12.0 * 9.81, 1e-12);
  const std::vector<LeverLoad> two = {{12.0, 1.0}, {12.0, -1.0}};
  EXPECT_NEAR(seesaw_torque_balance(plank, two), 0.0, 1e-12);
}

TEST(Physics, StaticsNeverMove) {
  WorldState w;
  w.bodies = {disc(0, 0.3, {0.25, 0}), wall(1, {0, -1}, {0, 1})};
  w.bodies[0].vel = {-3, 0};
  PhysicsScratch s;
  std::vector<Wrench> f(2);
  f[0].force = {-500, 0};
  for (int i = 0; i < 50; ++i) step_world(w, f, kDt, s);
  EXPECT_EQ(w.bodies[1].vel, (Vec2{}));
  EXPECT_EQ(w.bodies[1].pos, (Vec2{0, 0}));
  EXPECT_GE(w.bodies[0].pos.x, 0.3 - 1e-3);
}

TEST(Physics, RejectsBadInput) {
  WorldState w;
  w.bodies = {disc(0, 0.3, {0, 0})};
  PhysicsScratch s;
  EXPECT_THROW(step_world(w, std::vector<Wrench>(1), 0.0, s), Fault);
  EXPECT_THROW(step_world(w, std::vector<Wrench>(2), kDt, s), Fault);
  std::vector<Wrench> f(1);
  f[0].force = {std::nan(""), 0};
  EXPECT_THROW(step_world(w, f, kDt, s), Fault);
  w.bodies[0].vel = {INFINITY, 0};
  EXPECT_THROW(step_world(w, std::vector<Wrench>(1), kDt, s), Fault);
}

TEST(Physics, BitwiseReproducible) {
  Rng rng(5);
  WorldState w;
  for (int i = 0; i < 8; ++i) {
    w.bodies.push_back(disc(i, 0.25, {rng.uniform(-1, 1), rng.uniform(-1, 1)}));
    w.bodies.back().vel = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
  }
  WorldState a = w, b = w;
  PhysicsScratch sa, sb;
  const std::vector<Wrench> f(8);
  for (int i = 0; i < 100; ++i) {
    step_world(a, f, kDt, sa);
    step_world(b, f, kDt, sb);
  }
  EXPECT_EQ(a, b);
}

class MomentumProperty : public ::testing::TestWithParam<int> {};

TEST_P(MomentumProperty, TwoBodyCollisionConservesMomentum) {
  Rng rng(static_cast<std::uint64_t>(GetParam()));
  int hits = 0;
  for (int i = 0; i < 200; ++i) {
    RigidBody a = disc(0, rng.uniform(0.1, 0.5), {0, 0}, rng.uniform(1, 50));
    RigidBody b = disc(1, rng.uniform(0.1, 0.5), {0, 0}, rng.uniform(1, 50));
    if (rng.uniform() < 0.5) b.shape = Shape::rect(rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4));
    b.yaw = rng.uniform(-3, 3);
    const double ang = rng.uniform(-3, 3);
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    b.pos = dir * (a.shape.radius + b.shape.bound_radius() * 0.9);
    a.vel = dir * rng.uniform(0.1, 2);
    b.vel = dir * -rng.uniform(0.1, 2);
    a.friction_mu = rng.uniform(0, 1);
    WorldState w;
    w.bodies = {a, b};
    const Vec2 p0 = linear_momentum(w);
    const WorldState out = stepped(w, std::vector<Wrench>(2), kDt);
    hits += !(out.bodies[0].vel == a.vel);
    EXPECT_LE(norm(linear_momentum(out) - p0), 1e-6);
  }
  EXPECT_GT(hits, 100);
}

INSTANTIATE_TEST_SUITE_P(Seeds, MomentumProperty, ::testing::Range(0, 5));

TEST(Physics, KineticEnergyNonIncreasingWithoutInput) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    WorldState w;
    for (int i = 0; i < 6; ++i) {
      w.bodies.push_back(disc(i, 0.3, {0.7 * i, rng.uniform(-0.2, 0.2)}, rng.uniform(1, 20)));
      w.bodies.back().vel = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
      w.bodies.back().ground_friction = i % 2 == 0;
    }
    w.bodies.push_back(wall(6, {-1, -1}, {5, -1}));
    w.bodies.push_back(wall(7, {-1, 1}, {5, 1}));
    PhysicsScratch s;
    const std::vector<Wrench> f(w.bodies.size());
    double ke = kinetic_energy(w);
    for (int t = 0; t < 200; ++t) {
      step_world(w, f, kDt, s);
      const double next = kinetic_energy(w);
      EXPECT_LE(next, ke + 1e-9);
      ke = next;
    }
  }
}

TEST(Physics, PenetrationStaysBelowTolerance) {
  Rng rng(3);
  WorldState w;
  for (int i = 0; i < 9; ++i)
    w.bodies.push_back(disc(i, 0.25, {0.6 * (i % 3), 0.6 * (i / 3)}, rng.uniform(1, 40)));
  w.bodies.push_back(wall(9, {-0.5, -0.5}, {1.7, -0.5}));
  w.bodies.push_back(wall(10, {1.7, -0.5}, {1.7, 1.7}));
  w.bodies.push_back(wall(11, {1.7, 1.7}, {-0.5, 1.7}));
  w.bodies.push_back(wall(12, {-0.5, 1.7}, {-0.5, -0.5}));
  PhysicsScratch s;
  StepReport report;
  report.measure_depth = true;
  std::vector<Wrench> f(w.bodies.size());
  for (int t = 0; t < 300; ++t) {
    for (int i = 0; i < 9; ++i) f[i].force = {rng.uniform(-300, 300), rng.uniform(-300, 300)};
    step_world(w, f, kDt, s, &report);
    EXPECT_LE(report.max_depth, 1e-3);
  }
}

TEST(Hinge, DoorAngleStaysInsideLimits) {
  WorldState w;
  RigidBody door;
  door.id = 0;
  door.shape = Shape::rect(0.9, 0.05);
  door.body_class = BodyClass::HingeLink;
  door.mass = 10;
  door.inertia = 4;
  door.yaw_rate = 20;
  w.bodies = {door};
  HingeJoint j;
  j.link_body = 0;
  j.lo = -0.5;
  j.hi = 0.5;
  j.damping = 0.1;
  w.joints = {j};
  PhysicsScratch s;
  std::vector<Wrench> f(1);
  f[0].torque = 100;
  for (int t = 0; t < 100; ++t) {
    step_world(w, f, kDt, s);
    EXPECT_LE(w.joints[0].angle, 0.5 + 1e-9);
    EXPECT_GE(w.joints[0].angle, -0.5 - 1e-9);
  }
  EXPECT_EQ(w.joints[0].angle, 0.5);
  EXPECT_EQ(w.bodies[0].pos, (Vec2{}));
}

TEST(Physics, LockYBodyMovesOnlyAlongX) {
  WorldState w;
  RigidBody c = disc(0, 0.3, {0, 0}, 20);
  c.lock_y = true;
  RigidBody r = disc(1, 0.35, {-0.6, -0.2}, 12);
  r.vel = {1.0, 0.5};
  w.bodies = {c, r};
  PhysicsScratch s;
  const std::vector<Wrench> f(2);
  for (int t = 0; t < 30; ++t) step_world(w, f, kDt, s);
  EXPECT_EQ(w.bodies[0].pos.y, 0.0);
  EXPECT_GT(w.bodies[0].pos.x, 0.0);
}
