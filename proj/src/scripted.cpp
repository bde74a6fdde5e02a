#include <algorithm>
#include <cmath>

#include "mqe/policy.hpp"

namespace mqe {

VelocityCommand goto_command(const RigidBody& self, Vec2 target, double speed,
                             const CommandBounds& bounds) {
  const Vec2 diff = target - self.pos;
  const double d = norm(diff);
  if (d < 1e-3) return {};
  const double v = std::min(speed, 2.0 * d);
  Vec2 body = rotate(diff * (v / d), -self.yaw);
  const double sx = std::abs(body.x) > bounds.vx_max ? bounds.vx_max / std::abs(body.x) : 1.0;
  const double sy = std::abs(body.y) > bounds.vy_max ? bounds.vy_max / std::abs(body.y) : 1.0;
  body = body * std::min(sx, sy);
  double yaw_rate = 0.0;
  if (d > 0.05) yaw_rate = 4.0 * wrap_angle(std::atan2(diff.y, diff.x) - self.yaw);
  return clip_command({body.x, body.y, yaw_rate}, bounds);
}

namespace {

const RigidBody& body(const EpisodeState& st, int id) {
  return st.world.bodies[static_cast<std::size_t>(id)];
}

const RigidBody& agent(const Task& task, const EpisodeState& st, std::size_t i) {
  return body(st, task.roster().agents[i]);
}

const CommandBounds& bounds(const Task& task) { return task.config().locomotion.bounds; }

// Heading-locked drive: hold `yaw`, move with world velocity `v`.
VelocityCommand drive(const RigidBody& self, Vec2 v, double yaw, const CommandBounds& b) {
  const Vec2 body_v = rotate(v, -self.yaw);
  return clip_command({body_v.x, body_v.y, 4.0 * wrap_angle(yaw - self.yaw)}, b);
}

Vec2 toward(const RigidBody& self, Vec2 target, double speed) {
  const Vec2 diff = target - self.pos;
  const double d = norm(diff);
  if (d < 1e-3) return {};
  return diff * (std::min(speed, 2.0 * d) / d);
}

// Walk to `target`, facing the travel direction far away and `yaw` close by.
VelocityCommand goto_pose(const RigidBody& self, Vec2 target, double yaw, double speed,
                          const CommandBounds& b, Vec2 extra = {}) {
  const Vec2 diff = target - self.pos;
  const double heading = norm(diff) > 0.4 ? std::atan2(diff.y, diff.x) : yaw;
  return drive(self, toward(self, target, speed) + extra, heading, b);
}

// Sidestep velocity away from a nearby robot.
Vec2 avoid(const RigidBody& self, const RigidBody& other, double radius) {
  const Vec2 d = self.pos - other.pos;
  const double n = norm(d);
  if (n >= radius || n < 1e-9) return {};
  return d * (1.5 * (radius - n) / n);
}

// Lines up on the gate axis, then drives straight through.
VelocityCommand through_gate(const RigidBody& self, Vec2 gate, Vec2 exit, const CommandBounds& b) {
  const double e = self.pos.y - gate.y;
  if (self.pos.x < gate.x - 0.45) {
    const bool aligned = std::abs(e) < 0.03 && std::abs(wrap_angle(self.yaw)) < 0.15;
    if (!aligned) {
      if (self.pos.x > gate.x - 0.75) return drive(self, {-0.6, 0.0}, 0.0, b);
      return goto_pose(self, {gate.x - 0.9, gate.y}, 0.0, 1.2, b);
    }
  }
  if (self.pos.x < gate.x + 0.6) {
    return drive(self, {1.0, std::clamp(-3.0 * e, -0.2, 0.2)}, 0.0, b);
  }
  return goto_pose(self, exit, 0.0, 1.2, b);
}

void narrow_gate_solver(const Task& task, const EpisodeState& st, std::span<VelocityCommand> out) {
  const Vec2 gate = task.geometry().gate;
  const CommandBounds& b = bounds(task);
  const RigidBody& a0 = agent(task, st, 0);
  const RigidBody& a1 = agent(task, st, 1);
  out[0] = through_gate(a0, gate, gate + Vec2{2.0, 1.5}, b);
  const bool first_clear = a0.pos.x > gate.x + 0.8;
  if (!first_clear && a1.pos.x < gate.x) {
    // Wait on the far side of the first robot's approach path.
    const double side = a0.pos.y >= gate.y ? -1.0 : 1.0;
    out[1] = goto_pose(a1, {gate.x - 2.4, gate.y + side * 1.8}, 0.0, 1.2, b, avoid(a1, a0, 1.2));
  } else {
    out[1] = through_gate(a1, gate, gate + Vec2{2.0, -1.5}, b);
  }
}

bool on_plank(const SeesawGeometry& g, Vec2 p, double inset) {
  return p.x > g.x_near + inset && p.x < g.x_far && std::abs(p.y - g.y_center) < 0.3;
}

// Walks onto the plank from its near end along the centerline.
VelocityCommand along_plank(const RigidBody& self, const SeesawGeometry& g, double target_x,
                            double speed, const CommandBounds& b, Vec2 extra = {}) {
  const Vec2 approach{g.x_near - 0.7, g.y_center};
  const bool lined_up = std::abs(self.pos.y - g.y_center) < 0.05 &&
                        std::abs(wrap_angle(self.yaw)) < 0.2;
  if (self.pos.x < g.x_near + 0.05 && !lined_up) {
    if (self.pos.x > approach.x + 0.15) return drive(self, {-0.6, 0.0}, 0.0, b);
    return goto_pose(self, approach, 0.0, 1.4, b, extra);
  }
  const double dx = target_x - self.pos.x;
  const double vx = std::clamp(2.0 * dx, -speed, speed);
  const double vy = std::clamp(3.0 * (g.y_center - self.pos.y), -0.3, 0.3);
  return drive(self, {vx, vy}, 0.0, b);
}

void climb_seesaw_pair(const Task& task, const EpisodeState& st, std::span<VelocityCommand> out) {
  const SeesawGeometry& g = *task.geometry().seesaw;
  const CommandBounds& b = bounds(task);
  const RigidBody& anchor = agent(task, st, 0);
  const RigidBody& climber = agent(task, st, 1);
  const bool anchored = on_plank(g, anchor.pos, 0.15);
  // The climber waits short of the tipping arm until the near end is held.
  const double wait_x = g.pivot_x + 0.2;
  const double goal_x = g.x_far + 1.2;
  const bool climber_on = climber.pos.x > g.x_near + 0.9 && std::abs(climber.pos.y - g.y_center) < 0.3;
  out[1] = along_plank(climber, g, anchored ? goal_x : wait_x, 1.4, b,
                       climber_on ? Vec2{} : avoid(climber, anchor, 1.1));
  if (climber_on) {
    out[0] = along_plank(anchor, g, g.x_near + 0.3, 1.4, b);
  } else {
    out[0] = goto_pose(anchor, {g.x_near - 1.4, g.y_center + 1.6}, 0.0, 1.4, b,
                       avoid(anchor, climber, 1.1));
  }
}

void climb_seesaw_single(const Task& task, const EpisodeState& st, std::span<VelocityCommand> out) {
  const SeesawGeometry& g = *task.geometry().seesaw;
  const CommandBounds& b = bounds(task);
  out[1] = along_plank(agent(task, st, 1), g, g.x_far + 1.2, 1.4, b);
  out[0] = goto_pose(agent(task, st, 0), {g.x_near - 1.4, g.y_center + 1.6}, 0.0, 1.4, b,
                     avoid(agent(task, st, 0), agent(task, st, 1), 1.1));
}

Vec2 box_slot(const RigidBody& box, double r, double side) {
  return {box.pos.x - box.shape.half_w - r - 0.03, box.pos.y + side * (r + 0.02)};
}

bool at_slot(const RigidBody& self, Vec2 slot) {
  return norm(self.pos - slot) < 0.06 && std::abs(wrap_angle(self.yaw)) < 0.1;
}

bool in_contact_behind(const RigidBody& self, const RigidBody& box, Vec2 slot, double r) {
  return self.pos.x > box.pos.x - box.shape.half_w - r - 0.06 &&
         self.pos.x < box.pos.x - box.shape.half_w && std::abs(self.pos.y - slot.y) < 0.15;
}

// Pushes the box toward the gate from behind with both robots side by side.
void push_box_pair(const Task& task, const EpisodeState& st, std::span<VelocityCommand> out) {
  const TaskGeometry& geo = task.geometry();
  const CommandBounds& b = bounds(task);
  const RigidBody& box = body(st, task.roster().box);
  const double r = geo.robot_radius;
  const RigidBody& a0 = agent(task, st, 0);
  const RigidBody& a1 = agent(task, st, 1);
  const double side0 = a0.pos.y >= a1.pos.y ? 1.0 : -1.0;
  const double sides[2] = {side0, -side0};
  const Vec2 slots[2] = {box_slot(box, r, sides[0]), box_slot(box, r, sides[1])};
  const bool pushing = (at_slot(a0, slots[0]) || in_contact_behind(a0, box, slots[0], r)) &&
                       (at_slot(a1, slots[1]) || in_contact_behind(a1, box, slots[1], r));
  for (std::size_t i = 0; i < 2; ++i) {
    const RigidBody& self = i == 0 ? a0 : a1;
    const RigidBody& other = i == 0 ? a1 : a0;
    if (pushing) {
      const double ease = std::clamp(-sides[i] * 3.0 * wrap_angle(box.yaw), 0.0, 0.5);
      const double vy = std::clamp(2.0 * (slots[i].y - self.pos.y), -0.3, 0.3);
      out[i] = drive(self, {1.5 * (1.0 - ease), vy}, 0.0, b);
    } else {
      out[i] = goto_pose(self, slots[i], 0.0, 1.0, b, avoid(self, other, 0.72));
    }
  }
}

// One robot pushes the box at full command; the other stays away.
void push_box_single(const Task& task, const EpisodeState& st, std::span<VelocityCommand> out) {
  const CommandBounds& b = bounds(task);
  const RigidBody& box = body(st, task.roster().box);
  const RigidBody& self = agent(task, st, 0);
  const double r = task.geometry().robot_radius;
  const Vec2 slot = box_slot(box, r, 0.0);
  if (at_slot(self, slot) || in_contact_behind(self, box, slot, r)) {
    out[0] = drive(self, {1.5, std::clamp(2.0 * (slot.y - self.pos.y), -0.3, 0.3)}, 0.0, b);
  } else {
    out[0] = goto_pose(self, slot, 0.0, 1.0, b, avoid(self, agent(task, st, 1), 0.9));
  }
  out[1] = {};
}

// Dogs hold station behind the herd on the far side from the gate.
void herd(const Task& task, const EpisodeState& st, std::span<VelocityCommand> out) {
  const Vec2 gate = task.geometry().gate;
  const CommandBounds& b = bounds(task);
  Vec2 c;
  for (int id : task.roster().sheep) c += body(st, id).pos;
  c = c / static_cast<double>(task.roster().sheep.size());
  // Once the herd is lined up with the gate, aim through it.
  const Vec2 aim = c.x < gate.x - 1.0 ? Vec2{gate.x - 0.6, gate.y} : gate + Vec2{2.0, 0.0};
  Vec2 dir = aim - c;
  const double n = norm(dir);
  dir = n > 1e-9 ? dir / n : Vec2{1.0, 0.0};
  const Vec2 side = perp(dir);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const RigidBody& self = agent(task, st, i);
    const double s = i == 0 ? 1.0 : -1.0;
    const Vec2 station = c - 1.6 * dir + s * 0.7 * side;
    out[i] = goto_command(self, station, 0.6, b);
  }
}

// Agent 0 dribbles the ball at the goal; agent 1 trails as a screen.
void football_dribble(const Task& task, const EpisodeState& st, std::span<VelocityCommand> out) {
  const TaskGeometry& geo = task.geometry();
  const CommandBounds& b = bounds(task);
  const RigidBody& ball = body(st, task.roster().ball);
  Vec2 dir = geo.goal_pos - ball.pos;
  dir = dir / std::max(norm(dir), 1e-9);
  const double r = geo.robot_radius + ball.shape.radius;
  const RigidBody& a0 = agent(task, st, 0);
  const Vec2 behind = ball.pos - (r + 0.1) * dir;
  const Vec2 rel = a0.pos - ball.pos;
  const double along = dot(rel, dir);
  const double lateral = std::abs(cross(dir, rel));
  if (along < -0.2 && lateral < 0.15) {
    out[0] = goto_command(a0, ball.pos + 1.0 * dir, 1.0, b);
  } else if (along > -0.3 && lateral < r + 0.2) {
    // On the wrong side: circle around the ball.
    const Vec2 side = perp(dir) * (cross(dir, rel) >= 0.0 ? 1.0 : -1.0);
    out[0] = goto_command(a0, ball.pos + (r + 0.4) * side - 0.3 * dir, 1.0, b);
  } else {
    out[0] = goto_command(a0, behind - 0.2 * dir, 1.0, b);
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    out[i] = goto_command(agent(task, st, i), ball.pos - 1.2 * dir + perp(dir) * 1.0, 1.0, b);
  }
}

// Team A walks its robot into the opponent; team B stands still.
void sumo_pusher(const Task& task, const EpisodeState& st, std::span<VelocityCommand> out) {
  const CommandBounds& b = bounds(task);
  const RigidBody& self = agent(task, st, 0);
  const RigidBody& opp = agent(task, st, 1);
  const Vec2 d = opp.pos - self.pos;
  const double gap = norm(d) - 2.0 * task.geometry().robot_radius;
  const double speed = gap > 0.3 ? 0.8 : 1.2;
  out[0] = goto_command(self, opp.pos + d * (2.0 / std::max(norm(d), 1e-9)), speed, b);
  out[1] = {};
}

constexpr ScriptInfo kScripts[] = {
    {"narrow_gate_solver", TaskId::NarrowGate, narrow_gate_solver},
    {"climb_seesaw_pair", TaskId::ClimbSeesaw, climb_seesaw_pair},
    {"climb_seesaw_single", TaskId::ClimbSeesaw, climb_seesaw_single},
    {"sheepdog_easy_herder", TaskId::SheepdogEasy, herd},
    {"sheepdog_hard_herder", TaskId::SheepdogHard, herd},
    {"push_box_pair", TaskId::PushBox, push_box_pair},
    {"push_box_single", TaskId::PushBox, push_box_single},
    {"football_2v1_dribbler", TaskId::Football2v1, football_dribble},
    {"sumo_pusher", TaskId::Sumo, sumo_pusher},
};

}  // namespace

std::span<const ScriptInfo> scripts() { return kScripts; }

const ScriptInfo& find_script(std::string_view name, TaskId task) {
  for (const ScriptInfo& s : kScripts) {
    if (s.name != name) continue;
    if (s.task != task) {
      throw ConfigError("script '" + std::string(name) + "' drives " +
                        std::string(task_name(s.task)) + ", not " + std::string(task_name(task)));
    }
    return s;
  }
  std::string msg = "unknown script '" + std::string(name) + "'; available:";
  for (const ScriptInfo& s : kScripts) msg += " " + std::string(s.name);
  throw ConfigError(msg);
}

std::string PolicySpec::text() const {
  switch (kind) {
    case PolicyKind::Zero: return "zero";
    case PolicyKind::Random: return "random";
    case PolicyKind::Scripted: return "scripted:" + script;
  }
  return "zero";
}

PolicySpec parse_policy(std::string_view text) {
  if (text == "zero") return {PolicyKind::Zero, {}};
  if (text == "random") return {PolicyKind::Random, {}};
  if (text.starts_with("scripted:") && text.size() > 9) {
    return {PolicyKind::Scripted, std::string(text.substr(9))};
  }
  throw ConfigError("invalid policy '" + std::string(text) +
                    "'; expected zero, random or scripted:<name>");
}

}  // namespace mqe
