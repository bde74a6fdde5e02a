#include "mqe/tasks.hpp"

#include <algorithm>
#include <cmath>

#include "mqe/kernels.hpp"

namespace mqe {

namespace {

constexpr TaskId kAllTasks[] = {
    TaskId::NarrowGate,    TaskId::ClimbSeesaw,   TaskId::SheepdogEasy, TaskId::SheepdogHard,
    TaskId::PushBox,       TaskId::Football2v1,   TaskId::PushCylinder, TaskId::RevolvingDoor,
    TaskId::Sumo,          TaskId::TraverseBridge, TaskId::Football1v1, TaskId::Football2v2,
};

constexpr std::string_view kNames[] = {
    "narrow_gate",    "climb_seesaw", "sheepdog_easy", "sheepdog_hard",
    "push_box",       "football_2v1", "push_cylinder", "revolving_door",
    "sumo",           "traverse_bridge", "football_1v1", "football_2v2",
};

constexpr double kYawA = 0.25 * kPi;

SpawnRect rect(double x_lo, double x_hi, double y_lo, double y_hi, double yaw_lo, double yaw_hi) {
  return {x_lo, x_hi, y_lo, y_hi, yaw_lo, yaw_hi};
}

SpawnRect team_rect(int team, double x_lo, double x_hi, double y_lo, double y_hi) {
  if (team == 0) return rect(x_lo, x_hi, y_lo, y_hi, -kYawA, kYawA);
  return rect(x_lo, x_hi, y_lo, y_hi, kPi - kYawA, kPi + kYawA);
}

bool is_football(TaskId id) {
  return id == TaskId::Football2v1 || id == TaskId::Football1v1 || id == TaskId::Football2v2;
}

double sq(double x) { return x * x; }

double dist(Vec2 a, Vec2 b) { return norm(a - b); }

}  // namespace

std::span<const TaskId> all_tasks() { return kAllTasks; }

std::string_view task_name(TaskId id) { return kNames[static_cast<int>(id)]; }

TaskId parse_task_id(std::string_view name) {
  for (TaskId id : kAllTasks)
    if (task_name(id) == name) return id;
  std::string msg = "unknown task '" + std::string(name) + "'; valid tasks:";
  for (TaskId id : kAllTasks) msg += " " + std::string(task_name(id));
  throw ConfigError(msg);
}

std::string_view to_string(RewardKind kind) {
  return kind == RewardKind::StateBased ? "state" : "change";
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::None: return "none";
    case Outcome::Success: return "success";
    case Outcome::Goal: return "goal";
    case Outcome::OwnGoal: return "own_goal";
    case Outcome::Timeout: return "timeout";
    case Outcome::Fallen: return "fallen";
    case Outcome::TeamAWin: return "team_a_win";
    case Outcome::TeamBWin: return "team_b_win";
    case Outcome::Draw: return "draw";
  }
  return "none";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (int i = 0; i <= static_cast<int>(Outcome::Draw); ++i) {
    const auto o = static_cast<Outcome>(i);
    if (to_string(o) == text) return o;
  }
  return std::nullopt;
}

TaskSpec make_task_spec(TaskId id, const EnvConfig& cfg) {
  const TerrainParams& t = cfg.terrain;
  TaskSpec s;
  s.id = id;
  s.name = std::string(task_name(id));
  s.episode_len = is_football(id) ? cfg.task.football_episode_len : cfg.task.episode_len;

  const double L = t.room_length;
  const double W = t.room_width;
  const double hy = 0.5 * W - 0.8;

  auto term = [&](const char* name, RewardKind kind, Measure m) {
    RewardTerm r;
    r.name = name;
    r.kind = kind;
    r.measure = m;
    r.scale = cfg.reward_scales.at(s.name + "." + name);
    s.terms.push_back(r);
    return &s.terms.back();
  };
  auto agents = [&](int team, int n, SpawnRect r) {
    for (int i = 0; i < n; ++i) s.entities.push_back({Role::Agent, team, r});
  };
  auto entity = [&](Role role, SpawnRect r) { s.entities.push_back({role, 0, r}); };
  auto gate_track = [&](double gate_width) {
    s.blocks = {BlockSpec::flat(L, W), BlockSpec::wall_with_gate(gate_width, 0.0, 1.0, W),
                BlockSpec::flat(L, W)};
  };
  auto spacing = [&]() {
    RewardTerm* r = term("agent_spacing", RewardKind::StateBased, Measure::AgentSpacing);
    r->clip = std::array<double, 2>{0.0, cfg.task.spacing_clip};
    r->exponent = 2.0;
  };

  switch (id) {
    case TaskId::NarrowGate:
      gate_track(t.gate_width);
      agents(0, 2, team_rect(0, 0.8, L - 0.8, -hy, hy));
      term("gate_crossing", RewardKind::StateBased, Measure::GateCrossing);
      term("gate_distance", RewardKind::ChangeBased, Measure::GateDistance);
      spacing();
      term("collision", RewardKind::StateBased, Measure::Collision);
      break;
    case TaskId::ClimbSeesaw:
      s.blocks = {BlockSpec::flat(L, W),
                  BlockSpec::seesaw(t.plank_len, t.plank_width, 0.5 * t.platform_height, W),
                  BlockSpec::platform(t.platform_height, 3.0, W)};
      agents(0, 2, team_rect(0, 0.8, L - 0.8, -hy, hy));
      term("destination", RewardKind::StateBased, Measure::Destination);
      term("height", RewardKind::StateBased, Measure::Height);
      term("seesaw_progress", RewardKind::ChangeBased, Measure::SeesawProgress);
      term("seesaw_distance", RewardKind::StateBased, Measure::SeesawDistance)->exponent = 2.0;
      term("collision", RewardKind::StateBased, Measure::Collision);
      term("fall", RewardKind::StateBased, Measure::Fall);
      spacing();
      break;
    case TaskId::SheepdogEasy:
      gate_track(t.sheep_gate_width);
      agents(0, 2, team_rect(0, 0.6, 1.6, -hy, hy));
      entity(Role::Sheep, rect(2.2, 3.2, -1.5, 1.5, -kPi, kPi));
      term("sheep_crossing", RewardKind::StateBased, Measure::SheepCrossing);
      term("sheep_gate_distance", RewardKind::ChangeBased, Measure::SheepGateDistance);
      break;
    case TaskId::SheepdogHard:
      gate_track(t.sheep_gate_width);
      agents(0, 2, team_rect(0, 0.5, 1.2, -hy, hy));
      for (int i = 0; i < 9; ++i) entity(Role::Sheep, rect(1.8, 3.6, -2.0, 2.0, -kPi, kPi));
      term("sheep_crossing", RewardKind::StateBased, Measure::SheepCrossing);
      term("sheep_gate_proximity", RewardKind::StateBased, Measure::SheepGateProximity);
      break;
    case TaskId::PushBox:
      gate_track(t.box_gate_width);
      agents(0, 2, team_rect(0, 0.6, 1.4, -2.0, 2.0));
      entity(Role::Box, rect(L - 1.6, L - 1.2, -0.3, 0.3, 0.0, 0.0));
      term("box_crossing", RewardKind::StateBased, Measure::BoxCrossing);
      term("box_gate_distance", RewardKind::ChangeBased, Measure::BoxGateDistance);
      break;
    case TaskId::Football2v1: {
      s.blocks = {BlockSpec::football_pitch(t.pitch_length, t.pitch_width, t.goal_width)};
      const double c = 0.5 * s.blocks[0].len_x;
      const double py = 0.5 * t.pitch_width - 0.7;
      agents(0, 2, team_rect(0, c - 3.5, c - 1.5, -py, py));
      entity(Role::Defender, rect(c + 1.5, c + 2.5, -0.5, 0.5, kPi, kPi));
      entity(Role::Ball, rect(c - 1.0, c - 0.5, -0.5, 0.5, 0.0, 0.0));
      term("goal", RewardKind::StateBased, Measure::Goal);
      term("ball_goal_proximity", RewardKind::StateBased, Measure::BallGoalProximity);
      break;
    }
    case TaskId::PushCylinder: {
      s.blocks = {BlockSpec::walled_arena(t.cylinder_arena_w, t.cylinder_arena_h)};
      const double c = 0.5 * t.cylinder_arena_w;
      const double py = 0.5 * t.cylinder_arena_h - 0.5;
      agents(0, 1, team_rect(0, c - 1.4, c - 1.0, -py, py));
      agents(1, 1, team_rect(1, c + 1.0, c + 1.4, -py, py));
      entity(Role::Cylinder, rect(c, c, 0.0, 0.0, 0.0, 0.0));
      term("win", RewardKind::StateBased, Measure::Win);
      term("cylinder_advance", RewardKind::ChangeBased, Measure::CylinderAdvance);
      break;
    }
    case TaskId::RevolvingDoor:
      gate_track(t.door_gate_width);
      agents(0, 1, team_rect(0, 0.8, L - 0.8, -hy, hy));
      agents(1, 1, team_rect(1, L + 1.8, 2.0 * L + 0.2, -hy, hy));
      entity(Role::Door, rect(0, 0, 0, 0, 0, 0));
      term("win", RewardKind::StateBased, Measure::Win);
      term("door_progress", RewardKind::ChangeBased, Measure::DoorProgress);
      break;
    case TaskId::Sumo: {
      const double extent = 2.0 * t.ring_radius + 2.0;
      s.blocks = {BlockSpec::sumo_ring(t.ring_radius, t.ring_height, extent)};
      const double c = 0.5 * extent;
      const double off = 0.55 * t.ring_radius;
      agents(0, 1, team_rect(0, c - off - 0.1, c - off + 0.1, -0.3, 0.3));
      agents(1, 1, team_rect(1, c + off - 0.1, c + off + 0.1, -0.3, 0.3));
      term("win", RewardKind::StateBased, Measure::Win);
      term("ring_margin", RewardKind::ChangeBased, Measure::RingMargin);
      break;
    }
    case TaskId::TraverseBridge:
      s.blocks = {BlockSpec::platform(t.deck_height, 2.0, 3.0),
                  BlockSpec::bridge(t.bridge_width, t.bridge_length, t.deck_height, 3.0),
                  BlockSpec::platform(t.deck_height, 2.0, 3.0)};
      agents(0, 1, team_rect(0, 0.5, 1.2, -0.4, 0.4));
      agents(1, 1, team_rect(1, 2.8 + t.bridge_length, 3.5 + t.bridge_length, -0.4, 0.4));
      term("win", RewardKind::StateBased, Measure::Win);
      term("bridge_progress", RewardKind::ChangeBased, Measure::BridgeProgress);
      break;
    case TaskId::Football1v1:
    case TaskId::Football2v2: {
      s.blocks = {BlockSpec::football_pitch(t.pitch_length, t.pitch_width, t.goal_width)};
      const double c = 0.5 * s.blocks[0].len_x;
      const double py = 0.5 * t.pitch_width - 0.7;
      const int n = id == TaskId::Football1v1 ? 1 : 2;
      agents(0, n, team_rect(0, c - 3.0, c - 1.5, -py, py));
      agents(1, n, team_rect(1, c + 1.5, c + 3.0, -py, py));
      entity(Role::Ball, rect(c - 0.1, c + 0.1, -0.1, 0.1, 0.0, 0.0));
      term("win", RewardKind::StateBased, Measure::Win);
      term("ball_advance", RewardKind::ChangeBased, Measure::BallAdvance);
      break;
    }
  }

  if (auto it = cfg.blocks.find(s.name); it != cfg.blocks.end()) {
    s.blocks = parse_block_list(it->second);
  }
  s.collaborative = static_cast<int>(id) < 6;
  s.n_teams = s.collaborative ? 1 : 2;
  for (const EntitySpec& e : s.entities) {
    if (e.role != Role::Agent) continue;
    ++s.n_agents;
    s.team_of.push_back(e.team);
  }
  return s;
}

void ego_relative(Vec2 ego_pos, double ego_yaw, std::span<const Vec2> points,
                  std::span<Vec2> out) {
  const double c = std::cos(ego_yaw);
  const double s = std::sin(ego_yaw);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2 r = points[i] - ego_pos;
    out[i] = {c * r.x + s * r.y, c * r.y - s * r.x};
  }
}

Task::Task(TaskId id, const EnvConfig& cfg) : spec_(make_task_spec(id, cfg)), cfg_(cfg) {
  arena_ = std::make_shared<const Arena>(compose_track(spec_.blocks, {0.0, 0.0}));
  const Arena& a = *arena_;
  const BodyParams& bp = cfg_.bodies;
  geom_.robot_radius = bp.robot_radius;

  auto block_of = [&](BlockKind kind) -> const PlacedBlock& {
    for (const PlacedBlock& pb : a.blocks)
      if (pb.spec.kind == kind) return pb;
    throw ConfigError(spec_.name + ": track needs a " + std::string(to_string(kind)) + " block");
  };

  switch (id) {
    case TaskId::NarrowGate:
    case TaskId::SheepdogEasy:
    case TaskId::SheepdogHard:
    case TaskId::PushBox:
    case TaskId::RevolvingDoor: {
      geom_.gate = a.anchor("gate_center");
      geom_.gate_half_width = 0.5 * block_of(BlockKind::WallWithGate).spec.gate_width;
      geom_.door_target_a = geom_.gate + Vec2{1.0, 0.0};
      geom_.door_target_b = geom_.gate - Vec2{1.0, 0.0};
      break;
    }
    case TaskId::ClimbSeesaw: {
      if (!a.seesaw) throw ConfigError(spec_.name + ": track needs a Seesaw block");
      geom_.seesaw = a.seesaw;
      geom_.platform_x = a.seesaw->x_far;
      geom_.platform_height = 2.0 * a.seesaw->pivot_height;
      (void)a.anchor("seesaw_center");
      (void)a.anchor("platform_edge");
      break;
    }
    case TaskId::Football2v1:
    case TaskId::Football1v1:
    case TaskId::Football2v2:
      geom_.goal_pos = a.anchor("goal_center");
      geom_.goal_neg = a.anchor("own_goal_center");
      geom_.goal_half_width = 0.5 * block_of(BlockKind::FootballPitch).spec.goal_width;
      break;
    case TaskId::PushCylinder:
      geom_.baseline_neg = a.anchor("baseline_neg").x;
      geom_.baseline_pos = a.anchor("baseline_pos").x;
      geom_.ring_center = a.anchor("arena_center");
      break;
    case TaskId::Sumo:
      geom_.ring_center = a.anchor("ring_center");
      geom_.ring_radius = block_of(BlockKind::SumoRing).spec.ring_radius;
      break;
    case TaskId::TraverseBridge:
      geom_.bridge_near = a.anchor("bridge_near");
      geom_.bridge_far = a.anchor("bridge_far");
      if (!(block_of(BlockKind::Bridge).spec.bridge_width < 4.0 * bp.robot_radius))
        throw ConfigError(spec_.name + ": bridge must admit a single robot only");
      break;
  }

  // Bodies in roster order: agents, defender, objects, door, sheep, walls.
  auto add = [&](RigidBody b) {
    b.id = static_cast<int>(templates_.size());
    templates_.push_back(b);
    return b.id;
  };
  auto robot_body = [&](BodyClass cls) {
    RigidBody b;
    b.shape = Shape::disc(bp.robot_radius);
    b.mass = bp.robot_mass;
    b.inertia = 0.5 * bp.robot_mass * sq(bp.robot_radius);
    b.friction_mu = cfg_.locomotion.foot_mu;
    b.body_class = cls;
    return b;
  };
  for (const EntitySpec& e : spec_.entities) {
    RigidBody b;
    switch (e.role) {
      case Role::Agent:
        roster_.agents.push_back(add(robot_body(BodyClass::Robot)));
        break;
      case Role::Defender:
        roster_.defender = add(robot_body(BodyClass::Npc));
        break;
      case Role::Box:
        b.shape = Shape::rect(bp.box_half, bp.box_half);
        b.mass = bp.box_mass;
        b.inertia = bp.box_mass * (2.0 * sq(bp.box_half)) / 3.0;
        b.friction_mu = bp.box_mu;
        b.ground_friction = true;
        roster_.box = add(b);
        break;
      case Role::Ball:
        b.shape = Shape::disc(bp.ball_radius);
        b.mass = bp.ball_mass;
        b.inertia = 0.5 * bp.ball_mass * sq(bp.ball_radius);
        b.friction_mu = bp.ball_mu;
        b.ground_friction = true;
        roster_.ball = add(b);
        break;
      case Role::Cylinder:
        b.shape = Shape::disc(bp.cylinder_radius);
        b.mass = bp.cylinder_mass;
        b.inertia = 0.5 * bp.cylinder_mass * sq(bp.cylinder_radius);
        b.friction_mu = bp.cylinder_mu;
        b.ground_friction = true;
        b.lock_y = true;
        roster_.cylinder = add(b);
        break;
      case Role::Door: {
        const double half_len = geom_.gate_half_width - 0.05;
        b.shape = Shape::rect(half_len, 0.04);
        b.mass = 1.0;
        b.inertia = bp.door_inertia;
        b.friction_mu = 0.3;
        b.body_class = BodyClass::HingeLink;
        b.pos = geom_.gate;
        b.yaw = 0.5 * kPi;
        roster_.door = add(b);
        break;
      }
      case Role::Sheep:
        b.shape = Shape::disc(bp.sheep_radius);
        b.mass = bp.sheep_mass;
        b.inertia = 0.5 * bp.sheep_mass * sq(bp.sheep_radius);
        b.friction_mu = bp.sheep_mu;
        b.body_class = BodyClass::Npc;
        roster_.sheep.push_back(add(b));
        break;
    }
  }
  roster_.robots = roster_.agents;
  if (roster_.defender >= 0) roster_.robots.push_back(roster_.defender);
  roster_.n_dynamic = static_cast<int>(templates_.size());
  for (RigidBody& w : wall_bodies(a, roster_.n_dynamic)) templates_.push_back(w);

  build_layout();
}

void Task::build_layout() {
  const int n = spec_.n_agents;
  obs_bodies_.assign(static_cast<std::size_t>(n), {});
  obs_anchors_.assign(static_cast<std::size_t>(n), {});
  layout_.clear();
  layout_.push_back({ObsSlot::Kind::Ego, "ego", 7});

  // Layout labels are written for agent 0; other agents follow the same order.
  for (int i = 0; i < n; ++i) {
    auto& bodies = obs_bodies_[static_cast<std::size_t>(i)];
    const int team = spec_.team_of[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j)
      if (j != i && spec_.team_of[static_cast<std::size_t>(j)] == team)
        bodies.push_back(roster_.agents[static_cast<std::size_t>(j)]);
    for (int j = 0; j < n; ++j)
      if (spec_.team_of[static_cast<std::size_t>(j)] != team)
        bodies.push_back(roster_.agents[static_cast<std::size_t>(j)]);
    for (int id : {roster_.box, roster_.ball, roster_.cylinder, roster_.door})
      if (id >= 0) bodies.push_back(id);
    if (roster_.defender >= 0) bodies.push_back(roster_.defender);
    for (int id : roster_.sheep) bodies.push_back(id);

    auto& anchors = obs_anchors_[static_cast<std::size_t>(i)];
    const bool a_side = team == 0;
    switch (spec_.id) {
      case TaskId::NarrowGate:
      case TaskId::SheepdogEasy:
      case TaskId::SheepdogHard:
      case TaskId::PushBox:
        anchors = {geom_.gate};
        break;
      case TaskId::ClimbSeesaw:
        anchors = {arena_->anchor("seesaw_center"), arena_->anchor("platform_edge")};
        break;
      case TaskId::Football2v1:
        anchors = {geom_.goal_pos};
        break;
      case TaskId::PushCylinder: {
        const double yc = geom_.ring_center.y;
        anchors = {a_side ? Vec2{geom_.baseline_pos, yc} : Vec2{geom_.baseline_neg, yc}};
        break;
      }
      case TaskId::RevolvingDoor:
        anchors = {a_side ? geom_.door_target_a : geom_.door_target_b};
        break;
      case TaskId::Sumo:
        anchors = {geom_.ring_center};
        break;
      case TaskId::TraverseBridge:
        anchors = {a_side ? geom_.bridge_far : geom_.bridge_near};
        break;
      case TaskId::Football1v1:
      case TaskId::Football2v2:
        anchors = a_side ? std::vector<Vec2>{geom_.goal_pos, geom_.goal_neg}
                         : std::vector<Vec2>{geom_.goal_neg, geom_.goal_pos};
        break;
    }
  }

  auto body_label = [&](int id) -> std::string {
    for (std::size_t k = 0; k < roster_.agents.size(); ++k) {
      if (roster_.agents[k] != id) continue;
      return (spec_.team_of[k] == spec_.team_of[0] ? "teammate_" : "opponent_") +
             std::to_string(k);
    }
    if (id == roster_.box) return "box";
    if (id == roster_.ball) return "ball";
    if (id == roster_.cylinder) return "cylinder";
    if (id == roster_.door) return "door";
    if (id == roster_.defender) return "defender";
    for (std::size_t k = 0; k < roster_.sheep.size(); ++k)
      if (roster_.sheep[k] == id) return "sheep_" + std::to_string(k);
    return "body";
  };
  for (int id : obs_bodies_[0]) layout_.push_back({ObsSlot::Kind::Body, body_label(id), 4});
  static const char* kAnchorLabels[][2] = {{"gate_center", ""},
                                           {"seesaw_center", "platform_edge"},
                                           {"gate_center", ""},
                                           {"gate_center", ""},
                                           {"gate_center", ""},
                                           {"goal_center", ""},
                                           {"target_baseline", ""},
                                           {"door_target", ""},
                                           {"ring_center", ""},
                                           {"bridge_target", ""},
                                           {"attack_goal", "defend_goal"},
                                           {"attack_goal", "defend_goal"}};
  for (std::size_t k = 0; k < obs_anchors_[0].size(); ++k)
    layout_.push_back({ObsSlot::Kind::Anchor, kAnchorLabels[static_cast<int>(spec_.id)][k], 2});
  n_scalars_ = 0;
  if (spec_.id == TaskId::ClimbSeesaw) {
    layout_.push_back({ObsSlot::Kind::Scalar, "seesaw_angle", 1});
    n_scalars_ = 1;
  }
  if (spec_.id == TaskId::RevolvingDoor) {
    layout_.push_back({ObsSlot::Kind::Scalar, "door_cos", 1});
    layout_.push_back({ObsSlot::Kind::Scalar, "door_sin", 1});
    n_scalars_ = 2;
  }
  obs_dim_ = 0;
  for (const ObsSlot& s : layout_) obs_dim_ += s.width;

  int n_joints = 0;
  if (arena_->seesaw) ++n_joints;
  if (roster_.door >= 0) ++n_joints;
  priv_dim_ = 8 * roster_.n_dynamic + n_joints + n + 1;
}

Spaces Task::spaces() const {
  Spaces s;
  s.n_agents = spec_.n_agents;
  s.n_teams = spec_.n_teams;
  s.team_of = spec_.team_of;
  s.obs_dim = obs_dim_;
  s.privileged_obs_dim = priv_dim_;
  const CommandBounds& b = cfg_.locomotion.bounds;
  s.action_low = {-b.vx_max, -b.vy_max, -b.yaw_max};
  s.action_high = {b.vx_max, b.vy_max, b.yaw_max};
  s.episode_len = spec_.episode_len;
  return s;
}

void Task::reset(EpisodeState& st, Rng& rng) const {
  WorldState& w = st.world;
  w.bodies = templates_;
  w.joints.clear();
  w.time = 0.0;
  w.step_count = 0;
  w.arena = arena_;
  w.params = cfg_.physics;

  if (arena_->seesaw) {
    const SeesawGeometry& g = *arena_->seesaw;
    HingeJoint j;
    j.axis = HingeAxis::Horizontal;
    j.pivot_x = g.pivot_x;
    j.pivot_y = g.y_center;
    j.pivot_z = g.pivot_height;
    j.angle = g.max_angle;
    j.lo = -g.max_angle;
    j.hi = g.max_angle;
    j.damping = cfg_.bodies.plank_damping;
    j.inertia = cfg_.bodies.plank_inertia;
    j.imbalance_torque = cfg_.bodies.robot_mass * cfg_.physics.gravity *
                         cfg_.bodies.plank_counterweight_arm;
    w.joints.push_back(j);
  }
  if (roster_.door >= 0) {
    HingeJoint j;
    j.link_body = roster_.door;
    j.axis = HingeAxis::Vertical;
    j.pivot_x = geom_.gate.x;
    j.pivot_y = geom_.gate.y;
    j.angle = 0.5 * kPi;
    j.damping = cfg_.bodies.door_damping;
    j.inertia = cfg_.bodies.door_inertia;
    w.joints.push_back(j);
  }

  std::vector<SpawnRect> regions;
  std::vector<double> radii;
  std::vector<int> ids;
  for (std::size_t k = 0; k < spec_.entities.size(); ++k) {
    if (spec_.entities[k].role == Role::Door) continue;
    regions.push_back(spec_.entities[k].spawn);
    radii.push_back(w.bodies[k].shape.bound_radius());
    ids.push_back(static_cast<int>(k));
  }
  const std::vector<Pose> poses = spawn_layout(regions, radii, 0.5 * cfg_.bodies.robot_radius, rng);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    RigidBody& b = w.bodies[static_cast<std::size_t>(ids[k])];
    b.pos = poses[k].pos;
    b.yaw = poses[k].yaw;
  }
  for (int i = 0; i < roster_.n_dynamic; ++i) {
    RigidBody& b = w.bodies[static_cast<std::size_t>(i)];
    const double z = w.support(b.pos);
    b.z = std::isfinite(z) ? z : kVoidDepth;
  }

  st.npc_rng = Rng(rng.next_u64());
  st.status.assign(roster_.robots.size(), RobotStatus{});
  st.latches = TaskLatches{};
  std::size_t tracked = 0;
  switch (spec_.id) {
    case TaskId::NarrowGate: tracked = roster_.agents.size(); break;
    case TaskId::SheepdogEasy:
    case TaskId::SheepdogHard: tracked = roster_.sheep.size(); break;
    case TaskId::PushBox: tracked = 1; break;
    default: break;
  }
  st.latches.crossed.assign(tracked, 0);
  st.latches.reached.assign(roster_.agents.size(), 0);
  st.events.collisions = 0;
  st.events.fell.assign(roster_.agents.size(), 0);
  st.events.fallen.assign(roster_.agents.size(), 0);
  const std::size_t na = roster_.agents.size();
  st.pair_active.assign(na * (na - 1) / 2, 0);
  st.step = 0;
  st.wrenches.assign(w.bodies.size(), Wrench{});
  st.term_values.assign(spec_.terms.size(), 0.0);
  st.herd_pos.resize(roster_.sheep.size());
  st.herd_acc.resize(roster_.sheep.size());
  st.dog_pos.resize(roster_.agents.size());
  st.prev = w;
}

StepOutcome Task::step(EpisodeState& st, std::span<const VelocityCommand> actions,
                       std::span<double> rewards) const {
  WorldState& w = st.world;
  st.prev.bodies = w.bodies;
  st.prev.joints = w.joints;
  st.prev.time = w.time;
  st.prev.step_count = w.step_count;

  std::fill(st.wrenches.begin(), st.wrenches.end(), Wrench{});
  const LocomotionParams& lp = cfg_.locomotion;
  for (std::size_t i = 0; i < roster_.agents.size(); ++i) {
    const int id = roster_.agents[i];
    st.wrenches[static_cast<std::size_t>(id)] =
        track_command(w.bodies[static_cast<std::size_t>(id)], actions[i], kControlDt, lp,
                      st.status[i].upright);
  }
  if (roster_.defender >= 0) {
    DefenderParams dp;
    dp.speed = cfg_.task.defender_speed;
    dp.goal_anchor = geom_.goal_pos;
    const RigidBody& self = w.bodies[static_cast<std::size_t>(roster_.defender)];
    const VelocityCommand cmd =
        defender_policy(w.bodies[static_cast<std::size_t>(roster_.ball)], dp, self, lp.bounds);
    st.wrenches[static_cast<std::size_t>(roster_.defender)] =
        track_command(self, cmd, kControlDt, lp, st.status.back().upright);
  }
  if (!roster_.sheep.empty()) {
    for (std::size_t k = 0; k < roster_.sheep.size(); ++k)
      st.herd_pos[k] = w.bodies[static_cast<std::size_t>(roster_.sheep[k])].pos;
    for (std::size_t k = 0; k < roster_.agents.size(); ++k)
      st.dog_pos[k] = w.bodies[static_cast<std::size_t>(roster_.agents[k])].pos;
    herd_policy(st.herd_pos, st.dog_pos, cfg_.sheep, st.npc_rng, st.herd_acc);
    for (std::size_t k = 0; k < roster_.sheep.size(); ++k) {
      const int id = roster_.sheep[k];
      st.wrenches[static_cast<std::size_t>(id)].force =
          st.herd_acc[k] * w.bodies[static_cast<std::size_t>(id)].mass;
    }
  }

  step_world(w, st.wrenches, kControlDt, st.scratch, &st.report, roster_.robots);

  for (int id : roster_.sheep) {
    RigidBody& b = w.bodies[static_cast<std::size_t>(id)];
    const double v = norm(b.vel);
    if (v > cfg_.sheep.v_max) b.vel = b.vel * (cfg_.sheep.v_max / v);
  }

  const std::size_t na = roster_.agents.size();
  for (std::size_t k = 0; k < roster_.robots.size(); ++k) {
    RigidBody& b = w.bodies[static_cast<std::size_t>(roster_.robots[k])];
    const bool was_up = st.status[k].upright;
    st.status[k] = update_stability(b, st.status[k], w, st.report.robot_impulse[k], kControlDt, lp);
    if (k < na) {
      st.events.fell[k] = was_up && !st.status[k].upright;
      st.events.fallen[k] = !st.status[k].upright;
    }
  }

  // Collision onsets among agents (the agents lead the robot list).
  const std::size_t nr = roster_.robots.size();
  st.events.collisions = 0;
  std::size_t pk = 0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = i + 1; j < na; ++j, ++pk) {
      const double imp = st.report.robot_pair_impulse[pair_index(i, j, nr)];
      const bool active = imp > cfg_.task.collision_impulse;
      if (active && !st.pair_active[pk]) ++st.events.collisions;
      st.pair_active[pk] = active;
    }
  }

  compute_rewards(*this, st.prev, w, st.events, st.latches, rewards, st.term_values);
  ++st.step;
  return {check_termination(*this, w, st.latches, st.events, st.step)};
}

void Task::observe(const EpisodeState& st, int agent, std::span<double> out) const {
  if (agent < 0 || agent >= spec_.n_agents) {
    throw Fault("observe: unknown agent " + std::to_string(agent) + " for task " + spec_.name);
  }
  if (out.size() != static_cast<std::size_t>(obs_dim_)) {
    throw Fault("observe: buffer has " + std::to_string(out.size()) + " entries, expected " +
                std::to_string(obs_dim_));
  }
  const WorldState& w = st.world;
  const RigidBody& ego = w.bodies[static_cast<std::size_t>(roster_.agents[static_cast<std::size_t>(agent)])];
  const double c = std::cos(ego.yaw);
  const double s = std::sin(ego.yaw);
  out[0] = ego.pos.x;
  out[1] = ego.pos.y;
  out[2] = c;
  out[3] = s;
  out[4] = ego.vel.x;
  out[5] = ego.vel.y;
  out[6] = ego.yaw_rate;

  const auto& bodies = obs_bodies_[static_cast<std::size_t>(agent)];
  const auto& anchors = obs_anchors_[static_cast<std::size_t>(agent)];
  const std::size_t nb = bodies.size();
  const std::size_t np = nb + anchors.size();
  thread_local std::vector<double> px, py, vx, vy, ox, oy, ovx, ovy;
  px.resize(np);
  py.resize(np);
  ox.resize(np);
  oy.resize(np);
  vx.resize(nb);
  vy.resize(nb);
  ovx.resize(nb);
  ovy.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const RigidBody& b = w.bodies[static_cast<std::size_t>(bodies[k])];
    px[k] = b.pos.x;
    py[k] = b.pos.y;
    vx[k] = b.vel.x;
    vy[k] = b.vel.y;
  }
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    px[nb + k] = anchors[k].x;
    py[nb + k] = anchors[k].y;
  }
  const kernels::KernelTable& kt = kernels::active();
  kt.ego_transform(px.data(), py.data(), np, ego.pos.x, ego.pos.y, c, s, ox.data(), oy.data());
  kt.ego_transform(vx.data(), vy.data(), nb, ego.vel.x, ego.vel.y, c, s, ovx.data(), ovy.data());

  std::size_t o = 7;
  for (std::size_t k = 0; k < nb; ++k) {
    out[o++] = ox[k];
    out[o++] = oy[k];
    out[o++] = ovx[k];
    out[o++] = ovy[k];
  }
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    out[o++] = ox[nb + k];
    out[o++] = oy[nb + k];
  }
  if (spec_.id == TaskId::ClimbSeesaw) out[o++] = w.seesaw_angle();
  if (spec_.id == TaskId::RevolvingDoor) {
    const double a = w.bodies[static_cast<std::size_t>(roster_.door)].yaw;
    out[o++] = std::cos(a);
    out[o++] = std::sin(a);
  }
}

void Task::observe_privileged(const EpisodeState& st, std::span<double> out) const {
  if (out.size() != static_cast<std::size_t>(priv_dim_)) {
    throw Fault("observe_privileged: buffer has " + std::to_string(out.size()) +
                " entries, expected " + std::to_string(priv_dim_));
  }
  const WorldState& w = st.world;
  std::size_t o = 0;
  for (int i = 0; i < roster_.n_dynamic; ++i) {
    const RigidBody& b = w.bodies[static_cast<std::size_t>(i)];
    out[o++] = b.pos.x;
    out[o++] = b.pos.y;
    out[o++] = std::cos(b.yaw);
    out[o++] = std::sin(b.yaw);
    out[o++] = b.vel.x;
    out[o++] = b.vel.y;
    out[o++] = b.yaw_rate;
    out[o++] = b.z;
  }
  for (const HingeJoint& j : w.joints) out[o++] = j.angle;
  for (std::size_t k = 0; k < roster_.agents.size(); ++k) out[o++] = st.status[k].upright ? 1.0 : 0.0;
  out[o++] = static_cast<double>(st.step) / static_cast<double>(spec_.episode_len);
}

namespace {

struct Frame {
  const Task& task;
  const WorldState& w;
  Vec2 pos(int id) const { return w.bodies[static_cast<std::size_t>(id)].pos; }
  double z(int id) const { return w.bodies[static_cast<std::size_t>(id)].z; }
};

double team_sum(const Task& task, const WorldState& w, int team, auto&& f) {
  double acc = 0.0;
  const auto& agents = task.roster().agents;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (task.spec().team_of[i] != team) continue;
    acc += f(w.bodies[static_cast<std::size_t>(agents[i])]);
  }
  return acc;
}

double seesaw_progress(const SeesawGeometry& g, Vec2 p) {
  if (std::abs(p.y - g.y_center) > g.half_width && p.x < g.x_far) return 0.0;
  return std::clamp(p.x - g.x_near, 0.0, g.x_far - g.x_near);
}

double distance_to_plank(const SeesawGeometry& g, Vec2 p) {
  const double dx = std::max({g.x_near - p.x, 0.0, p.x - g.x_far});
  const double dy = std::max(std::abs(p.y - g.y_center) - g.half_width, 0.0);
  return std::sqrt(dx * dx + dy * dy);
}

double shaped(const RewardTerm& t, double x) {
  if (t.clip) x = std::clamp(x, (*t.clip)[0], (*t.clip)[1]);
  if (t.exponent == 2.0) return x * x;
  if (t.exponent == 1.0) return x;
  return std::pow(x, t.exponent);
}

}  // namespace

int competitive_result(const Task& task, const WorldState& cur, const TaskLatches& latches,
                       const StepEvents& events) {
  const TaskSpec& spec = task.spec();
  if (spec.collaborative) return 0;
  const TaskGeometry& g = task.geometry();
  const Roster& ro = task.roster();
  bool a = false;
  bool b = false;
  auto any_team = [&](int team, auto&& pred) {
    for (std::size_t i = 0; i < ro.agents.size(); ++i) {
      if (spec.team_of[i] != team || events.fallen[i]) continue;
      if (pred(cur.bodies[static_cast<std::size_t>(ro.agents[i])])) return true;
    }
    return false;
  };
  switch (spec.id) {
    case TaskId::PushCylinder: {
      const double x = cur.bodies[static_cast<std::size_t>(ro.cylinder)].pos.x;
      a = x > g.baseline_pos;
      b = x < g.baseline_neg;
      break;
    }
    case TaskId::RevolvingDoor:
      a = any_team(0, [&](const RigidBody& r) { return r.pos.x > g.gate.x + g.door_clear; });
      b = any_team(1, [&](const RigidBody& r) { return r.pos.x < g.gate.x - g.door_clear; });
      break;
    case TaskId::Sumo: {
      auto out_of_ring = [&](int team) {
        for (std::size_t i = 0; i < ro.agents.size(); ++i) {
          if (spec.team_of[i] != team) continue;
          const RigidBody& r = cur.bodies[static_cast<std::size_t>(ro.agents[i])];
          if (events.fallen[i] || dist(r.pos, g.ring_center) > g.ring_radius) return true;
        }
        return false;
      };
      a = out_of_ring(1);
      b = out_of_ring(0);
      break;
    }
    case TaskId::TraverseBridge:
      a = any_team(0, [&](const RigidBody& r) { return r.pos.x >= g.bridge_far.x + g.robot_radius; });
      b = any_team(1, [&](const RigidBody& r) { return r.pos.x <= g.bridge_near.x - g.robot_radius; });
      break;
    case TaskId::Football1v1:
    case TaskId::Football2v2:
      a = latches.goal == 1;
      b = latches.goal == -1;
      break;
    default:
      break;
  }
  bool all_a = true;
  bool all_b = true;
  for (std::size_t i = 0; i < ro.agents.size(); ++i) {
    if (!events.fallen[i]) (spec.team_of[i] == 0 ? all_a : all_b) = false;
  }
  if (all_b) a = true;
  if (all_a) b = true;
  if (a && b) return 2;
  if (a) return 1;
  if (b) return -1;
  return 0;
}

void compute_rewards(const Task& task, const WorldState& prev, const WorldState& cur,
                     const StepEvents& events, TaskLatches& latches, std::span<double> rewards,
                     std::span<double> term_values) {
  const TaskSpec& spec = task.spec();
  const TaskGeometry& g = task.geometry();
  const Roster& ro = task.roster();
  const Frame P{task, prev};
  const Frame C{task, cur};

  // Latch updates.
  int new_crossings = 0;
  auto cross = [&](std::size_t slot, int id) {
    if (latches.crossed[slot]) return;
    const Vec2 a = P.pos(id);
    const Vec2 b = C.pos(id);
    if (a.x <= g.gate.x && b.x > g.gate.x && std::abs(b.y - g.gate.y) <= g.gate_half_width) {
      latches.crossed[slot] = 1;
      ++new_crossings;
    }
  };
  switch (spec.id) {
    case TaskId::NarrowGate:
      for (std::size_t i = 0; i < ro.agents.size(); ++i) cross(i, ro.agents[i]);
      break;
    case TaskId::SheepdogEasy:
    case TaskId::SheepdogHard:
      for (std::size_t i = 0; i < ro.sheep.size(); ++i) cross(i, ro.sheep[i]);
      break;
    case TaskId::PushBox:
      cross(0, ro.box);
      break;
    default:
      break;
  }
  int new_reached = 0;
  if (spec.id == TaskId::ClimbSeesaw) {
    for (std::size_t i = 0; i < ro.agents.size(); ++i) {
      if (latches.reached[i] || events.fallen[i]) continue;
      const int id = ro.agents[i];
      if (C.pos(id).x >= g.platform_x + g.robot_radius && C.z(id) >= g.platform_height - 0.05) {
        latches.reached[i] = 1;
        ++new_reached;
      }
    }
  }
  int new_goal = 0;
  if (ro.ball >= 0 && latches.goal == 0) {
    const Vec2 b = C.pos(ro.ball);
    if (b.x >= g.goal_pos.x && std::abs(b.y - g.goal_pos.y) <= g.goal_half_width) new_goal = 1;
    if (b.x <= g.goal_neg.x && std::abs(b.y - g.goal_neg.y) <= g.goal_half_width) new_goal = -1;
    latches.goal = new_goal;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < spec.terms.size(); ++k) {
    const RewardTerm& t = spec.terms[k];
    double v = 0.0;
    switch (t.measure) {
      case Measure::GateCrossing:
      case Measure::SheepCrossing:
      case Measure::BoxCrossing:
        v = new_crossings;
        break;
      case Measure::GateDistance:
        for (int id : ro.agents) v += shaped(t, dist(P.pos(id), g.gate) - dist(C.pos(id), g.gate));
        break;
      case Measure::AgentSpacing:
        for (std::size_t i = 0; i < ro.agents.size(); ++i)
          for (std::size_t j = i + 1; j < ro.agents.size(); ++j)
            v += shaped(t, dist(C.pos(ro.agents[i]), C.pos(ro.agents[j])));
        break;
      case Measure::Collision:
        v = events.collisions;
        break;
      case Measure::Destination:
        v = new_reached;
        break;
      case Measure::Height:
        for (int id : ro.agents) v += shaped(t, std::max(C.z(id), 0.0));
        break;
      case Measure::SeesawProgress:
        for (int id : ro.agents)
          v += shaped(t, seesaw_progress(*g.seesaw, C.pos(id)) -
                             seesaw_progress(*g.seesaw, P.pos(id)));
        break;
      case Measure::SeesawDistance:
        for (int id : ro.agents) v += shaped(t, distance_to_plank(*g.seesaw, C.pos(id)));
        break;
      case Measure::Fall:
        for (std::uint8_t f : events.fell) v += f;
        break;
      case Measure::SheepGateDistance:
        for (int id : ro.sheep) v += shaped(t, dist(P.pos(id), g.gate) - dist(C.pos(id), g.gate));
        break;
      case Measure::SheepGateProximity:
        for (int id : ro.sheep) v += shaped(t, std::exp(-dist(C.pos(id), g.gate)));
        break;
      case Measure::BoxGateDistance:
        v = shaped(t, dist(P.pos(ro.box), g.gate) - dist(C.pos(ro.box), g.gate));
        break;
      case Measure::Goal:
        v = new_goal == 1 ? 1.0 : 0.0;
        break;
      case Measure::BallGoalProximity:
        v = shaped(t, std::exp(-dist(C.pos(ro.ball), g.goal_pos)));
        break;
      case Measure::Win: {
        const int r = competitive_result(task, cur, latches, events);
        v = r == 1 ? 1.0 : (r == -1 ? -1.0 : 0.0);
        break;
      }
      case Measure::CylinderAdvance:
        v = shaped(t, C.pos(ro.cylinder).x - P.pos(ro.cylinder).x);
        break;
      case Measure::DoorProgress: {
        auto m = [&](const WorldState& w) {
          return -team_sum(task, w, 0, [&](const RigidBody& r) { return dist(r.pos, g.door_target_a); }) +
                 team_sum(task, w, 1, [&](const RigidBody& r) { return dist(r.pos, g.door_target_b); });
        };
        v = shaped(t, m(cur) - m(prev));
        break;
      }
      case Measure::RingMargin: {
        auto m = [&](const WorldState& w) {
          return team_sum(task, w, 1, [&](const RigidBody& r) { return dist(r.pos, g.ring_center); }) -
                 team_sum(task, w, 0, [&](const RigidBody& r) { return dist(r.pos, g.ring_center); });
        };
        v = shaped(t, m(cur) - m(prev));
        break;
      }
      case Measure::BridgeProgress: {
        auto m = [&](const WorldState& w) {
          return team_sum(task, w, 0, [](const RigidBody& r) { return r.pos.x; }) +
                 team_sum(task, w, 1, [](const RigidBody& r) { return r.pos.x; });
        };
        v = shaped(t, m(cur) - m(prev));
        break;
      }
      case Measure::BallAdvance:
        v = shaped(t, C.pos(ro.ball).x - P.pos(ro.ball).x);
        break;
    }
    const double contribution = t.scale * v;
    term_values[k] = contribution;
    total += contribution;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    rewards[i] = spec.team_of[i] == 0 ? total : -total;
  }
}

Termination check_termination(const Task& task, const WorldState& cur,
                              const TaskLatches& latches, const StepEvents& events, int step) {
  const TaskSpec& spec = task.spec();
  auto all = [](const std::vector<std::uint8_t>& v) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [](std::uint8_t x) { return x != 0; });
  };
  auto any = [](const std::vector<std::uint8_t>& v) {
    return std::any_of(v.begin(), v.end(), [](std::uint8_t x) { return x != 0; });
  };
  if (spec.collaborative) {
    switch (spec.id) {
      case TaskId::NarrowGate:
      case TaskId::SheepdogEasy:
      case TaskId::SheepdogHard:
      case TaskId::PushBox:
        if (all(latches.crossed)) return {true, Outcome::Success};
        break;
      case TaskId::ClimbSeesaw:
        if (any(latches.reached)) return {true, Outcome::Success};
        break;
      case TaskId::Football2v1:
        if (latches.goal == 1) return {true, Outcome::Goal};
        if (latches.goal == -1) return {true, Outcome::OwnGoal};
        break;
      default:
        break;
    }
    if (all(events.fallen)) return {true, Outcome::Fallen};
  } else {
    switch (competitive_result(task, cur, latches, events)) {
      case 1: return {true, Outcome::TeamAWin};
      case -1: return {true, Outcome::TeamBWin};
      case 2: return {true, Outcome::Draw};
      default: break;
    }
  }
  if (step >= spec.episode_len) return {true, Outcome::Timeout};
  return {};
}

}  // namespace mqe
