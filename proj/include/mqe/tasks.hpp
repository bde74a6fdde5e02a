#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqe/config.hpp"
#include "mqe/locomotion.hpp"
#include "mqe/npc.hpp"
#include "mqe/physics.hpp"
#include "mqe/terrain.hpp"

namespace mqe {

inline constexpr double kControlDt = 0.02;

enum class TaskId : std::uint8_t {
  NarrowGate,
  ClimbSeesaw,
  SheepdogEasy,
  SheepdogHard,
  PushBox,
  Football2v1,
  PushCylinder,
  RevolvingDoor,
  Sumo,
  TraverseBridge,
  Football1v1,
  Football2v2,
};

inline constexpr int kTaskCount = 12;

std::span<const TaskId> all_tasks();
std::string_view task_name(TaskId id);
/// Throws ConfigError listing the valid ids.
TaskId parse_task_id(std::string_view name);

enum class RewardKind : std::uint8_t { StateBased, ChangeBased };

enum class Measure : std::uint8_t {
  GateCrossing,
  GateDistance,
  AgentSpacing,
  Collision,
  Destination,
  Height,
  SeesawProgress,
  SeesawDistance,
  Fall,
  SheepCrossing,
  SheepGateDistance,
  SheepGateProximity,
  BoxCrossing,
  BoxGateDistance,
  Goal,
  BallGoalProximity,
  Win,
  CylinderAdvance,
  DoorProgress,
  RingMargin,
  BridgeProgress,
  BallAdvance,
};

struct RewardTerm {
  std::string name;
  RewardKind kind = RewardKind::StateBased;
  Measure measure = Measure::GateCrossing;
  double scale = 1.0;
  // Applied to each underlying quantity before the exponent and the scale.
  std::optional<std::array<double, 2>> clip;
  double exponent = 1.0;
};

std::string_view to_string(RewardKind kind);

enum class Role : std::uint8_t { Agent, Box, Ball, Cylinder, Door, Sheep, Defender };

struct EntitySpec {
  Role role = Role::Agent;
  int team = 0;
  SpawnRect spawn;
};

enum class Outcome : std::uint8_t {
  None,
  Success,
  Goal,
  OwnGoal,
  Timeout,
  Fallen,
  TeamAWin,
  TeamBWin,
  Draw,
};

std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view text);

/// Declarative task definition. Agents come first in `entities`.
struct TaskSpec {
  TaskId id = TaskId::NarrowGate;
  std::string name;
  bool collaborative = true;
  int n_teams = 1;
  int n_agents = 0;
  std::vector<int> team_of;
  std::vector<BlockSpec> blocks;
  std::vector<EntitySpec> entities;
  std::vector<RewardTerm> terms;
  int episode_len = 500;
};

/// Builds the spec with scales and dimensions taken from `cfg`.
TaskSpec make_task_spec(TaskId id, const EnvConfig& cfg);

/// Body ids by role in the world of a task.
struct Roster {
  std::vector<int> agents;
  std::vector<int> robots;  // agents followed by the defender if any
  std::vector<int> sheep;
  int box = -1;
  int ball = -1;
  int cylinder = -1;
  int door = -1;
  int defender = -1;
  int n_dynamic = 0;  // bodies before the static walls
};

/// Task-level geometry derived from the arena.
struct TaskGeometry {
  Vec2 gate;
  double gate_half_width = 0.0;
  Vec2 goal_pos;  // +x goal mouth center
  Vec2 goal_neg;
  double goal_half_width = 0.0;
  Vec2 ring_center;
  double ring_radius = 0.0;
  double baseline_neg = 0.0;
  double baseline_pos = 0.0;
  Vec2 bridge_near;
  Vec2 bridge_far;
  Vec2 door_target_a;  // a point past the door for each team
  Vec2 door_target_b;
  double door_clear = 0.5;  // distance past the door plane that counts as through
  std::optional<SeesawGeometry> seesaw;
  double platform_x = 0.0;  // destination starts here
  double platform_height = 0.0;
  double robot_radius = 0.0;
};

struct Spaces {
  int n_agents = 0;
  int n_teams = 1;
  std::vector<int> team_of;
  int obs_dim = 0;
  int privileged_obs_dim = 0;
  int action_dim = 3;
  std::array<double, 3> action_low{};
  std::array<double, 3> action_high{};
  int episode_len = 0;
};

/// One entry of the per-agent observation layout.
struct ObsSlot {
  enum class Kind : std::uint8_t { Ego, Body, Anchor, Scalar } kind = Kind::Body;
  std::string label;
  int width = 0;
};

/// Crossing/goal bookkeeping carried across steps of one episode.
struct TaskLatches {
  std::vector<std::uint8_t> crossed;  // per tracked entity (agents, sheep or box)
  std::vector<std::uint8_t> reached;  // per agent, destination latch
  int goal = 0;                       // +1 ball in +x goal, -1 in -x goal
  bool operator==(const TaskLatches&) const = default;
};

struct StepEvents {
  int collisions = 0;                // robot-robot contact onsets among agents
  std::vector<std::uint8_t> fell;    // per agent, fall onset this step
  std::vector<std::uint8_t> fallen;  // per agent, current status
};

struct Termination {
  bool done = false;
  Outcome outcome = Outcome::None;
};

class Task;

struct EpisodeState {
  WorldState world;
  WorldState prev;
  std::vector<RobotStatus> status;  // per roster.robots entry
  TaskLatches latches;
  StepEvents events;
  std::vector<std::uint8_t> pair_active;  // per agent pair, impulse above threshold last step
  int step = 0;
  Rng npc_rng;

  PhysicsScratch scratch;
  StepReport report;
  std::vector<Wrench> wrenches;
  std::vector<double> term_values;  // scaled team-A contribution per term
  std::vector<Vec2> herd_pos, dog_pos, herd_acc;
};

struct StepOutcome {
  Termination termination;
};

/// Immutable runtime for one task: spec, composed arena, roster, layout.
/// Shared read-only by every environment of a batch.
class Task {
 public:
  Task(TaskId id, const EnvConfig& cfg);

  const TaskSpec& spec() const { return spec_; }
  const EnvConfig& config() const { return cfg_; }
  const Arena& arena() const { return *arena_; }
  const std::shared_ptr<const Arena>& arena_ptr() const { return arena_; }
  const Roster& roster() const { return roster_; }
  const TaskGeometry& geometry() const { return geom_; }
  const std::vector<ObsSlot>& obs_layout() const { return layout_; }
  Spaces spaces() const;
  int obs_dim() const { return obs_dim_; }
  int privileged_obs_dim() const { return priv_dim_; }

  /// Fresh episode from the env's reset stream; npc noise is reseeded from it.
  void reset(EpisodeState& state, Rng& rng) const;

  /// Full control step: commands -> npc -> physics -> stability -> rewards ->
  /// termination. `rewards` has one entry per agent.
  StepOutcome step(EpisodeState& state, std::span<const VelocityCommand> actions,
                   std::span<double> rewards) const;

  void observe(const EpisodeState& state, int agent, std::span<double> out) const;
  void observe_privileged(const EpisodeState& state, std::span<double> out) const;

 private:
  void build_layout();

  TaskSpec spec_;
  EnvConfig cfg_;
  std::shared_ptr<const Arena> arena_;
  Roster roster_;
  TaskGeometry geom_;
  std::vector<RigidBody> templates_;
  std::vector<ObsSlot> layout_;
  // Per agent: body ids and anchor points observed after the ego block.
  std::vector<std::vector<int>> obs_bodies_;
  std::vector<std::vector<Vec2>> obs_anchors_;
  int n_scalars_ = 0;
  int obs_dim_ = 0;
  int priv_dim_ = 0;
};

/// Per-agent reward and per-term contributions for one transition.
/// Updates crossing/goal latches.
void compute_rewards(const Task& task, const WorldState& prev, const WorldState& cur,
                     const StepEvents& events, TaskLatches& latches, std::span<double> rewards,
                     std::span<double> term_values);

Termination check_termination(const Task& task, const WorldState& cur,
                              const TaskLatches& latches, const StepEvents& events, int step);

/// Competitive result from team A's view: +1 A wins, -1 B wins, 0 undecided,
/// 2 simultaneous (draw). Always 0 for collaborative tasks.
int competitive_result(const Task& task, const WorldState& cur, const TaskLatches& latches,
                       const StepEvents& events);

/// Direct pose-only observation used by unit tests and the layout audit.
void ego_relative(Vec2 ego_pos, double ego_yaw, std::span<const Vec2> points,
                  std::span<Vec2> out);

}  // namespace mqe
