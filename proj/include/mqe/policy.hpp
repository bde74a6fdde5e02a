#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqe/tasks.hpp"

namespace mqe {

/// Scripted controller: a pure function of the episode state.
using ScriptFn = void (*)(const Task& task, const EpisodeState& state,
                          std::span<VelocityCommand> out);

struct ScriptInfo {
  std::string_view name;
  TaskId task;
  ScriptFn fn;
};

std::span<const ScriptInfo> scripts();
/// Throws ConfigError for unknown names or a task mismatch.
const ScriptInfo& find_script(std::string_view name, TaskId task);

enum class PolicyKind : std::uint8_t { Zero, Random, Scripted };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Zero;
  std::string script;
  std::string text() const;
};

/// "zero" | "random" | "scripted:<name>".
PolicySpec parse_policy(std::string_view text);

/// Body-frame command that walks `self` toward `target` at up to `speed`,
/// turning to face the direction of travel.
VelocityCommand goto_command(const RigidBody& self, Vec2 target, double speed,
                             const CommandBounds& bounds);

inline constexpr std::uint64_t kPolicySalt = 0x706f6c696379ull;

}  // namespace mqe
