#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace mqe {

struct ReplayIssue {
  std::size_t line = 0;
  int env = -1;
  int step = -1;
  std::string what;
};

/// Result of recomputing a trajectory with the reference oracle. The oracle
/// reads only the header geometry and the recorded states; it shares no
/// reward code with the simulator.
struct ReplayReport {
  std::string task;
  int n_envs = 0;
  int n_agents = 0;
  std::size_t lines = 0;
  std::size_t transitions = 0;
  std::size_t episodes = 0;  // completed
  double max_discrepancy = 0.0;
  int worst_env = -1;
  int worst_step = -1;
  std::size_t worst_line = 0;
  std::string worst_field;
  std::size_t termination_mismatches = 0;
  std::vector<ReplayIssue> issues;  // first few termination/ordering problems
  std::vector<double> state_return;   // team-A sums per reward kind over the file
  std::vector<double> change_return;  // indexed by env

  bool ok(double tolerance = 1e-9) const {
    return max_discrepancy <= tolerance && termination_mismatches == 0 && issues.empty();
  }
};

/// Throws TrajectoryError (with the line number) on malformed input.
ReplayReport replay_trajectory(std::istream& in);
ReplayReport replay_file(const std::string& path);

}  // namespace mqe
