#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqe/vecenv.hpp"

namespace mqe {

inline constexpr const char* kTrajectorySchema = "mqe-trajectory/1";

/// Malformed trajectory input; `line` is 1-based.
class TrajectoryError : public std::runtime_error {
 public:
  TrajectoryError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Header line: everything needed to recompute rewards without the simulator.
std::string trajectory_header(const EnvBatch& batch, const PolicySpec& policy, int n_steps);

/// Per dynamic body: x, y, yaw, vx, vy, yaw_rate, z.
inline constexpr int kBodyFields = 7;

/// Reset and step records as single JSON lines (no trailing newline).
std::string reset_record(const Task& task, int env, const EpisodeState& st);
std::string step_record(const Task& task, const TransitionView& t);

/// Records a batch run to a stream. Hooks buffer per env; flush() writes the
/// buffers in env order.
class TrajectoryWriter {
 public:
  TrajectoryWriter(std::ostream& out, EnvBatch& batch, const PolicySpec& policy, int n_steps);
  ~TrajectoryWriter();
  TrajectoryWriter(const TrajectoryWriter&) = delete;
  TrajectoryWriter& operator=(const TrajectoryWriter&) = delete;

  void flush();
  std::uint64_t lines_written() const { return lines_; }

 private:
  std::ostream& out_;
  EnvBatch& batch_;
  std::vector<std::string> buffers_;
  std::uint64_t lines_ = 0;
};

}  // namespace mqe
