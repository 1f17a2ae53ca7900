#pragma once

#include "stlplan/geometry.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace stlplan {

struct Sample {
  Vec2 position;
  double heading = 0.0;  ///< radians
  double time = 0.0;     ///< seconds
};

class TrajectoryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time-stamped pose sequence. Position is linearly interpolated between
/// samples; times are strictly increasing.
class TimedTrajectory {
 public:
  TimedTrajectory() = default;
  explicit TimedTrajectory(std::vector<Sample> samples, bool complete = true);

  std::span<const Sample> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  bool complete() const { return complete_; }
  void set_complete(bool complete) { complete_ = complete; }

  double start_time() const { return samples_.front().time; }
  double end_time() const { return samples_.back().time; }
  const Sample& front() const { return samples_.front(); }
  const Sample& back() const { return samples_.back(); }

  /// Appends a sample; its time must exceed the current end time.
  void append(const Sample& s);

  /// Appends every sample of `tail` that lies strictly after the current end.
  void splice(const TimedTrajectory& tail);

  /// Position at time t, clamped to the first/last sample outside the span.
  Vec2 position_at(double t) const;

  /// Copy extended by a stationary sample at `until` when it lies beyond the
  /// end (the robot rests at its final pose). The copy is marked complete.
  TimedTrajectory held_until(double until) const;

 private:
  std::vector<Sample> samples_;
  bool complete_ = true;
};

}  // namespace stlplan
