#include "stlplan/trajectory.hpp"

#include <algorithm>
#include <string>

namespace stlplan {

TimedTrajectory::TimedTrajectory(std::vector<Sample> samples, bool complete)
    : samples_(std::move(samples)), complete_(complete) {
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].time > samples_[i - 1].time)) {
      throw TrajectoryError("trajectory times must be strictly increasing (sample " +
                            std::to_string(i) + ")");
    }
  }
}

void TimedTrajectory::append(const Sample& s) {
  if (!samples_.empty() && !(s.time > samples_.back().time)) {
    throw TrajectoryError("appended sample time " + std::to_string(s.time) +
                          " does not follow end time " + std::to_string(samples_.back().time));
  }
  samples_.push_back(s);
}

void TimedTrajectory::splice(const TimedTrajectory& tail) {
  for (const auto& s : tail.samples()) {
    if (samples_.empty() || s.time > samples_.back().time) samples_.push_back(s);
  }
}

Vec2 TimedTrajectory::position_at(double t) const {
  if (samples_.empty()) throw TrajectoryError("empty trajectory");
  if (t <= samples_.front().time) return samples_.front().position;
  if (t >= samples_.back().time) return samples_.back().position;
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const Sample& s) { return v < s.time; });
  const Sample& b = *it;
  const Sample& a = *(it - 1);
  return lerp(a.position, b.position, (t - a.time) / (b.time - a.time));
}

TimedTrajectory TimedTrajectory::held_until(double until) const {
  TimedTrajectory out = *this;
  out.complete_ = true;
  if (!samples_.empty() && until > samples_.back().time) {
    Sample rest = samples_.back();
    rest.time = until;
    out.samples_.push_back(rest);
  }
  return out;
}

}  // namespace stlplan
