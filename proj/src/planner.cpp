#include "stlplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace stlplan {

namespace {

constexpr double kLandingTol = 1e-6;
const double kPi = std::acos(-1.0);

Pose advance(const Pose& start, const Segment& seg) {
  Pose end = start;
  if (seg.policy.rotates()) {
    end.heading += seg.policy.velocity * seg.duration;
  } else {
    end.position = start.position + unit_heading(start.heading) * (seg.policy.velocity * seg.duration);
  }
  return end;
}

const Policy& pick(const std::vector<const Policy*>& pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> index(0, pool.size() - 1);
  return *pool[index(rng)];
}

const Policy& slowest(const std::vector<Policy>& pool) {
  return *std::min_element(pool.begin(), pool.end(), [](const Policy& a, const Policy& b) {
    return std::abs(a.velocity) < std::abs(b.velocity);
  });
}

const Policy* kept(std::span<const Segment> keep, const std::vector<const Policy*>& admissible) {
  for (const auto& seg : keep) {
    for (const Policy* p : admissible) {
      if (p->id == seg.policy.id) return p;
    }
  }
  return nullptr;
}

// Signal samples of the edge into `child`; the final sample is the stored
// child pose so that tree signals and node records agree exactly.
std::vector<Sample> node_samples(const TimedNode& parent, const TimedNode& child) {
  std::vector<Sample> out{parent.sample()};
  auto legs = edge_samples(parent.sample(), child.incoming);
  out.insert(out.end(), legs.begin(), legs.end());
  out.back() = child.sample();
  return out;
}

}  // namespace

PolicyTable::PolicyTable(std::span<const Policy> policies, const EstimatorSet& estimators)
    : estimators_(estimators) {
  for (const auto& p : policies) {
    if (!estimators_.contains(p.id)) {
      throw FitError("no reachability estimator for policy " + p.name());
    }
    switch (p.kind) {
      case PrimitiveKind::Forward: forward_.push_back(p); break;
      case PrimitiveKind::Counterclockwise: ccw_.push_back(p); break;
      case PrimitiveKind::Clockwise: cw_.push_back(p); break;
      case PrimitiveKind::Backward: break;
    }
  }
  if (forward_.empty() || ccw_.empty() || cw_.empty()) {
    throw FitError("policy set needs forward, clockwise and counterclockwise policies");
  }
}

Vec2 sample_free(const Scenario& world, Rng& rng) {
  std::uniform_real_distribution<double> ux(world.workspace.lower.x, world.workspace.upper.x);
  std::uniform_real_distribution<double> uy(world.workspace.lower.y, world.workspace.upper.y);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Vec2 p{ux(rng), uy(rng)};
    const bool blocked = std::any_of(world.obstacles.begin(), world.obstacles.end(), [&](const Obstacle& o) {
      return o.always_active() && !(distance(p, o.center) > o.radius + world.robot_radius);
    });
    if (!blocked) return p;
  }
  throw ScenarioError("free workspace is empty");
}

int nearest(std::span<const TimedNode> tree, Vec2 point) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& n : tree) {
    if (!n.alive) continue;
    const double d = distance(n.position, point);
    if (d < best_d) {
      best_d = d;
      best = n.id;
    }
  }
  return best;
}

Vec2 steer(Vec2 rnd, Vec2 from, DistanceRange range) {
  const Vec2 delta = rnd - from;
  const double d = delta.norm();
  if (d == 0.0) return rnd;
  const double len = std::clamp(d, range.d_min, range.d_max);
  if (len == d) return rnd;
  return from + delta * (len / d);
}

std::vector<Sample> edge_samples(const Sample& parent, std::span<const Segment> segments) {
  std::vector<Sample> out;
  Pose pose{parent.position, parent.heading};
  double t = parent.time;
  for (const auto& seg : segments) {
    pose = advance(pose, seg);
    t += seg.duration;
    out.push_back({pose.position, pose.heading, t});
  }
  return out;
}

EdgeMotion sample_policies(const PolicyTable& table, const Sample& parent, Vec2 target,
                           double theta_tol, Rng& rng, std::span<const Segment> keep) {
  EdgeMotion m;
  const Vec2 delta = target - parent.position;
  const double d = delta.norm();
  if (d == 0.0) {
    m.end = {parent.position, parent.heading};
    m.arrival = parent.time;
    return m;
  }

  const double dtheta = wrap_angle(std::atan2(delta.y, delta.x) - parent.heading);
  const double turn = std::abs(dtheta);
  if (turn > 0.0) {
    const auto& pool = dtheta > 0.0 ? table.counterclockwise() : table.clockwise();
    std::vector<const Policy*> admissible;
    for (const auto& p : pool) {
      if (table.estimator(p).in_range(turn)) admissible.push_back(&p);
    }
    const Policy* chosen = kept(keep, admissible);
    if (chosen == nullptr && !admissible.empty()) chosen = &pick(admissible, rng);
    if (chosen != nullptr) {
      m.segments.push_back({*chosen, predict_duration(table.estimator(*chosen), turn)});
    } else if (turn > theta_tol) {
      // overshoot with the slowest policy of the right sense, then turn back
      const auto& other = dtheta > 0.0 ? table.clockwise() : table.counterclockwise();
      const Policy& there = slowest(pool);
      const Policy& back = slowest(other);
      const ReachEstimator& est_there = table.estimator(there);
      const ReachEstimator& est_back = table.estimator(back);
      const double undo = std::max(est_back.d_min, est_there.d_min - turn);
      if (!est_there.in_range(turn + undo) || !est_back.in_range(undo)) {
        throw RangeError("turn of " + std::to_string(turn) + " rad is not realizable");
      }
      m.segments.push_back({there, predict_duration(est_there, turn + undo)});
      m.segments.push_back({back, predict_duration(est_back, undo)});
    }
  }

  std::vector<const Policy*> drives;
  for (const auto& p : table.forward()) {
    if (table.estimator(p).in_range(d)) drives.push_back(&p);
  }
  if (drives.empty()) {
    throw RangeError("edge length " + std::to_string(d) + " m is outside every forward policy's range");
  }
  const Policy* drive = kept(keep, drives);
  if (drive == nullptr) drive = &pick(drives, rng);
  m.segments.push_back({*drive, predict_duration(table.estimator(*drive), d)});

  Pose pose{parent.position, parent.heading};
  m.arrival = parent.time;
  for (const auto& seg : m.segments) {
    pose = advance(pose, seg);
    m.arrival += seg.duration;
  }
  m.end = pose;
  m.exact = distance(pose.position, target) <= kLandingTol;
  return m;
}

// ---------------------------------------------------------------------------

PlanTree::PlanTree(const Scenario& world, const stl::IncrementalMonitor& monitor,
                   std::optional<TimedTrajectory> history)
    : world_(world), monitor_(monitor), history_(std::move(history)) {
  TimedNode root;
  root.id = 0;
  if (history_) {
    if (history_->empty()) throw TrajectoryError("replanning history is empty");
    const Sample& last = history_->back();
    root.position = last.position;
    root.heading = last.heading;
    root.time = last.time;
  } else {
    root.position = world.start.position;
    root.heading = world.start.heading;
    root.time = world.start.time;
  }
  TimedTrajectory prefix = history_ ? *history_ : TimedTrajectory({root.sample()});
  prefix.set_complete(false);
  states_.push_back(monitor_.start(prefix));
  root.prefix_rho = monitor_.prefix_value(states_.back());
  root.cost = -root.prefix_rho;
  nodes_.push_back(root);
}

std::size_t PlanTree::alive_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TimedNode& n) { return n.alive; }));
}

std::vector<int> PlanTree::path(int id) const {
  std::vector<int> out;
  for (int cur = id; cur >= 0; cur = node(cur).parent) out.push_back(cur);
  std::reverse(out.begin(), out.end());
  return out;
}

bool PlanTree::is_ancestor(int ancestor, int id) const {
  for (int cur = node(id).parent; cur >= 0; cur = node(cur).parent) {
    if (cur == ancestor) return true;
  }
  return false;
}

TimedTrajectory PlanTree::signal(int id, std::optional<double> hold_until) const {
  const auto ids = path(id);
  TimedTrajectory out = history_ ? *history_ : TimedTrajectory({node(ids.front()).sample()});
  for (std::size_t i = 1; i < ids.size(); ++i) {
    const auto samples = node_samples(node(ids[i - 1]), node(ids[i]));
    for (std::size_t j = 1; j < samples.size(); ++j) out.append(samples[j]);
  }
  if (hold_until) return out.held_until(*hold_until);
  out.set_complete(false);
  return out;
}

double PlanTree::cost_from_scratch(int id) const {
  double cost = 0.0;
  for (int n : path(id)) {
    cost -= stl::prefix_robustness(monitor_.formula(), signal(n), monitor_.options());
  }
  return cost;
}

// ---------------------------------------------------------------------------

class Planner {
 public:
  Planner(const Scenario& world, const PolicyTable& table, DistanceRange range, const PlanOptions& options)
      : world_(world),
        table_(table),
        range_(range),
        options_(options),
        monitor_(world.formula, world.eval_options()),
        tree_(world, monitor_, options.history),
        rng_(options.seed.value_or(world.planner.seed)) {}

  PlanResult run() {
    const int iterations = options_.max_iterations.value_or(world_.planner.max_iterations);
    for (int i = 0; i < iterations; ++i) grow();
    return select(iterations);
  }

 private:
  TimedNode& at(int id) { return tree_.nodes_[static_cast<std::size_t>(id)]; }
  stl::IncrementalMonitor::State& state(int id) { return tree_.states_[static_cast<std::size_t>(id)]; }

  void grow() {
    const Vec2 rnd = sample_free(world_, rng_);
    const int parent_id = nearest(tree_.nodes(), rnd);
    const Vec2 target = steer(rnd, at(parent_id).position, range_);
    if (target == at(parent_id).position) return;
    const Sample from = at(parent_id).sample();
    EdgeMotion motion = sample_policies(table_, from, target, world_.planner.theta_tol, rng_);
    if (!edge_free(from, motion.segments, world_)) return;

    TimedNode n;
    n.id = static_cast<int>(tree_.nodes_.size());
    n.position = motion.end.position;
    n.heading = wrap_angle(motion.end.heading);
    n.time = motion.arrival;
    n.parent = parent_id;
    n.incoming = std::move(motion.segments);
    auto s = monitor_.extend(state(parent_id), node_samples(at(parent_id), n));
    n.prefix_rho = monitor_.prefix_value(s);
    n.cost = at(parent_id).cost - n.prefix_rho;
    at(parent_id).children.push_back(n.id);
    tree_.nodes_.push_back(std::move(n));
    tree_.states_.push_back(std::move(s));
    const int id = tree_.nodes_.back().id;
    if (options_.observer.on_node_added) options_.observer.on_node_added(tree_, id);
    rewire(id);
  }

  void rewire(int new_id) {
    std::vector<char> ancestor(tree_.nodes_.size(), 0);
    for (int cur = at(new_id).parent; cur >= 0; cur = at(cur).parent) ancestor[static_cast<std::size_t>(cur)] = 1;

    const std::size_t count = tree_.nodes_.size();
    const double reach = near_radius(count);
    for (std::size_t k = 0; k < count; ++k) {
      const int near_id = static_cast<int>(k);
      if (near_id == new_id || ancestor[k] || !at(near_id).alive || !at(new_id).alive) continue;
      const double d = distance(at(near_id).position, at(new_id).position);
      if (d < range_.d_min || d > reach) continue;

      const Sample from = at(new_id).sample();
      EdgeMotion motion = sample_policies(table_, from, at(near_id).position, 0.0, rng_);
      if (!motion.exact || !edge_free(from, motion.segments, world_)) continue;

      TimedNode candidate = at(near_id);
      candidate.incoming = motion.segments;
      candidate.heading = wrap_angle(motion.end.heading);
      candidate.time = motion.arrival;
      auto s = monitor_.extend(state(new_id), node_samples(at(new_id), candidate));
      const double rho = monitor_.prefix_value(s);
      const double cost = at(new_id).cost - rho;
      if (!(cost < at(near_id).cost)) continue;

      RewireEvent event;
      event.node = near_id;
      event.old_parent = at(near_id).parent;
      event.new_parent = new_id;
      event.old_cost = at(near_id).cost;
      event.new_cost = cost;

      detach(near_id);
      TimedNode& near = at(near_id);
      near.parent = new_id;
      near.incoming = std::move(candidate.incoming);
      near.heading = candidate.heading;
      near.time = candidate.time;
      near.prefix_rho = rho;
      near.cost = cost;
      state(near_id) = std::move(s);
      at(new_id).children.push_back(near_id);
      propagate(near_id, event.pruned);
      if (options_.observer.on_rewire) options_.observer.on_rewire(tree_, event);
    }
  }

  double near_radius(std::size_t n) const {
    if (world_.planner.near == NearPolicy::Range || n < 2) return range_.d_max;
    const Vec2 span = world_.workspace.upper - world_.workspace.lower;
    const double gamma = 2.0 * std::sqrt(1.5 * span.x * span.y / kPi);
    const double nn = static_cast<double>(n);
    return std::min(range_.d_max, gamma * std::sqrt(std::log(nn) / nn));
  }

  void detach(int id) {
    auto& siblings = at(at(id).parent).children;
    siblings.erase(std::remove(siblings.begin(), siblings.end(), id), siblings.end());
  }

  // Re-times the subtree below `root_id` after its arrival changed. Children
  // whose edge can no longer be realized exactly, or now collides with a
  // timed obstacle, are removed with their subtrees.
  void propagate(int root_id, std::vector<int>& pruned) {
    std::deque<int> queue{root_id};
    while (!queue.empty()) {
      const int p = queue.front();
      queue.pop_front();
      const std::vector<int> children = at(p).children;
      for (int c : children) {
        const Sample from = at(p).sample();
        EdgeMotion motion = sample_policies(table_, from, at(c).position, 0.0, rng_, at(c).incoming);
        if (!motion.exact || !edge_free(from, motion.segments, world_)) {
          detach(c);
          kill(c, pruned);
          continue;
        }
        TimedNode& child = at(c);
        child.incoming = std::move(motion.segments);
        child.heading = wrap_angle(motion.end.heading);
        child.time = motion.arrival;
        state(c) = monitor_.extend(state(p), node_samples(at(p), child));
        child.prefix_rho = monitor_.prefix_value(state(c));
        child.cost = at(p).cost - child.prefix_rho;
        queue.push_back(c);
      }
    }
  }

  void kill(int id, std::vector<int>& pruned) {
    std::vector<int> stack{id};
    while (!stack.empty()) {
      const int n = stack.back();
      stack.pop_back();
      at(n).alive = false;
      pruned.push_back(n);
      for (int c : at(n).children) stack.push_back(c);
      at(n).children.clear();
    }
  }

  PlanResult select(int iterations) {
    const double horizon = stl::horizon(*world_.formula);
    struct Scored {
      int id;
      double value;
    };
    std::vector<Scored> scored;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& n : tree_.nodes()) {
      if (!n.alive) continue;
      auto s = state(n.id);
      if (horizon > n.time) {
        Sample rest = n.sample();
        rest.time = horizon;
        const Sample span[2] = {n.sample(), rest};
        s = monitor_.extend(s, span);
      }
      const double v = monitor_.complete_value(s);
      best = std::max(best, v);
      scored.push_back({n.id, v});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.value > b.value; });

    const auto opts = world_.eval_options();
    for (const auto& cand : scored) {
      if (cand.value < -1e-9) break;
      const TimedTrajectory sig = tree_.signal(cand.id, horizon);
      const double rho = stl::robustness(*world_.formula, sig, sig.start_time(), opts);
      if (rho < 0.0) continue;
      PlanResult r;
      for (int id : tree_.path(cand.id)) {
        const TimedNode& n = tree_.node(id);
        r.nodes.push_back({n.position, n.heading, n.time, n.incoming});
        r.schedule.insert(r.schedule.end(), n.incoming.begin(), n.incoming.end());
      }
      r.robustness = rho;
      r.iterations = iterations;
      r.seed = options_.seed.value_or(world_.planner.seed);
      r.tree_size = tree_.alive_count();
      return r;
    }
    std::ostringstream msg;
    msg << "no satisfying trajectory after " << iterations << " iterations (best robustness " << best << ")";
    throw PlanningFailure(msg.str(), best);
  }

  const Scenario& world_;
  const PolicyTable& table_;
  DistanceRange range_;
  const PlanOptions& options_;
  stl::IncrementalMonitor monitor_;
  PlanTree tree_;
  Rng rng_;
};

TimedTrajectory PlanResult::signal() const {
  TimedTrajectory out;
  if (nodes.empty()) return out;
  out.append({nodes.front().position, nodes.front().heading, nodes.front().time});
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const PlanNode& prev = nodes[i - 1];
    auto legs = edge_samples({prev.position, prev.heading, prev.time}, nodes[i].incoming);
    legs.back() = {nodes[i].position, nodes[i].heading, nodes[i].time};
    for (const auto& s : legs) out.append(s);
  }
  return out;
}

PlanResult plan(const Scenario& world, std::span<const Policy> policies, const EstimatorSet& estimators,
                DistanceRange range, const PlanOptions& options) {
  if (policies.empty()) throw std::invalid_argument("empty policy set");
  if (!(range.d_min > 0.0 && range.d_min < range.d_max)) throw std::invalid_argument("invalid distance range");
  world.validate();
  const PolicyTable table(policies, estimators);
  Planner planner(world, table, range, options);
  return planner.run();
}

}  // namespace stlplan
