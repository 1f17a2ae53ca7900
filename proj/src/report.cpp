#include "stlplan/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace stlplan {

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

constexpr const char* kPlanHeader = "node_index,x,y,heading,t,incoming_policy_ids,incoming_durations";
constexpr const char* kTraceHeader = "t,x,y,heading,event";

}  // namespace

void write_plan_csv(std::ostream& os, const PlanResult& plan) {
  os << kPlanHeader << '\n';
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    const PlanNode& n = plan.nodes[i];
    std::string ids;
    std::string durations;
    for (const auto& seg : n.incoming) {
      if (!ids.empty()) {
        ids += ';';
        durations += ';';
      }
      ids += std::to_string(seg.policy.id);
      durations += fixed(seg.duration);
    }
    os << i << ',' << fixed(n.position.x) << ',' << fixed(n.position.y) << ',' << fixed(n.heading) << ','
       << fixed(n.time) << ',' << ids << ',' << durations << '\n';
  }
}

PlanResult read_plan_csv(std::istream& is, std::span<const Policy> policies) {
  std::map<int, Policy> by_id;
  for (const auto& p : policies) by_id.emplace(p.id, p);
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != kPlanHeader) throw FormatError("not a plan CSV");
  PlanResult plan;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 7) throw FormatError("line " + std::to_string(line_no) + ": expected 7 columns");
    PlanNode n;
    n.position = {to_double(cols[1], line_no), to_double(cols[2], line_no)};
    n.heading = to_double(cols[3], line_no);
    n.time = to_double(cols[4], line_no);
    if (!cols[5].empty()) {
      const auto ids = split(cols[5], ';');
      const auto durs = split(cols[6], ';');
      if (ids.size() != durs.size()) {
        throw FormatError("line " + std::to_string(line_no) + ": policy/duration count mismatch");
      }
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const int id = static_cast<int>(to_double(ids[k], line_no));
        auto it = by_id.find(id);
        if (it == by_id.end()) throw FormatError("line " + std::to_string(line_no) + ": unknown policy id " + ids[k]);
        n.incoming.push_back({it->second, to_double(durs[k], line_no)});
      }
    }
    plan.schedule.insert(plan.schedule.end(), n.incoming.begin(), n.incoming.end());
    plan.nodes.push_back(std::move(n));
  }
  if (plan.nodes.empty()) throw FormatError("plan CSV has no nodes");
  return plan;
}

void write_trace_csv(std::ostream& os, const ExecutionTrace& trace) {
  std::vector<std::string> labels(trace.realized.size());
  for (const auto& e : trace.events) {
    auto& l = labels.at(e.sample);
    if (!l.empty()) l += ';';
    l += to_string(e.kind);
  }
  os << kTraceHeader << '\n';
  const auto samples = trace.realized.samples();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    os << fixed(s.time) << ',' << fixed(s.position.x) << ',' << fixed(s.position.y) << ',' << fixed(s.heading)
       << ',' << labels[i] << '\n';
  }
}

TimedTrajectory read_trajectory_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("empty trajectory CSV");
  header = strip_cr(header);
  const bool plan = header == kPlanHeader;
  if (!plan && header != kTraceHeader) throw FormatError("unrecognized CSV header '" + header + "'");
  std::vector<Sample> samples;
  std::string line;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() < 4) throw FormatError("line " + std::to_string(line_no) + ": too few columns");
    Sample s;
    if (plan) {
      s.position = {to_double(cols[1], line_no), to_double(cols[2], line_no)};
      s.heading = to_double(cols[3], line_no);
      s.time = to_double(cols[4], line_no);
    } else {
      s.time = to_double(cols[0], line_no);
      s.position = {to_double(cols[1], line_no), to_double(cols[2], line_no)};
      s.heading = to_double(cols[3], line_no);
    }
    samples.push_back(s);
  }
  if (samples.empty()) throw FormatError("trajectory CSV has no samples");
  try {
    return TimedTrajectory(std::move(samples), true);
  } catch (const TrajectoryError& e) {
    throw FormatError(e.what());
  }
}

namespace {

struct Canvas {
  Workspace ws;
  double scale = 160.0;
  double margin = 30.0;

  double x(double wx) const { return margin + (wx - ws.lower.x) * scale; }
  double y(double wy) const { return margin + (ws.upper.y - wy) * scale; }
  double width() const { return 2 * margin + (ws.upper.x - ws.lower.x) * scale; }
  double height() const { return 2 * margin + (ws.upper.y - ws.lower.y) * scale; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void collect_balls(const stl::Formula& f, std::vector<stl::BallAtom>& out) {
  if (f.op() == stl::Op::Predicate) {
    if (const auto* b = std::get_if<stl::BallAtom>(&f.atom()); b && b->inside) out.push_back(*b);
    return;
  }
  if (f.left_ptr()) collect_balls(f.left(), out);
  if (f.right_ptr()) collect_balls(f.right(), out);
}

void polyline(std::ostream& os, const Canvas& c, const TimedTrajectory& t, const char* color) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
  for (const auto& s : t.samples()) os << num(c.x(s.position.x)) << ',' << num(c.y(s.position.y)) << ' ';
  os << "\"/>\n";
}

}  // namespace

void write_svg(std::ostream& os, const Scenario& world, const SvgLayers& layers) {
  const Canvas c{world.workspace};
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(c.width()) << "\" height=\""
     << num(c.height()) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  os << "<rect x=\"" << num(c.x(world.workspace.lower.x)) << "\" y=\"" << num(c.y(world.workspace.upper.y))
     << "\" width=\"" << num(c.x(world.workspace.upper.x) - c.x(world.workspace.lower.x)) << "\" height=\""
     << num(c.y(world.workspace.lower.y) - c.y(world.workspace.upper.y))
     << "\" fill=\"white\" stroke=\"black\"/>\n";

  std::vector<stl::BallAtom> goals;
  collect_balls(*world.formula, goals);
  for (const auto& g : goals) {
    os << "<circle cx=\"" << num(c.x(g.center.x)) << "\" cy=\"" << num(c.y(g.center.y)) << "\" r=\""
       << num(g.radius * c.scale) << "\" fill=\"#c8f0c8\" stroke=\"green\" stroke-dasharray=\"4 2\"/>\n";
  }
  for (const auto& o : world.obstacles) {
    const char* fill = o.active ? "#f0d0d0" : "#b0b0b0";
    os << "<circle cx=\"" << num(c.x(o.center.x)) << "\" cy=\"" << num(c.y(o.center.y)) << "\" r=\""
       << num(o.radius * c.scale) << "\" fill=\"" << fill << "\" stroke=\"black\"/>\n";
    if (o.active) {
      os << "<text x=\"" << num(c.x(o.center.x)) << "\" y=\"" << num(c.y(o.center.y))
         << "\" text-anchor=\"middle\">TO [" << num(o.active->lo) << "," << num(o.active->hi) << "] s</text>\n";
    }
  }
  if (layers.plan != nullptr && !layers.plan->nodes.empty()) {
    polyline(os, c, layers.plan->signal(), "orange");
    for (const auto& n : layers.plan->nodes) {
      os << "<circle cx=\"" << num(c.x(n.position.x)) << "\" cy=\"" << num(c.y(n.position.y))
         << "\" r=\"2.5\" fill=\"orange\"/>\n";
      os << "<text x=\"" << num(c.x(n.position.x) + 4) << "\" y=\"" << num(c.y(n.position.y) - 4)
         << "\" fill=\"#a05000\">" << num(n.time) << "</text>\n";
    }
  }
  if (layers.realized != nullptr && !layers.realized->empty()) polyline(os, c, *layers.realized, "blue");
  os << "</svg>\n";
}

void write_report(std::ostream& os, const RunReport& r) {
  os << "scenario: " << r.scenario_id << '\n';
  os << "seed: " << r.seed << '\n';
  os << "planning_seconds: " << fixed(r.planning_seconds) << '\n';
  os << "iterations: " << r.iterations << '\n';
  os << "plan_robustness: " << (r.plan_robustness ? fixed(*r.plan_robustness) : "none") << '\n';
  os << "executed_robustness: " << (r.executed_robustness ? fixed(*r.executed_robustness) : "none") << '\n';
  os << "replans: " << r.replans << '\n';
  for (const auto& p : r.outputs) os << "output: " << p.string() << '\n';
  if (!r.error.empty()) os << "error: " << r.error << '\n';
}

}  // namespace stlplan
