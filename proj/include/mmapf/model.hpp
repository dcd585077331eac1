/*
 * Copyright (C) 2026 mmapf contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#ifndef MMAPF__MODEL_HPP
#define MMAPF__MODEL_HPP

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace mmapf {

/// Vertex identifiers are opaque positive integers. Grid worlds number their
/// cells 1..rows*cols in row-major order.
using VertexId = int;
using Time = int;
using AgentId = std::string;

inline constexpr Time kUnbounded = std::numeric_limits<Time>::max() / 4;

//==============================================================================
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//==============================================================================
/// Raised for malformed input. The path addresses the offending field, e.g.
/// "agents[1].start" or "grid.obstacles".
class SchemaError : public Error
{
public:
  SchemaError(std::string path, const std::string& what)
  : Error(path.empty() ? what : path + ": " + what),
    _path(std::move(path))
  {
    // Do nothing
  }

  const std::string& path() const { return _path; }

private:
  std::string _path;
};

//==============================================================================
class NotAdjacent : public Error
{
public:
  NotAdjacent(VertexId u, VertexId v)
  : Error("vertices " + std::to_string(u) + " and " + std::to_string(v)
      + " are not adjacent")
  {
    // Do nothing
  }
};

//==============================================================================
class LookupError : public Error
{
public:
  using Error::Error;
};

//==============================================================================
/// A query or operation was called on inputs that break its precondition.
class PreconditionError : public Error
{
public:
  PreconditionError(std::string code, const std::string& what)
  : Error(what),
    _code(std::move(code))
  {
    // Do nothing
  }

  /// Machine-readable reason, e.g. "no_such_wait".
  const std::string& code() const { return _code; }

private:
  std::string _code;
};

//==============================================================================
struct Edge
{
  VertexId u = 0;
  VertexId v = 0;
  int duration = 1;

  bool operator==(const Edge&) const = default;
};

struct Neighbor
{
  VertexId vertex = 0;
  int duration = 1;
};

//==============================================================================
/// Undirected world graph. Obstacles and charging stations are vertex
/// attributes; an obstacle keeps its incident edges so that relaxations can
/// switch it off without rebuilding the graph.
class WorldGraph
{
public:
  WorldGraph() = default;

  WorldGraph(
    std::vector<VertexId> vertices,
    std::vector<Edge> edges,
    std::set<VertexId> obstacles = {},
    std::set<VertexId> charging = {})
  : _vertices(std::move(vertices)),
    _obstacles(std::move(obstacles)),
    _charging(std::move(charging))
  {
    std::sort(_vertices.begin(), _vertices.end());
    for (std::size_t i = 0; i < _vertices.size(); ++i)
    {
      const VertexId v = _vertices[i];
      if (v <= 0)
        throw SchemaError("vertices", "vertex ids must be positive, got "
                + std::to_string(v));
      if (!_index.emplace(v, i).second)
        throw SchemaError("vertices", "duplicate vertex " + std::to_string(v));
    }

    _adjacency.resize(_vertices.size());
    for (std::size_t i = 0; i < edges.size(); ++i)
    {
      Edge e = edges[i];
      const std::string path = "edges[" + std::to_string(i) + "]";
      if (!contains(e.u) || !contains(e.v))
        throw SchemaError(path, "edge references an unknown vertex");
      if (e.u == e.v)
        throw SchemaError(path, "self loops are not allowed");
      if (e.duration < 1)
        throw SchemaError(path + ".duration", "duration must be >= 1");
      if (e.u > e.v)
        std::swap(e.u, e.v);
      if (duration(e.u, e.v).has_value())
        throw SchemaError(path, "duplicate edge");

      _adjacency[_index.at(e.u)].push_back({e.v, e.duration});
      _adjacency[_index.at(e.v)].push_back({e.u, e.duration});
      _edges.push_back(e);
    }

    for (auto& list : _adjacency)
    {
      std::sort(list.begin(), list.end(),
        [](const Neighbor& a, const Neighbor& b) { return a.vertex < b.vertex; });
    }
    std::sort(_edges.begin(), _edges.end(),
      [](const Edge& a, const Edge& b)
      {
        return std::tie(a.u, a.v) < std::tie(b.u, b.v);
      });

    check_attributes();
  }

  const std::vector<VertexId>& vertices() const { return _vertices; }
  const std::vector<Edge>& edges() const { return _edges; }
  const std::set<VertexId>& obstacles() const { return _obstacles; }
  const std::set<VertexId>& charging() const { return _charging; }

  std::size_t size() const { return _vertices.size(); }

  bool contains(VertexId v) const { return _index.count(v) > 0; }

  std::size_t index(VertexId v) const
  {
    const auto it = _index.find(v);
    if (it == _index.end())
      throw LookupError("unknown vertex " + std::to_string(v));
    return it->second;
  }

  bool is_obstacle(VertexId v) const { return _obstacles.count(v) > 0; }
  bool is_charging(VertexId v) const { return _charging.count(v) > 0; }

  std::optional<int> duration(VertexId u, VertexId v) const
  {
    const auto it = _index.find(u);
    if (it == _index.end())
      return std::nullopt;

    const auto& list = _adjacency[it->second];
    const auto n = std::lower_bound(list.begin(), list.end(), v,
        [](const Neighbor& a, VertexId b) { return a.vertex < b; });
    if (n == list.end() || n->vertex != v)
      return std::nullopt;
    return n->duration;
  }

  /// Neighbors sorted by ascending vertex id.
  const std::vector<Neighbor>& neighbors(VertexId v) const
  {
    return _adjacency[index(v)];
  }

  void set_obstacles(std::set<VertexId> obstacles)
  {
    _obstacles = std::move(obstacles);
    check_attributes();
  }

  bool operator==(const WorldGraph& other) const
  {
    return _vertices == other._vertices && _edges == other._edges
      && _obstacles == other._obstacles && _charging == other._charging;
  }

private:
  void check_attributes() const
  {
    for (const auto v : _obstacles)
    {
      if (!contains(v))
        throw SchemaError("obstacles", "unknown vertex " + std::to_string(v));
    }
    for (const auto v : _charging)
    {
      if (!contains(v))
        throw SchemaError("charging", "unknown vertex " + std::to_string(v));
      if (_obstacles.count(v))
        throw SchemaError("charging", "vertex " + std::to_string(v)
                + " is both a charging station and an obstacle");
    }
  }

  std::vector<VertexId> _vertices;
  std::unordered_map<VertexId, std::size_t> _index;
  std::vector<Edge> _edges;
  std::vector<std::vector<Neighbor>> _adjacency;
  std::set<VertexId> _obstacles;
  std::set<VertexId> _charging;
};

//==============================================================================
/// Looks up the traversal duration of an edge. Symmetric in u and v.
inline int edge_duration(const WorldGraph& graph, VertexId u, VertexId v)
{
  const auto d = graph.duration(u, v);
  if (!d)
    throw NotAdjacent(u, v);
  return *d;
}

//==============================================================================
struct GridSpec
{
  int rows = 1;
  int cols = 1;
  std::set<VertexId> obstacles;
  std::set<VertexId> slow_cells;
  int slow_duration = 2;
  std::set<VertexId> charging;

  bool operator==(const GridSpec&) const = default;
};

//==============================================================================
/// Builds a 4-connected grid. An edge is slow iff both of its endpoints are
/// slow cells.
inline WorldGraph build_graph(const GridSpec& spec)
{
  if (spec.rows < 1)
    throw SchemaError("grid.rows", "must be >= 1");
  if (spec.cols < 1)
    throw SchemaError("grid.cols", "must be >= 1");
  if (spec.slow_duration < 2)
    throw SchemaError("grid.slow_duration", "must be >= 2");

  const int n = spec.rows * spec.cols;
  const auto check_range = [n](const std::set<VertexId>& cells,
      const std::string& field)
    {
      for (const auto c : cells)
      {
        if (c < 1 || c > n)
          throw SchemaError("grid." + field, "cell " + std::to_string(c)
                  + " is outside 1.." + std::to_string(n));
      }
    };
  check_range(spec.obstacles, "obstacles");
  check_range(spec.slow_cells, "slow_cells");
  check_range(spec.charging, "charging");

  std::vector<VertexId> vertices;
  vertices.reserve(n);
  for (int c = 1; c <= n; ++c)
    vertices.push_back(c);

  const auto cost = [&](VertexId a, VertexId b)
    {
      return spec.slow_cells.count(a) && spec.slow_cells.count(b) ?
        spec.slow_duration : 1;
    };

  std::vector<Edge> edges;
  for (int r = 0; r < spec.rows; ++r)
  {
    for (int c = 0; c < spec.cols; ++c)
    {
      const VertexId v = r * spec.cols + c + 1;
      if (c + 1 < spec.cols)
        edges.push_back({v, v + 1, cost(v, v + 1)});
      if (r + 1 < spec.rows)
        edges.push_back({v, v + spec.cols, cost(v, v + spec.cols)});
    }
  }

  try
  {
    return WorldGraph(std::move(vertices), std::move(edges), spec.obstacles,
        spec.charging);
  }
  catch (const SchemaError& e)
  {
    throw SchemaError("grid." + e.path(), e.what());
  }
}

//==============================================================================
/// One timestep of battery dynamics. May return 0; callers enforce the floor.
inline int battery_step(int level, bool charging, int battery_max)
{
  return charging ? battery_max : level - 1;
}

//==============================================================================
enum class Objective
{
  Makespan,
  TotalTime,
  Charges
};

struct AgentSpec
{
  AgentId id;
  VertexId start = 0;
  VertexId goal = 0;
  std::set<VertexId> waypoints;
  int battery = 1;

  /// Timestep at which the agent enters the world. Nonzero only for agents
  /// that joined during execution.
  Time release = 0;

  bool operator==(const AgentSpec&) const = default;
};

inline constexpr std::size_t kMaxWaypoints = 16;

//==============================================================================
struct Instance
{
  /// Present when the world was described as a grid; kept so the instance
  /// serializes back to the same form.
  std::optional<GridSpec> grid;
  WorldGraph graph;
  std::vector<AgentSpec> agents;
  int battery_max = 1;
  Time makespan_bound = 0;
  std::vector<Objective> objectives =
    {Objective::Makespan, Objective::TotalTime, Objective::Charges};

  std::optional<std::size_t> find_agent(const AgentId& id) const
  {
    for (std::size_t i = 0; i < agents.size(); ++i)
    {
      if (agents[i].id == id)
        return i;
    }
    return std::nullopt;
  }

  const AgentSpec& agent(const AgentId& id) const
  {
    const auto i = find_agent(id);
    if (!i)
      throw LookupError("unknown agent '" + id + "'");
    return agents[*i];
  }

  /// Replaces the obstacle set in both the graph and the grid description.
  void set_obstacles(std::set<VertexId> obstacles)
  {
    if (grid)
      grid->obstacles = obstacles;
    graph.set_obstacles(std::move(obstacles));
  }

  bool operator==(const Instance&) const = default;
};

//==============================================================================
/// Throws SchemaError if the instance breaks one of its invariants.
inline void check_instance(const Instance& instance)
{
  const auto& g = instance.graph;
  if (instance.battery_max < 1)
    throw SchemaError("battery_max", "must be >= 1");
  if (instance.makespan_bound < 0)
    throw SchemaError("makespan_bound", "must be >= 0");
  if (instance.objectives.empty()
    || instance.objectives.front() != Objective::Makespan)
    throw SchemaError("objectives", "must be non-empty and start with makespan");
  {
    std::set<Objective> seen(
      instance.objectives.begin(), instance.objectives.end());
    if (seen.size() != instance.objectives.size())
      throw SchemaError("objectives", "duplicate objective");
  }

  const auto check_vertex = [&](VertexId v, const std::string& path)
    {
      if (!g.contains(v))
        throw SchemaError(path, "unknown vertex " + std::to_string(v));
      if (g.is_obstacle(v))
        throw SchemaError(path, "vertex " + std::to_string(v)
                + " is an obstacle");
    };

  std::set<AgentId> ids;
  std::set<VertexId> goals;
  std::set<std::pair<Time, VertexId>> starts;
  for (std::size_t i = 0; i < instance.agents.size(); ++i)
  {
    const auto& a = instance.agents[i];
    const std::string path = "agents[" + std::to_string(i) + "]";
    if (a.id.empty())
      throw SchemaError(path + ".id", "must be non-empty");
    if (!ids.insert(a.id).second)
      throw SchemaError(path + ".id", "duplicate agent id '" + a.id + "'");
    check_vertex(a.start, path + ".start");
    check_vertex(a.goal, path + ".goal");
    for (const auto w : a.waypoints)
      check_vertex(w, path + ".waypoints");
    if (a.waypoints.size() > kMaxWaypoints)
      throw SchemaError(path + ".waypoints", "at most "
              + std::to_string(kMaxWaypoints) + " waypoints are supported");
    if (a.battery < 1 || a.battery > instance.battery_max)
      throw SchemaError(path + ".battery", "must lie in [1, battery_max]");
    if (a.release < 0)
      throw SchemaError(path + ".release", "must be >= 0");
    if (!starts.insert({a.release, a.start}).second)
      throw SchemaError(path + ".start", "start vertex shared with another agent");
    if (!goals.insert(a.goal).second)
      throw SchemaError(path + ".goal", "goal vertex shared with another agent");
  }
}

//==============================================================================
struct ForbiddenWait
{
  AgentId agent;
  VertexId vertex = 0;
  /// Timestep window. A wait step t -> t+1 is covered when from <= t and
  /// t + 1 <= until.
  Time from = 0;
  Time until = kUnbounded;

  bool covers(Time t) const { return from <= t && t + 1 <= until; }

  bool operator==(const ForbiddenWait&) const = default;
};

/// Constraint classes that a solve may drop (or, for forbidden_waits, add).
struct Relaxation
{
  bool ignore_agent_collisions = false;
  std::set<VertexId> ignored_obstacles;
  bool unlimited_battery = false;
  Time extra_horizon = 0;
  std::vector<ForbiddenWait> forbidden_waits;

  bool operator==(const Relaxation&) const = default;
};

/// The instance as seen under a relaxation: ignored obstacles removed and the
/// makespan bound extended.
inline Instance relaxed(Instance instance, const Relaxation& relax)
{
  if (!relax.ignored_obstacles.empty())
  {
    std::set<VertexId> obstacles;
    for (const auto o : instance.graph.obstacles())
    {
      if (!relax.ignored_obstacles.count(o))
        obstacles.insert(o);
    }
    instance.set_obstacles(std::move(obstacles));
  }
  instance.makespan_bound += relax.extra_horizon;
  return instance;
}

//==============================================================================
struct AtVertex
{
  VertexId vertex = 0;
  bool operator==(const AtVertex&) const = default;
};

/// Traversing the directed edge from -> to; step counts timesteps since
/// departure and stays strictly below the edge duration.
struct InTransit
{
  VertexId from = 0;
  VertexId to = 0;
  int step = 1;
  bool operator==(const InTransit&) const = default;
};

/// Presentation state after completion. The agent still occupies its goal.
struct Done
{
  bool operator==(const Done&) const = default;
};

using AgentState = std::variant<AtVertex, InTransit, Done>;

inline const AtVertex* at_vertex(const AgentState& s)
{
  return std::get_if<AtVertex>(&s);
}

//==============================================================================
struct AgentPlan
{
  /// Timestep of trajectory[0].
  Time start_time = 0;
  std::vector<AgentState> trajectory;
  /// Battery level per timestep from start_time through completion.
  std::vector<int> battery;
  std::set<Time> charge_times;

  Time end_time() const
  {
    return start_time + static_cast<Time>(trajectory.size()) - 1;
  }

  bool operator==(const AgentPlan&) const = default;
};

struct Plan
{
  Time makespan = 0;
  std::map<AgentId, AgentPlan> agents;

  bool operator==(const Plan&) const = default;
};

//==============================================================================
/// First timestep at which the agent stands on its goal having visited every
/// waypoint, or nullopt if that never happens.
inline std::optional<Time> completion_time(
  const AgentSpec& agent, const AgentPlan& plan)
{
  std::set<VertexId> pending = agent.waypoints;
  for (std::size_t k = 0; k < plan.trajectory.size(); ++k)
  {
    const auto* at = at_vertex(plan.trajectory[k]);
    if (!at)
      continue;
    pending.erase(at->vertex);
    if (at->vertex == agent.goal && pending.empty())
      return plan.start_time + static_cast<Time>(k);
  }
  return std::nullopt;
}

//==============================================================================
/// State of an agent at time t for conflict purposes. Done states resolve to
/// the vertex where the agent finished.
inline AgentState trajectory_occupancy(
  const Plan& plan, const AgentId& agent, Time t)
{
  const auto it = plan.agents.find(agent);
  if (it == plan.agents.end())
    throw LookupError("unknown agent '" + agent + "'");

  const auto& a = it->second;
  if (t < a.start_time || t > std::max(plan.makespan, a.end_time()))
    throw LookupError("time " + std::to_string(t) + " is outside the plan of '"
            + agent + "'");

  const auto k = static_cast<std::size_t>(std::min(t, a.end_time())
      - a.start_time);
  const auto& s = a.trajectory[k];
  if (!std::holds_alternative<Done>(s))
  {
    if (t <= a.end_time() || at_vertex(s))
      return s;
    throw LookupError("agent '" + agent + "' ends in transit");
  }

  // Done, so the agent rests where it last stood.
  for (std::size_t j = k; j-- > 0;)
  {
    if (const auto* at = at_vertex(a.trajectory[j]))
      return *at;
  }
  throw LookupError("agent '" + agent + "' has no position before Done");
}

//==============================================================================
struct ObjectiveValues
{
  Time makespan = 0;
  long long total_time = 0;
  long long charges = 0;

  auto operator<=>(const ObjectiveValues&) const = default;
};

/// Objective vector of a plan in the instance's priority order, padded with
/// zeros to three entries.
inline std::vector<long long> ordered_objectives(
  const Instance& instance, const ObjectiveValues& values)
{
  std::vector<long long> out;
  for (const auto o : instance.objectives)
  {
    switch (o)
    {
      case Objective::Makespan: out.push_back(values.makespan); break;
      case Objective::TotalTime: out.push_back(values.total_time); break;
      case Objective::Charges: out.push_back(values.charges); break;
    }
  }
  out.resize(3, 0);
  return out;
}

/// Objective values of a plan. Agents that never complete contribute their
/// trajectory end.
inline ObjectiveValues evaluate(const Instance& instance, const Plan& plan)
{
  ObjectiveValues values;
  for (const auto& agent : instance.agents)
  {
    const auto it = plan.agents.find(agent.id);
    if (it == plan.agents.end())
      continue;
    const Time done = completion_time(agent, it->second)
      .value_or(it->second.end_time());
    values.makespan = std::max(values.makespan, done);
    values.total_time += done;
    values.charges += static_cast<long long>(it->second.charge_times.size());
  }
  return values;
}

//==============================================================================
enum class ViolationKind
{
  VertexConflict,
  SwapConflict,
  EdgeOverlapConflict,
  ObstacleCollision,
  BatteryDepleted,
  WaypointMissed,
  GoalMissed,
  Discontinuity,
  HorizonExceeded
};

inline const char* to_string(ViolationKind kind)
{
  switch (kind)
  {
    case ViolationKind::VertexConflict: return "vertex_conflict";
    case ViolationKind::SwapConflict: return "swap_conflict";
    case ViolationKind::EdgeOverlapConflict: return "edge_overlap_conflict";
    case ViolationKind::ObstacleCollision: return "obstacle_collision";
    case ViolationKind::BatteryDepleted: return "battery_depleted";
    case ViolationKind::WaypointMissed: return "waypoint_missed";
    case ViolationKind::GoalMissed: return "goal_missed";
    case ViolationKind::Discontinuity: return "discontinuity";
    case ViolationKind::HorizonExceeded: return "horizon_exceeded";
  }
  return "unknown";
}

inline bool is_inter_agent(ViolationKind kind)
{
  return kind == ViolationKind::VertexConflict
    || kind == ViolationKind::SwapConflict
    || kind == ViolationKind::EdgeOverlapConflict;
}

/// A vertex, or an undirected edge when `to` is set (stored with from < to).
struct Location
{
  VertexId vertex = 0;
  std::optional<VertexId> to;

  static Location at(VertexId v) { return {v, std::nullopt}; }
  static Location edge(VertexId a, VertexId b)
  {
    return {std::min(a, b), std::max(a, b)};
  }

  bool is_edge() const { return to.has_value(); }

  auto operator<=>(const Location&) const = default;
};

struct Violation
{
  ViolationKind kind = ViolationKind::Discontinuity;
  /// One agent, or two for inter-agent conflicts (in instance order).
  std::vector<AgentId> agents;
  Location location;
  /// Absent for WaypointMissed and GoalMissed.
  std::optional<Time> time;
  /// Free-form note, used by Discontinuity only.
  std::string detail;

  bool operator==(const Violation&) const = default;
};

/// Total order: (time, kind, agent ids, location). Untimed violations sort
/// after every timed one.
inline bool violation_less(const Violation& a, const Violation& b)
{
  const Time ta = a.time.value_or(kUnbounded);
  const Time tb = b.time.value_or(kUnbounded);
  return std::tie(ta, a.kind, a.agents, a.location, a.detail)
    < std::tie(tb, b.kind, b.agents, b.location, b.detail);
}

} // namespace mmapf

#endif // MMAPF__MODEL_HPP
