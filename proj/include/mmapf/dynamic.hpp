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

#ifndef MMAPF__DYNAMIC_HPP
#define MMAPF__DYNAMIC_HPP

#include <mmapf/solver.hpp>

namespace mmapf {

//==============================================================================
struct AgentJoin
{
  AgentSpec agent;
  bool operator==(const AgentJoin&) const = default;
};

struct AgentLeave
{
  AgentId agent;
  bool operator==(const AgentLeave&) const = default;
};

struct ObstacleAdd
{
  VertexId vertex = 0;
  bool operator==(const ObstacleAdd&) const = default;
};

struct ObstacleRemove
{
  VertexId vertex = 0;
  bool operator==(const ObstacleRemove&) const = default;
};

struct ObstacleMove
{
  VertexId from = 0;
  VertexId to = 0;
  bool operator==(const ObstacleMove&) const = default;
};

struct Event
{
  Time time = 0;
  std::variant<AgentJoin, AgentLeave, ObstacleAdd, ObstacleRemove, ObstacleMove>
  kind;

  bool operator==(const Event&) const = default;
};

//==============================================================================
/// An event that cannot be applied to the current execution state. Carries a
/// diagnostic in the same shape as validator output.
class EventRejected : public Error
{
public:
  EventRejected(Violation diagnostic, const std::string& what)
  : Error(what),
    _diagnostic(std::move(diagnostic))
  {
    // Do nothing
  }

  const Violation& diagnostic() const { return _diagnostic; }

private:
  Violation _diagnostic;
};

//==============================================================================
struct ExecutionState
{
  /// The world after every applied event.
  Instance instance;
  /// Plan being executed. Covers every agent of `instance` except those in
  /// `fresh`, which have no plan until the next resolve.
  Plan active_plan;
  Time t_now = 0;
  /// Set by apply_event, cleared by a successful resolve.
  bool stale = false;
  /// Agents that joined since the last resolve.
  std::set<AgentId> fresh;
  /// Executed trajectories of agents that left, up to their leave time.
  std::map<AgentId, AgentPlan> departed;

  /// The part of an agent's active plan strictly before time t, padded with
  /// Done if the plan ended earlier.
  AgentPlan prefix_before(const AgentId& agent, Time t) const
  {
    AgentPlan a = active_plan.agents.at(agent);
    const Time keep = std::max(0, t - a.start_time);
    a.trajectory.resize(static_cast<std::size_t>(keep), AgentState{Done{}});
    if (a.battery.size() > a.trajectory.size())
      a.battery.resize(a.trajectory.size());
    std::erase_if(a.charge_times, [&](Time c) { return c >= t; });
    return a;
  }

  /// The part of the active plan that has already been executed.
  AgentPlan committed(const AgentId& agent) const
  {
    return prefix_before(agent, t_now + 1);
  }
};

/// Starts executing a feasible plan at t = 0.
inline ExecutionState start_execution(Instance instance, Plan plan)
{
  if (!validate(instance, plan).feasible())
    throw PreconditionError("plan_infeasible",
            "the initial plan does not validate against the instance");
  ExecutionState state;
  state.instance = std::move(instance);
  state.active_plan = std::move(plan);
  return state;
}

namespace detail {

/// Agent state at time t in a plan, clamped to the end of its trajectory.
inline AgentState state_in_plan(const AgentPlan& a, Time t)
{
  const Time k = std::clamp(t, a.start_time, a.end_time()) - a.start_time;
  return a.trajectory[static_cast<std::size_t>(k)];
}

/// Vertex occupied at time t, if the agent stands on one.
inline std::optional<VertexId> occupied_vertex(
  const AgentSpec& spec, const AgentPlan& a, Time t)
{
  const auto s = state_in_plan(a, t);
  if (const auto* at = at_vertex(s))
    return at->vertex;
  if (std::holds_alternative<Done>(s))
    return spec.goal;
  return std::nullopt;
}

inline Violation diagnostic(ViolationKind kind, std::vector<AgentId> agents,
  VertexId v, Time t, std::string detail = {})
{
  return {kind, std::move(agents), Location::at(v), t, std::move(detail)};
}

class EventApplier
{
public:
  EventApplier(ExecutionState& state, Time t)
  : _s(state), _t(t)
  {
    // Do nothing
  }

  void operator()(const AgentJoin& e)
  {
    const auto& a = e.agent;
    if (_s.instance.find_agent(a.id) || _s.departed.count(a.id))
      reject(ViolationKind::Discontinuity, {a.id}, a.start,
        "agent id '" + a.id + "' is already in use");
    check_vertex(a.start, a.id, "start");
    for (const auto& other : _s.instance.agents)
    {
      if (other.goal == a.goal)
        reject(ViolationKind::Discontinuity, {a.id, other.id}, a.goal,
          "goal " + std::to_string(a.goal) + " is the goal of '" + other.id + "'");
    }
    for (const auto w : a.waypoints)
      check_vertex(w, a.id, "waypoint");
    check_vertex(a.goal, a.id, "goal");
    if (a.waypoints.size() > kMaxWaypoints)
      reject(ViolationKind::Discontinuity, {a.id}, a.start, "too many waypoints");
    if (a.battery < 1 || a.battery > _s.instance.battery_max)
      reject(ViolationKind::BatteryDepleted, {a.id}, a.start,
        "battery must lie in [1, battery_max]");

    for (const auto& other : _s.instance.agents)
    {
      const auto it = _s.active_plan.agents.find(other.id);
      const auto v = it == _s.active_plan.agents.end() ?
        std::optional<VertexId>(other.start) :
        occupied_vertex(other, it->second, _t);
      if (v == a.start)
        reject(ViolationKind::VertexConflict, {other.id, a.id}, a.start,
          "start " + std::to_string(a.start) + " is occupied by '" + other.id + "'");
    }

    AgentSpec spec = a;
    spec.release = _t;
    _s.instance.agents.push_back(std::move(spec));
    _s.fresh.insert(a.id);
  }

  void operator()(const AgentLeave& e)
  {
    const auto index = _s.instance.find_agent(e.agent);
    if (!index)
      reject(ViolationKind::Discontinuity, {e.agent}, 0,
        "unknown agent '" + e.agent + "'");

    if (_s.active_plan.agents.count(e.agent))
    {
      _s.departed[e.agent] = _s.committed(e.agent);
      _s.active_plan.agents.erase(e.agent);
    }
    _s.fresh.erase(e.agent);
    _s.instance.agents.erase(_s.instance.agents.begin()
      + static_cast<std::ptrdiff_t>(*index));
  }

  void operator()(const ObstacleAdd& e)
  {
    add_obstacle(e.vertex);
  }

  void operator()(const ObstacleRemove& e)
  {
    remove_obstacle(e.vertex);
  }

  void operator()(const ObstacleMove& e)
  {
    const auto before = _s.instance.graph.obstacles();
    remove_obstacle(e.from);
    try
    {
      add_obstacle(e.to);
    }
    catch (const EventRejected&)
    {
      _s.instance.set_obstacles(before);
      throw;
    }
  }

private:
  [[noreturn]] void reject(ViolationKind kind, std::vector<AgentId> agents,
    VertexId v, const std::string& why) const
  {
    throw EventRejected(diagnostic(kind, std::move(agents), v, _t, why), why);
  }

  void check_vertex(VertexId v, const AgentId& agent, const std::string& role)
  {
    if (!_s.instance.graph.contains(v))
      reject(ViolationKind::Discontinuity, {agent}, v,
        role + " " + std::to_string(v) + " is not a vertex");
    if (_s.instance.graph.is_obstacle(v))
      reject(ViolationKind::ObstacleCollision, {agent}, v,
        role + " " + std::to_string(v) + " is an obstacle");
  }

  void add_obstacle(VertexId v)
  {
    const auto& g = _s.instance.graph;
    if (!g.contains(v))
      reject(ViolationKind::Discontinuity, {}, v,
        "vertex " + std::to_string(v) + " does not exist");
    if (g.is_obstacle(v))
      reject(ViolationKind::Discontinuity, {}, v,
        "vertex " + std::to_string(v) + " is already an obstacle");
    if (g.is_charging(v))
      reject(ViolationKind::Discontinuity, {}, v,
        "vertex " + std::to_string(v) + " is a charging station");

    for (const auto& a : _s.instance.agents)
    {
      if (a.goal == v || a.waypoints.count(v))
        reject(ViolationKind::ObstacleCollision, {a.id}, v,
          "vertex " + std::to_string(v) + " is a goal or waypoint of '" + a.id + "'");

      const auto it = _s.active_plan.agents.find(a.id);
      if (it == _s.active_plan.agents.end())
      {
        if (a.start == v)
          reject(ViolationKind::ObstacleCollision, {a.id}, v,
            "vertex " + std::to_string(v) + " is occupied by '" + a.id + "'");
        continue;
      }
      const auto s = state_in_plan(it->second, _t);
      const auto* tr = std::get_if<InTransit>(&s);
      if (occupied_vertex(a, it->second, _t) == v || (tr && tr->to == v))
        reject(ViolationKind::ObstacleCollision, {a.id}, v,
          "vertex " + std::to_string(v) + " is occupied by '" + a.id + "'");
    }

    auto obstacles = g.obstacles();
    obstacles.insert(v);
    _s.instance.set_obstacles(std::move(obstacles));
  }

  void remove_obstacle(VertexId v)
  {
    if (!_s.instance.graph.is_obstacle(v))
      reject(ViolationKind::Discontinuity, {}, v,
        "vertex " + std::to_string(v) + " is not an obstacle");
    auto obstacles = _s.instance.graph.obstacles();
    obstacles.erase(v);
    _s.instance.set_obstacles(std::move(obstacles));
  }

  ExecutionState& _s;
  Time _t;
};

} // namespace detail

//==============================================================================
/// Applies one event and advances the execution clock to its time. Events
/// at one timestep form a batch; the plan must be resolved before the clock
/// moves on.
inline ExecutionState apply_event(ExecutionState state, const Event& event)
{
  if (event.time < state.t_now)
    throw EventRejected(detail::diagnostic(ViolationKind::Discontinuity, {}, 0,
        event.time, "event lies in the past"),
        "event time " + std::to_string(event.time) + " is before the current time "
        + std::to_string(state.t_now));
  if (state.stale && event.time > state.t_now)
    throw PreconditionError("plan_stale",
            "the plan must be resolved before the clock advances");

  state.t_now = event.time;
  std::visit(detail::EventApplier(state, event.time), event.kind);
  state.stale = true;
  return state;
}

//==============================================================================
namespace detail {

struct CurrentState
{
  LocalState local;
  /// Remaining vertex sequence, starting at the current vertex or transit
  /// origin.
  std::vector<VertexId> route;
  int battery = 0;
};

inline CurrentState current_state(
  const AgentSpec& spec, const AgentPlan& a, Time t_now, bool follow_route)
{
  CurrentState c;
  const auto completion = completion_time(spec, a);
  if (completion && *completion <= t_now)
  {
    c.local.at = spec.goal;
    c.local.done = true;
    // Needed when the agent finishes exactly now: the completion step is
    // part of the suffix and carries the final level.
    c.battery = a.battery.back();
    c.local.battery = c.battery;
    return c;
  }

  const auto k = static_cast<std::size_t>(t_now - a.start_time);
  c.battery = a.battery.at(k);
  c.local.battery = c.battery;

  const auto& s = a.trajectory.at(k);
  if (const auto* tr = std::get_if<InTransit>(&s))
  {
    c.local.at = tr->from;
    c.local.to = tr->to;
    c.local.step = tr->step;
    c.route.push_back(tr->from);
  }
  else
  {
    c.local.at = std::get<AtVertex>(s).vertex;
  }

  if (follow_route)
  {
    for (std::size_t j = k; j < a.trajectory.size(); ++j)
    {
      const auto* at = at_vertex(a.trajectory[j]);
      if (at && (c.route.empty() || c.route.back() != at->vertex))
        c.route.push_back(at->vertex);
      if (completion && a.start_time + static_cast<Time>(j) == *completion)
        break;
    }
  }
  else
  {
    // Waypoints visited so far, as a mask over the sorted waypoint set.
    const std::vector<VertexId> w(spec.waypoints.begin(), spec.waypoints.end());
    for (std::size_t j = 0; j < k; ++j)
    {
      const auto* at = at_vertex(a.trajectory[j]);
      for (std::size_t i = 0; at && i < w.size(); ++i)
      {
        if (w[i] == at->vertex)
          c.local.progress |= 1u << i;
      }
    }
  }
  return c;
}

/// Models for every agent at the current time. Existing agents follow their
/// remaining route when `follow_routes` is set; new agents always move
/// freely.
inline JointProblem current_problem(const ExecutionState& state, bool follow_routes)
{
  const Instance& in = state.instance;
  JointProblem p;
  p.instance = &in;
  p.t0 = state.t_now;
  p.order = cost_order(in);
  for (std::size_t i = 0; i < in.agents.size(); ++i)
  {
    const auto& spec = in.agents[i];
    AgentModel m;
    m.agent = i;
    m.release = spec.release;
    const auto it = state.active_plan.agents.find(spec.id);
    if (state.fresh.count(spec.id) || it == state.active_plan.agents.end())
    {
      m.space = std::make_unique<AgentSpace>(
        AgentSpace::Settings{&in.graph, &spec, in.battery_max, false, {}},
        AgentSpace::start_state(spec));
      m.battery = spec.battery;
    }
    else
    {
      auto c = current_state(spec, it->second, state.t_now, follow_routes);
      std::vector<VertexId> route = follow_routes ? c.route : std::vector<VertexId>{};
      if (follow_routes && route.empty())
        route = {spec.goal};
      m.space = std::make_unique<AgentSpace>(
        AgentSpace::Settings{&in.graph, &spec, in.battery_max, false,
          std::move(route)},
        c.local);
      m.battery = c.battery;
    }
    p.models.push_back(std::move(m));
  }
  return p;
}

inline Plan assemble_dynamic(
  const ExecutionState& state,
  const JointProblem& problem,
  const JointSolution& solution)
{
  const Instance& in = state.instance;
  Plan plan;
  for (std::size_t m = 0; m < problem.models.size(); ++m)
  {
    const auto& model = problem.models[m];
    const auto& spec = in.agents[model.agent];
    AgentPlan a;
    const bool known = !state.fresh.count(spec.id)
      && state.active_plan.agents.count(spec.id);
    if (known)
    {
      // The searched suffix starts at t_now itself.
      a = state.prefix_before(spec.id, state.t_now);
    }
    else
    {
      a.start_time = std::max(problem.t0, model.release);
    }
    append_suffix(a, spec, solution.states[m], solution.charges[m],
      model.battery, in.battery_max);
    plan.agents[spec.id] = std::move(a);
  }
  finalize_plan(in, plan);
  return plan;
}

} // namespace detail

//==============================================================================
/// Keeps the vertex sequence of every existing agent and only reschedules
/// its waits and charges, while planning new agents freely. Complete for
/// that restricted space.
inline SolveResult revise_and_augment(
  const ExecutionState& state,
  Time horizon,
  const SolverConfig& config = {})
{
  if (horizon < state.t_now)
    throw PreconditionError("horizon_before_now",
            "horizon must not be earlier than the current time");

  detail::Stopwatch clock;
  SolveResult result;
  const auto problem = detail::current_problem(state, true);
  const auto cancel = config.token();
  try
  {
    const auto sol = solve_joint(problem, horizon, cancel,
        result.stats.nodes_expanded);
    result.stats.horizon_tried = horizon;
    if (sol)
    {
      result.outcome = Outcome::Sat;
      result.plan = detail::assemble_dynamic(state, problem, *sol);
    }
  }
  catch (const SolverTimeout&)
  {
    result.outcome = Outcome::Timeout;
  }
  result.stats.wall_ms = clock.elapsed_ms();
  return result;
}

/// Optimal plan from the agents' current positions, keeping the executed
/// prefix but not the remaining routes.
inline SolveResult replan_from_current(
  const ExecutionState& state,
  const SolverConfig& config = {})
{
  detail::Stopwatch clock;
  SolveResult result;
  const auto problem = detail::current_problem(state, false);
  const auto cancel = config.token();
  const auto lb = detail::lower_bound(problem);
  if (lb)
  {
    try
    {
      for (Time h = std::max(*lb, state.t_now); h <= state.instance.makespan_bound; ++h)
      {
        const auto sol = solve_joint(problem, h, cancel,
            result.stats.nodes_expanded);
        result.stats.horizon_tried = h;
        if (sol)
        {
          result.outcome = Outcome::Sat;
          result.plan = detail::assemble_dynamic(state, problem, *sol);
          break;
        }
      }
    }
    catch (const SolverTimeout&)
    {
      result.outcome = Outcome::Timeout;
    }
  }
  result.stats.wall_ms = clock.elapsed_ms();
  return result;
}

//==============================================================================
enum class DynamicMethod
{
  ReviseAugment,
  Replan
};

inline const char* to_string(DynamicMethod m)
{
  return m == DynamicMethod::ReviseAugment ? "revise_augment" : "replan";
}

struct DynamicPolicy
{
  /// Extra timesteps tried beyond the current makespan before giving up on
  /// revising.
  Time delta_max = 3;
  bool fallback_replan = true;
};

struct DynamicResult
{
  Outcome outcome = Outcome::Unsat;
  std::optional<Plan> plan;
  std::optional<DynamicMethod> method;
  Time horizon_used = -1;
  SolveStats stats;

  bool sat() const { return outcome == Outcome::Sat; }
};

/// Revises at increasing horizons, then optionally replans. On success the
/// new plan becomes the active plan of `state`.
inline DynamicResult resolve_dynamic(
  ExecutionState& state,
  const DynamicPolicy& policy = {},
  const SolverConfig& config = {})
{
  if (!state.stale)
    throw PreconditionError("plan_not_stale", "no event is pending");

  DynamicResult out;
  const auto absorb = [&](const SolveStats& s)
    {
      out.stats.nodes_expanded += s.nodes_expanded;
      out.stats.wall_ms += s.wall_ms;
      out.stats.horizon_tried = s.horizon_tried;
    };

  const Time base = std::max(state.active_plan.makespan, state.t_now);
  const Time last = std::min(base + policy.delta_max,
      std::max(base, state.instance.makespan_bound));
  for (Time h = base; h <= last; ++h)
  {
    const auto r = revise_and_augment(state, h, config);
    absorb(r.stats);
    if (r.outcome == Outcome::Timeout)
    {
      out.outcome = Outcome::Timeout;
      return out;
    }
    if (r.sat())
    {
      out.outcome = Outcome::Sat;
      out.plan = r.plan;
      out.method = DynamicMethod::ReviseAugment;
      out.horizon_used = h;
      break;
    }
  }

  if (!out.sat() && policy.fallback_replan)
  {
    const auto r = replan_from_current(state, config);
    absorb(r.stats);
    out.outcome = r.outcome;
    if (r.sat())
    {
      out.plan = r.plan;
      out.method = DynamicMethod::Replan;
      out.horizon_used = r.stats.horizon_tried;
    }
  }

  if (out.sat())
  {
    state.active_plan = *out.plan;
    state.stale = false;
    state.fresh.clear();
  }
  return out;
}

/// Validation options for plans produced during execution.
inline ValidateOptions execution_options(const ExecutionState& state)
{
  ValidateOptions o;
  o.obstacles_from = state.t_now;
  return o;
}

} // namespace mmapf

#endif // MMAPF__DYNAMIC_HPP
