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

#ifndef MMAPF__VALIDATOR_HPP
#define MMAPF__VALIDATOR_HPP

#include <mmapf/model.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace mmapf {

inline constexpr const char* kCollisionCategory =
  "collisions with obstacles or other robots";
inline constexpr const char* kBatteryCategory = "low battery-level";
inline constexpr const char* kIncompleteCategory = "task incomplete";
inline constexpr const char* kMalformedCategory = "malformed plan";

inline const char* category_of(ViolationKind kind)
{
  switch (kind)
  {
    case ViolationKind::VertexConflict:
    case ViolationKind::SwapConflict:
    case ViolationKind::EdgeOverlapConflict:
    case ViolationKind::ObstacleCollision:
      return kCollisionCategory;
    case ViolationKind::BatteryDepleted:
      return kBatteryCategory;
    case ViolationKind::WaypointMissed:
    case ViolationKind::GoalMissed:
    case ViolationKind::HorizonExceeded:
      return kIncompleteCategory;
    case ViolationKind::Discontinuity:
      return kMalformedCategory;
  }
  return kMalformedCategory;
}

//==============================================================================
struct ValidationReport
{
  /// Sorted by violation_less, duplicate-free.
  std::vector<Violation> violations;
  /// Violation count per category phrase.
  std::map<std::string, std::size_t> summary;

  bool feasible() const { return violations.empty(); }
};

struct ValidateOptions
{
  Relaxation relax;

  /// Obstacle rules are enforced from this timestep on. Dynamic sessions set
  /// it to the execution clock because the committed prefix may predate an
  /// obstacle change.
  Time obstacles_from = 0;
};

//==============================================================================
/// Category phrases present in the report, in fixed order: collisions,
/// battery, task incomplete, malformed.
inline std::vector<std::string> categorize(const ValidationReport& report)
{
  std::set<std::string> present;
  for (const auto& v : report.violations)
    present.insert(category_of(v.kind));

  std::vector<std::string> out;
  for (const char* c : {kCollisionCategory, kBatteryCategory,
      kIncompleteCategory, kMalformedCategory})
  {
    if (present.count(c))
      out.emplace_back(c);
  }
  return out;
}

namespace detail {

//==============================================================================
/// Where an agent is at one timestep, with Done resolved to its resting
/// vertex.
struct Position
{
  enum class Kind { None, Vertex, Edge } kind = Kind::None;
  VertexId vertex = 0;
  VertexId from = 0;
  VertexId to = 0;
  int step = 0;

  static Position at(VertexId v) { return {Kind::Vertex, v, 0, 0, 0}; }
  static Position on(VertexId from, VertexId to, int step)
  {
    return {Kind::Edge, 0, from, to, step};
  }

  bool is_vertex() const { return kind == Kind::Vertex; }
  bool is_edge() const { return kind == Kind::Edge; }

  Location location() const
  {
    return is_edge() ? Location::edge(from, to) : Location::at(vertex);
  }
};

/// Directed edge occupied during the open interval (t, t+1).
struct EdgeUse
{
  VertexId from = 0;
  VertexId to = 0;
  Time depart = 0;
};

inline std::optional<EdgeUse> edge_use(
  const Position& now, const Position& next, Time t)
{
  if (now.is_vertex() && next.is_vertex() && now.vertex != next.vertex)
    return EdgeUse{now.vertex, next.vertex, t};
  if (now.is_vertex() && next.is_edge() && next.step == 1)
    return EdgeUse{next.from, next.to, t};
  if (now.is_edge())
    return EdgeUse{now.from, now.to, t - now.step};
  return std::nullopt;
}

//==============================================================================
class PlanChecker
{
public:
  PlanChecker(
    const Instance& instance,
    const Plan& plan,
    const ValidateOptions& options)
  : _instance(instance),
    _plan(plan),
    _options(options),
    _graph(relaxed(instance, options.relax).graph),
    _bound(instance.makespan_bound + options.relax.extra_horizon)
  {
    _horizon = plan.makespan;
    for (const auto& [id, a] : plan.agents)
    {
      if (!a.trajectory.empty())
        _horizon = std::max(_horizon, a.end_time());
    }
  }

  ValidationReport run()
  {
    for (const auto& [id, a] : _plan.agents)
    {
      if (!_instance.find_agent(id))
        add(ViolationKind::Discontinuity, {id}, Location::at(0), 0,
          "agent is not part of the instance");
    }

    _positions.assign(_instance.agents.size(), {});
    for (std::size_t i = 0; i < _instance.agents.size(); ++i)
      check_agent(i);

    if (!_options.relax.ignore_agent_collisions)
      check_conflicts();

    std::sort(_violations.begin(), _violations.end(), violation_less);
    _violations.erase(std::unique(_violations.begin(), _violations.end()),
      _violations.end());

    ValidationReport report;
    report.violations = std::move(_violations);
    for (const auto& v : report.violations)
      ++report.summary[category_of(v.kind)];
    return report;
  }

private:
  void add(
    ViolationKind kind,
    std::vector<AgentId> agents,
    Location location,
    std::optional<Time> time,
    std::string detail = {})
  {
    _violations.push_back(
      {kind, std::move(agents), location, time, std::move(detail)});
  }

  bool valid_state(const AgentState& s) const
  {
    if (const auto* at = std::get_if<AtVertex>(&s))
      return _graph.contains(at->vertex);
    if (const auto* tr = std::get_if<InTransit>(&s))
    {
      const auto d = _graph.duration(tr->from, tr->to);
      return d && tr->step >= 1 && tr->step < *d;
    }
    return true;
  }

  bool legal_move(const AgentState& prev, const AgentState& cur) const
  {
    if (const auto* p = std::get_if<AtVertex>(&prev))
    {
      if (const auto* c = std::get_if<AtVertex>(&cur))
        return c->vertex == p->vertex || _graph.duration(p->vertex, c->vertex) == 1;
      if (const auto* c = std::get_if<InTransit>(&cur))
        return c->from == p->vertex && c->step == 1;
      return true; // Done is judged against the completion time
    }
    if (const auto* p = std::get_if<InTransit>(&prev))
    {
      const int d = *_graph.duration(p->from, p->to);
      if (const auto* c = std::get_if<InTransit>(&cur))
        return c->from == p->from && c->to == p->to && c->step == p->step + 1;
      if (const auto* c = std::get_if<AtVertex>(&cur))
        return c->vertex == p->to && p->step + 1 == d;
      return false;
    }
    return std::holds_alternative<Done>(cur);
  }

  void check_agent(std::size_t index)
  {
    const AgentSpec& spec = _instance.agents[index];
    const auto it = _plan.agents.find(spec.id);
    if (it == _plan.agents.end())
    {
      add(ViolationKind::Discontinuity, {spec.id}, Location::at(spec.start), 0,
        "agent is missing from the plan");
      return;
    }

    const AgentPlan& a = it->second;
    const auto& traj = a.trajectory;
    if (traj.empty())
    {
      add(ViolationKind::Discontinuity, {spec.id}, Location::at(spec.start),
        a.start_time, "empty trajectory");
      return;
    }

    if (a.start_time != spec.release)
    {
      add(ViolationKind::Discontinuity, {spec.id}, Location::at(spec.start),
        a.start_time, "trajectory must begin at the agent's release time");
    }

    const Time expected_end = std::max(_plan.makespan, a.start_time);
    if (a.end_time() != expected_end)
    {
      add(ViolationKind::Discontinuity, {spec.id}, Location::at(spec.goal),
        std::min(a.end_time(), expected_end) + 1,
        "trajectory length does not match the plan makespan");
    }

    const auto completion = completion_time(spec, a);

    // V1 continuity and state validity.
    std::vector<bool> valid(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k)
    {
      const Time t = a.start_time + static_cast<Time>(k);
      valid[k] = valid_state(traj[k]);
      if (!valid[k])
      {
        add(ViolationKind::Discontinuity, {spec.id}, Location::at(0), t,
          "state references an unknown vertex or edge");
        continue;
      }

      if (k == 0)
      {
        const auto* at = at_vertex(traj[0]);
        if (!at || at->vertex != spec.start)
        {
          add(ViolationKind::Discontinuity, {spec.id},
            Location::at(spec.start), t, "trajectory must begin at the start");
        }
        continue;
      }

      const bool done = std::holds_alternative<Done>(traj[k]);
      if (done && (!completion || t <= *completion))
      {
        add(ViolationKind::Discontinuity, {spec.id}, Location::at(spec.goal), t,
          "done before completing the task");
        continue;
      }

      if (completion && t > *completion && !done)
      {
        const auto* at = at_vertex(traj[k]);
        if (!at || at->vertex != spec.goal)
        {
          add(ViolationKind::Discontinuity, {spec.id}, Location::at(spec.goal),
            t, "left the goal after completion");
        }
        continue;
      }

      if (valid[k - 1] && !legal_move(traj[k - 1], traj[k]))
      {
        add(ViolationKind::Discontinuity, {spec.id}, position_of(traj[k], spec)
          .location(), t, "states are not connected");
      }
    }

    // Occupancy over the whole timeline, padded at the resting vertex.
    auto& positions = _positions[index];
    positions.assign(static_cast<std::size_t>(_horizon) + 1, Position{});
    Position last;
    for (Time t = a.start_time; t <= _horizon; ++t)
    {
      const auto k = static_cast<std::size_t>(t - a.start_time);
      if (k < traj.size())
      {
        if (valid[k])
        {
          const Position p = position_of(traj[k], spec, &last);
          last = p;
        }
        else
        {
          last = Position{};
        }
        positions[static_cast<std::size_t>(t)] = last;
      }
      else
      {
        positions[static_cast<std::size_t>(t)] =
          last.is_vertex() ? last : Position{};
      }
    }

    check_obstacles(spec, a, positions);

    // V3 horizon, V8 waypoints, V9 goal.
    if (completion)
    {
      if (*completion > _bound)
      {
        add(ViolationKind::HorizonExceeded, {spec.id}, Location::at(spec.goal),
          *completion);
      }
    }
    else
    {
      std::set<VertexId> visited;
      for (const auto& s : traj)
      {
        if (const auto* at = at_vertex(s))
          visited.insert(at->vertex);
      }
      for (const auto w : spec.waypoints)
      {
        if (!visited.count(w))
          add(ViolationKind::WaypointMissed, {spec.id}, Location::at(w), {});
      }
      const Position& final_pos = positions.back();
      if (!final_pos.is_vertex() || final_pos.vertex != spec.goal)
        add(ViolationKind::GoalMissed, {spec.id}, Location::at(spec.goal), {});
    }

    check_battery(spec, a, completion, positions);
  }

  Position position_of(
    const AgentState& s,
    const AgentSpec& spec,
    const Position* previous = nullptr) const
  {
    if (const auto* at = std::get_if<AtVertex>(&s))
      return Position::at(at->vertex);
    if (const auto* tr = std::get_if<InTransit>(&s))
      return Position::on(tr->from, tr->to, tr->step);
    if (previous && previous->is_vertex())
      return *previous;
    return Position::at(spec.goal);
  }

  void check_obstacles(
    const AgentSpec& spec,
    const AgentPlan& a,
    const std::vector<Position>& positions)
  {
    const auto& obstacles = _graph.obstacles();
    for (Time t = std::max(a.start_time, _options.obstacles_from);
      t <= _horizon; ++t)
    {
      const Position& p = positions[static_cast<std::size_t>(t)];
      const Position* prev = t > a.start_time ?
        &positions[static_cast<std::size_t>(t - 1)] : nullptr;
      const bool continuing = prev && t - 1 >= _options.obstacles_from
        && ((prev->is_vertex() && p.is_vertex() && prev->vertex == p.vertex)
        || (prev->is_edge() && prev->to == p.to && p.is_edge())
        || (prev->is_edge() && p.is_vertex() && prev->to == p.vertex));

      if (p.is_vertex() && obstacles.count(p.vertex) && !continuing)
      {
        add(ViolationKind::ObstacleCollision, {spec.id},
          Location::at(p.vertex), t);
      }
      else if (p.is_edge() && p.step == 1 && obstacles.count(p.to))
      {
        add(ViolationKind::ObstacleCollision, {spec.id}, Location::at(p.to), t);
      }
    }
  }

  void check_battery(
    const AgentSpec& spec,
    const AgentPlan& a,
    const std::optional<Time>& completion,
    const std::vector<Position>& positions)
  {
    const Time last = completion.value_or(a.end_time());

    for (const Time c : a.charge_times)
    {
      const auto k = c - a.start_time;
      const AtVertex* at = (k >= 0 && k < static_cast<Time>(a.trajectory.size())) ?
        at_vertex(a.trajectory[static_cast<std::size_t>(k)]) : nullptr;
      if (c >= last || !at)
      {
        add(ViolationKind::Discontinuity, {spec.id}, Location::at(0), c,
          "charge action outside the active trajectory");
      }
      else if (!_graph.is_charging(at->vertex))
      {
        add(ViolationKind::Discontinuity, {spec.id}, Location::at(at->vertex),
          c, "charge action away from a charging station");
      }
    }

    if (_options.relax.unlimited_battery)
      return;

    int level = spec.battery;
    bool mismatch = false;
    for (Time t = a.start_time; t <= last; ++t)
    {
      const auto k = static_cast<std::size_t>(t - a.start_time);
      if (!mismatch && k < a.battery.size() && a.battery[k] != level)
      {
        mismatch = true;
        add(ViolationKind::Discontinuity, {spec.id}, Location::at(0), t,
          "battery trace disagrees with the replayed level");
      }
      if (level < 1)
      {
        const Position& p = positions[static_cast<std::size_t>(
            std::min(t, _horizon))];
        add(ViolationKind::BatteryDepleted, {spec.id},
          p.kind == Position::Kind::None ? Location::at(0) : p.location(), t);
        return;
      }
      level = battery_step(level, a.charge_times.count(t) > 0,
          _instance.battery_max);
    }

    const auto expected = static_cast<std::size_t>(last - a.start_time + 1);
    if (!mismatch && a.battery.size() != expected)
    {
      add(ViolationKind::Discontinuity, {spec.id}, Location::at(0),
        a.start_time + static_cast<Time>(std::min(a.battery.size(), expected)),
        "battery trace length does not match the trajectory");
    }
  }

  void check_conflicts()
  {
    const std::size_t n = _instance.agents.size();
    std::set<std::tuple<std::size_t, std::size_t, Time, Time>> reported;

    for (Time t = 0; t <= _horizon; ++t)
    {
      const auto ut = static_cast<std::size_t>(t);
      for (std::size_t i = 0; i < n; ++i)
      {
        if (_positions[i].empty())
          continue;
        const Position& pi = _positions[i][ut];
        for (std::size_t j = i + 1; j < n; ++j)
        {
          if (_positions[j].empty())
            continue;
          const Position& pj = _positions[j][ut];
          if (pi.is_vertex() && pj.is_vertex() && pi.vertex == pj.vertex)
          {
            add(ViolationKind::VertexConflict, ids(i, j),
              Location::at(pi.vertex), t);
          }

          if (t == 0)
            continue;

          const auto ui = edge_use(_positions[i][ut - 1], pi, t - 1);
          const auto uj = edge_use(_positions[j][ut - 1], pj, t - 1);
          if (!ui || !uj)
            continue;

          const bool opposite = ui->from == uj->to && ui->to == uj->from;
          const bool same = ui->from == uj->from && ui->to == uj->to;
          if (!opposite && !(same && pi.is_edge() && pj.is_edge()))
            continue;

          if (!reported.insert({i, j, ui->depart, uj->depart}).second)
            continue;

          const auto d = _graph.duration(ui->from, ui->to).value_or(1);
          const auto kind = opposite && d == 1 ?
            ViolationKind::SwapConflict : ViolationKind::EdgeOverlapConflict;
          add(kind, ids(i, j), Location::edge(ui->from, ui->to), t);
        }
      }
    }
  }

  std::vector<AgentId> ids(std::size_t i, std::size_t j) const
  {
    return {_instance.agents[i].id, _instance.agents[j].id};
  }

  const Instance& _instance;
  const Plan& _plan;
  const ValidateOptions& _options;
  WorldGraph _graph;
  Time _bound;
  Time _horizon = 0;
  std::vector<std::vector<Position>> _positions;
  std::vector<Violation> _violations;
};

} // namespace detail

//==============================================================================
/// Checks a plan against every rule of the instance and reports all
/// violations. Malformed plans produce Discontinuity entries instead of
/// throwing.
inline ValidationReport validate(
  const Instance& instance,
  const Plan& plan,
  const ValidateOptions& options = {})
{
  return detail::PlanChecker(instance, plan, options).run();
}

} // namespace mmapf

#endif // MMAPF__VALIDATOR_HPP
