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

#ifndef MMAPF__EXPLAIN_HPP
#define MMAPF__EXPLAIN_HPP

#include <mmapf/solver.hpp>

namespace mmapf {

//==============================================================================
struct WaitWindow
{
  Time from = 0;
  Time until = kUnbounded;

  bool operator==(const WaitWindow&) const = default;
};

struct WhyWait
{
  AgentId agent;
  VertexId vertex = 0;
  std::optional<WaitWindow> window;
};

struct WhyInfeasible {};

struct CheckModifiedPlan
{
  Plan plan;
};

struct WhyNonoptimal
{
  Plan plan;
};

using Query = std::variant<WhyWait, WhyInfeasible, CheckModifiedPlan, WhyNonoptimal>;

//==============================================================================
struct AlternativePlan
{
  Plan plan;
};

struct DelayedItinerary
{
  Plan plan;
  Time delay = 0;
};

struct CounterfactualConflict
{
  Violation violation;
  /// The plan with the waits removed, which fails validation.
  Plan counterfactual;
};

struct RelaxationSuggestion
{
  Relaxation relaxation;
  Plan witness;
  /// First violation of the witness against the unrelaxed instance.
  Violation first_violation;
};

struct OptimalityGap
{
  Time time_delta = 0;
  long long total_time_delta = 0;
  long long charge_delta = 0;
  Plan optimal_plan;
};

struct FeasibilityConfirmed
{
  std::vector<Plan> better_plans;
};

struct InfeasibilityReport
{
  std::vector<std::string> categories;
  std::vector<Violation> violations;
};

struct Explanation
{
  std::variant<AlternativePlan, DelayedItinerary, CounterfactualConflict,
    RelaxationSuggestion, OptimalityGap, FeasibilityConfirmed,
    InfeasibilityReport> body;
  std::string message;
};

inline const char* kind_name(const Explanation& e)
{
  static const char* names[] = {"alternative_plan", "delayed_itinerary",
    "counterfactual_conflict", "relaxation_suggestion", "optimality_gap",
    "feasibility_confirmed", "infeasibility_report"};
  return names[e.body.index()];
}

/// Raised by a query whose plan fails validation.
class PlanInfeasible : public PreconditionError
{
public:
  explicit PlanInfeasible(ValidationReport report)
  : PreconditionError("plan_infeasible", "the plan does not validate"),
    _report(std::move(report))
  {
    // Do nothing
  }

  const ValidationReport& report() const { return _report; }

private:
  ValidationReport _report;
};

//==============================================================================
namespace messages {

inline std::string count(long long n, const std::string& noun)
{
  return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

inline std::string cell(VertexId v)
{
  return "Cell " + std::to_string(v);
}

inline std::string span(Time from, Time until)
{
  return "from time step " + std::to_string(from) + " to " + std::to_string(until);
}

inline std::string place(const Location& l)
{
  if (l.is_edge())
    return "on the edge between " + cell(l.vertex) + " and " + cell(*l.to);
  return "at " + cell(l.vertex);
}

inline std::string alternative(const AgentId& agent, VertexId v, Time from,
  Time until)
{
  return "Actually, " + agent + " does not have to wait at " + cell(v) + " "
    + span(from, until) + ". Here is an alternative optimal plan.";
}

inline std::string delayed(const AgentId& agent, VertexId v, Time from,
  Time until, Time delay)
{
  return "Actually, " + agent + " does not have to wait at " + cell(v) + " "
    + span(from, until) + ", but it needs to follow a different itinerary and"
    " will be late by " + count(delay, "time step") + ".";
}

/// Consequence clause for a violation of `agent`'s plan.
inline std::string consequence(const AgentId& agent, const Violation& v)
{
  const std::string at_time = " at time step " + std::to_string(v.time.value_or(0));
  if (is_inter_agent(v.kind))
  {
    const AgentId& other = v.agents.front() == agent ? v.agents.back()
      : v.agents.front();
    return "it will collide with " + other + " " + place(v.location) + at_time;
  }
  switch (v.kind)
  {
    case ViolationKind::ObstacleCollision:
      return "it will collide with the obstacle " + place(v.location) + at_time;
    case ViolationKind::BatteryDepleted:
      return "its battery will be depleted" + at_time;
    default:
      return "it will not complete its task within the makespan bound";
  }
}

inline std::string counterfactual(const AgentId& agent, VertexId v, Time from,
  Time until, const Violation& violation)
{
  return "If " + agent + " does not wait at " + cell(v) + " " + span(from, until)
    + ", " + consequence(agent, violation) + ".";
}

inline std::string collision(const Violation& v)
{
  return "There is no solution because " + v.agents.front() + " and "
    + v.agents.back() + " collide " + place(v.location) + " at time step "
    + std::to_string(v.time.value_or(0)) + ".";
}

inline std::string obstacle(const Violation& v)
{
  return "There is no solution because " + v.agents.front()
    + " collides with the obstacle " + place(v.location) + " at time step "
    + std::to_string(v.time.value_or(0)) + "; this suggests removing this obstacle.";
}

inline std::string more_time(Time k)
{
  return "There is no solution because some more time is needed: "
    + count(k, "more time step") + " would allow a plan.";
}

inline std::string more_battery()
{
  return "There is no solution because the battery is insufficient;"
    " more charging is required.";
}

inline std::string no_relaxation()
{
  return "No single relaxation explains the infeasibility;"
    " larger obstacle subsets are not probed.";
}

inline std::string infeasible(const std::vector<std::string>& categories)
{
  std::string joined;
  for (std::size_t i = 0; i < categories.size(); ++i)
    joined += (i ? " and " : "") + categories[i];
  return "The plan is infeasible due to " + joined + ".";
}

inline std::string feasible(const std::optional<ObjectiveValues>& better)
{
  if (!better)
    return "The plan is feasible and no better plan exists.";
  return "The plan is feasible. A better plan exists with makespan "
    + std::to_string(better->makespan) + ", total time "
    + std::to_string(better->total_time) + " and "
    + count(better->charges, "charge") + ".";
}

inline std::string nonoptimal_time(Time makespan_delta, long long total_delta)
{
  return "The plan is not optimal because some more time is needed to complete"
    " tasks: its makespan exceeds the optimum by "
    + count(makespan_delta, "time step") + " and its total time by "
    + count(total_delta, "time step") + ".";
}

inline std::string nonoptimal_charging(long long charge_delta)
{
  return "The plan is not optimal because some more charging is required"
    " than necessary: it uses " + count(charge_delta, "extra charge action") + ".";
}

inline std::string optimal()
{
  return "The plan is optimal.";
}

} // namespace messages

//==============================================================================
namespace detail {

/// Wait steps t (AtVertex(v) at t and t+1, before completion) inside the
/// window.
inline std::vector<Time> waits_of(const Instance& instance, const Plan& plan,
  const AgentId& agent, VertexId v, const WaitWindow& window)
{
  const auto& spec = instance.agent(agent);
  const auto& a = plan.agents.at(agent);
  const Time done = completion_time(spec, a).value_or(a.end_time());
  std::vector<Time> out;
  for (std::size_t k = 0; k + 1 < a.trajectory.size(); ++k)
  {
    const Time t = a.start_time + static_cast<Time>(k);
    if (t >= done)
      break;
    const auto* x = at_vertex(a.trajectory[k]);
    const auto* y = at_vertex(a.trajectory[k + 1]);
    if (x && y && x->vertex == v && y->vertex == v
      && window.from <= t && t + 1 <= window.until)
      out.push_back(t);
  }
  return out;
}

inline SolveResult required(SolveResult r)
{
  if (r.outcome == Outcome::Timeout)
    throw SolverTimeout();
  return r;
}

/// The agent's plan with the given wait steps deleted and the rest shifted
/// earlier, padded at the end. Charges taken during a deleted wait are lost.
inline Plan remove_waits(const Instance& instance, const Plan& plan,
  const AgentId& agent, const std::vector<Time>& waits)
{
  const auto& spec = instance.agent(agent);
  Plan out = plan;
  AgentPlan& a = out.agents.at(agent);
  const std::set<Time> removed(waits.begin(), waits.end());

  std::vector<AgentState> traj;
  for (std::size_t k = 0; k < a.trajectory.size(); ++k)
  {
    const Time t = a.start_time + static_cast<Time>(k);
    if (!removed.count(t - 1))
      traj.push_back(a.trajectory[k]);
  }

  std::set<Time> charges;
  for (const Time c : a.charge_times)
  {
    if (removed.count(c))
      continue;
    const auto shift = std::distance(removed.begin(), removed.lower_bound(c));
    charges.insert(c - static_cast<Time>(shift));
  }

  // The goal may now be reached earlier; re-derive the Done padding.
  a.trajectory.clear();
  a.charge_times = charges;
  bool completed = false;
  for (const auto& s : traj)
  {
    if (completed)
    {
      a.trajectory.emplace_back(Done{});
      continue;
    }
    a.trajectory.push_back(std::holds_alternative<Done>(s) ?
      AgentState{AtVertex{spec.goal}} : s);
    completed = completion_time(spec, a).has_value();
  }
  while (a.end_time() < out.makespan)
    a.trajectory.emplace_back(Done{});

  a.battery.clear();
  const Time last = completion_time(spec, a).value_or(a.end_time());
  int level = spec.battery;
  for (Time t = a.start_time; t <= last; ++t)
  {
    a.battery.push_back(level);
    level = battery_step(level, a.charge_times.count(t) > 0, instance.battery_max);
  }
  return out;
}

inline Explanation relaxation_suggestion(const Instance& instance,
  const Relaxation& relax, const Plan& witness,
  ViolationKind wanted_kind, std::optional<VertexId> wanted_vertex = {})
{
  const auto report = validate(instance, witness);
  std::optional<Violation> first;
  for (const auto& v : report.violations)
  {
    const bool kind_ok = wanted_kind == ViolationKind::VertexConflict ?
      is_inter_agent(v.kind) : v.kind == wanted_kind;
    if (kind_ok && (!wanted_vertex || v.location.vertex == *wanted_vertex))
    {
      first = v;
      break;
    }
  }
  if (!first && !report.violations.empty())
    first = report.violations.front();

  Explanation e;
  RelaxationSuggestion body{relax, witness, first.value_or(Violation{})};
  switch (wanted_kind)
  {
    case ViolationKind::ObstacleCollision:
      e.message = messages::obstacle(body.first_violation);
      break;
    case ViolationKind::HorizonExceeded:
      e.message = messages::more_time(relax.extra_horizon);
      break;
    case ViolationKind::BatteryDepleted:
      e.message = messages::more_battery();
      break;
    default:
      e.message = messages::collision(body.first_violation);
      break;
  }
  e.body = std::move(body);
  return e;
}

} // namespace detail

//==============================================================================
/// Explains why an agent waits at a vertex: either the wait is avoidable at
/// the optimal makespan, avoidable only with a delay, or removing it causes
/// a violation.
inline Explanation why_wait(
  const Instance& instance,
  const Plan& plan,
  const AgentId& agent,
  VertexId vertex,
  const std::optional<WaitWindow>& window = std::nullopt,
  const SolverConfig& config = {})
{
  instance.agent(agent);
  const auto report = validate(instance, plan);
  if (!report.feasible())
    throw PlanInfeasible(report);

  const WaitWindow w = window.value_or(WaitWindow{});
  const auto waits = detail::waits_of(instance, plan, agent, vertex, w);
  if (waits.empty())
    throw PreconditionError("no_such_wait", agent + " does not wait at "
            + messages::cell(vertex) + " in the given window");

  const Time from = waits.front();
  const Time until = waits.back() + 2;

  const auto base = detail::required(solve_optimal(instance, {}, config));
  // The plan is feasible, so the instance has an optimum.
  const Time optimum = base.plan->makespan;

  Relaxation ban;
  ban.forbidden_waits.push_back({agent, vertex, w.from, w.until});

  const auto at_optimum = detail::required(
    solve_decision(instance, optimum, ban, config));
  if (at_optimum.sat())
  {
    return {AlternativePlan{*at_optimum.plan},
      messages::alternative(agent, vertex, from, until)};
  }

  const auto later = detail::required(solve_optimal(instance, ban, config));
  if (later.sat())
  {
    const Time delay = later.plan->makespan - optimum;
    return {DelayedItinerary{*later.plan, delay},
      messages::delayed(agent, vertex, from, until, delay)};
  }

  Plan counterfactual = detail::remove_waits(instance, plan, agent, waits);
  const auto cf_report = validate(instance, counterfactual);
  Violation first;
  for (const auto& v : cf_report.violations)
  {
    if (std::find(v.agents.begin(), v.agents.end(), agent) != v.agents.end())
    {
      first = v;
      break;
    }
  }
  return {CounterfactualConflict{first, std::move(counterfactual)},
    messages::counterfactual(agent, vertex, from, until, first)};
}

//==============================================================================
/// Probes single relaxations of an unsolvable instance, in fixed order:
/// agent collisions, each obstacle, extra horizon, unlimited battery.
inline std::vector<Explanation> why_infeasible(
  const Instance& instance,
  const SolverConfig& config = {})
{
  if (detail::required(solve_optimal(instance, {}, config)).sat())
    throw PreconditionError("instance_is_feasible",
            "the instance has a solution");

  std::vector<Explanation> out;

  Relaxation collisions;
  collisions.ignore_agent_collisions = true;
  if (const auto r = detail::required(solve_optimal(instance, collisions, config));
    r.sat())
  {
    out.push_back(detail::relaxation_suggestion(instance, collisions, *r.plan,
        ViolationKind::VertexConflict));
  }

  for (const auto o : instance.graph.obstacles())
  {
    Relaxation relax;
    relax.ignored_obstacles = {o};
    const auto r = detail::required(solve_optimal(instance, relax, config));
    if (r.sat())
    {
      out.push_back(detail::relaxation_suggestion(instance, relax, *r.plan,
          ViolationKind::ObstacleCollision, o));
    }
  }

  if (config.max_extra_horizon > 0)
  {
    Relaxation longer;
    longer.extra_horizon = config.max_extra_horizon;
    const auto r = detail::required(solve_optimal(instance, longer, config));
    if (r.sat())
    {
      longer.extra_horizon = r.plan->makespan - instance.makespan_bound;
      out.push_back(detail::relaxation_suggestion(instance, longer, *r.plan,
          ViolationKind::HorizonExceeded));
    }
  }

  Relaxation battery;
  battery.unlimited_battery = true;
  if (const auto r = detail::required(solve_optimal(instance, battery, config));
    r.sat())
  {
    out.push_back(detail::relaxation_suggestion(instance, battery, *r.plan,
        ViolationKind::BatteryDepleted));
  }
  return out;
}

//==============================================================================
/// Checks an edited plan: reports why it fails, or confirms it and attaches
/// a better plan when one exists.
inline Explanation check_modified_plan(
  const Instance& instance,
  const Plan& plan,
  const SolverConfig& config = {})
{
  const auto report = validate(instance, plan);
  if (!report.feasible())
  {
    auto categories = categorize(report);
    auto message = messages::infeasible(categories);
    return {InfeasibilityReport{std::move(categories), report.violations},
      std::move(message)};
  }

  const auto best = detail::required(solve_optimal(instance, {}, config));
  const auto mine = evaluate(instance, plan);
  const auto theirs = evaluate(instance, *best.plan);
  if (ordered_objectives(instance, theirs) < ordered_objectives(instance, mine))
    return {FeasibilityConfirmed{{*best.plan}}, messages::feasible(theirs)};
  return {FeasibilityConfirmed{}, messages::feasible(std::nullopt)};
}

//==============================================================================
/// Compares a feasible plan with a lexicographic optimum.
inline Explanation why_nonoptimal(
  const Instance& instance,
  const Plan& plan,
  const SolverConfig& config = {})
{
  const auto report = validate(instance, plan);
  if (!report.feasible())
    throw PlanInfeasible(report);

  const auto best = detail::required(solve_optimal(instance, {}, config));
  const auto mine = evaluate(instance, plan);
  const auto theirs = evaluate(instance, *best.plan);

  OptimalityGap gap;
  gap.time_delta = mine.makespan - theirs.makespan;
  gap.total_time_delta = mine.total_time - theirs.total_time;
  gap.charge_delta = mine.charges - theirs.charges;
  gap.optimal_plan = *best.plan;

  // The first objective, in priority order, on which the plan falls behind.
  std::string message = messages::optimal();
  for (const auto o : instance.objectives)
  {
    const long long d = o == Objective::Makespan ? gap.time_delta
      : o == Objective::TotalTime ? gap.total_time_delta : gap.charge_delta;
    if (d == 0)
      continue;
    message = o == Objective::Charges ?
      messages::nonoptimal_charging(gap.charge_delta) :
      messages::nonoptimal_time(gap.time_delta, gap.total_time_delta);
    break;
  }
  return {std::move(gap), std::move(message)};
}

//==============================================================================
/// Answers a query. WhyInfeasible yields the probe list; the other queries a
/// single explanation.
inline std::vector<Explanation> answer(
  const Instance& instance,
  const Plan* plan,
  const Query& query,
  const SolverConfig& config = {})
{
  return std::visit([&](const auto& q) -> std::vector<Explanation>
      {
        using Q = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<Q, WhyWait>)
        {
          if (!plan)
            throw PreconditionError("plan_required", "why-wait needs a plan");
          return {why_wait(instance, *plan, q.agent, q.vertex, q.window, config)};
        }
        else if constexpr (std::is_same_v<Q, WhyInfeasible>)
          return why_infeasible(instance, config);
        else if constexpr (std::is_same_v<Q, CheckModifiedPlan>)
          return {check_modified_plan(instance, q.plan, config)};
        else
          return {why_nonoptimal(instance, q.plan, config)};
      }, query);
}

} // namespace mmapf

#endif // MMAPF__EXPLAIN_HPP
