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

#ifndef MMAPF__SOLVER_HPP
#define MMAPF__SOLVER_HPP

#include <mmapf/detail/group_search.hpp>
#include <mmapf/validator.hpp>

#include <chrono>
#include <memory>

namespace mmapf {

//==============================================================================
enum class Outcome
{
  Sat,
  Unsat,
  Timeout
};

inline const char* to_string(Outcome o)
{
  switch (o)
  {
    case Outcome::Sat: return "sat";
    case Outcome::Unsat: return "unsat";
    case Outcome::Timeout: return "timeout";
  }
  return "unknown";
}

struct SolveStats
{
  std::size_t nodes_expanded = 0;
  /// Largest horizon whose search finished, or -1 if none did.
  Time horizon_tried = -1;
  double wall_ms = 0.0;
};

struct SolveResult
{
  Outcome outcome = Outcome::Unsat;
  /// Present iff outcome is Sat.
  std::optional<Plan> plan;
  SolveStats stats;

  bool sat() const { return outcome == Outcome::Sat; }
};

struct SolverConfig
{
  std::chrono::milliseconds timeout{60000};
  /// Optional external cancel flag, e.g. set by the service on shutdown.
  std::shared_ptr<std::atomic<bool>> cancel;
  /// Largest extra_horizon a relaxation may request.
  Time max_extra_horizon = 3;

  CancelToken token() const { return CancelToken(timeout, cancel); }
};

//==============================================================================
/// One agent prepared for a joint search: its state space, the time it
/// enters the search, and its wait bans.
struct AgentModel
{
  std::size_t agent = 0;
  std::unique_ptr<detail::AgentSpace> space;
  Time release = 0;
  std::vector<detail::WaitBan> bans;
  /// Battery level at the first searched timestep, used to replay traces.
  int battery = 0;
};

struct JointProblem
{
  /// The instance the spaces were built on. Must outlive the problem.
  const Instance* instance = nullptr;
  std::vector<AgentModel> models;
  Time t0 = 0;
  bool collisions = true;
  std::array<detail::CostKey, 2> order =
    {detail::CostKey::TotalTime, detail::CostKey::Charges};
};

/// Per-model searched suffix: local states from max(t0, release) until the
/// model completes, and the charge timesteps.
struct JointSolution
{
  std::vector<std::vector<detail::LocalState>> states;
  std::vector<std::set<Time>> charges;
};

namespace detail {

inline std::array<CostKey, 2> cost_order(const Instance& instance)
{
  std::array<CostKey, 2> order{CostKey::None, CostKey::None};
  std::size_t n = 0;
  const auto add = [&](CostKey k)
    {
      if (std::find(order.begin(), order.begin() + n, k) == order.begin() + n)
        order[n++] = k;
    };
  for (const auto o : instance.objectives)
  {
    if (o == Objective::TotalTime)
      add(CostKey::TotalTime);
    else if (o == Objective::Charges)
      add(CostKey::Charges);
  }
  // Objectives left out of the instance still break ties.
  add(CostKey::TotalTime);
  add(CostKey::Charges);
  return order;
}

inline std::vector<WaitBan> bans_for(
  const Relaxation& relax, const AgentSpec& agent)
{
  std::vector<WaitBan> out;
  for (const auto& f : relax.forbidden_waits)
  {
    if (f.agent == agent.id)
      out.push_back({f.vertex, f.from, f.until});
  }
  return out;
}

/// Models every agent from its start, free to move anywhere.
inline JointProblem free_problem(
  const Instance& instance,
  const Relaxation& relax)
{
  JointProblem p;
  p.instance = &instance;
  p.collisions = !relax.ignore_agent_collisions;
  p.order = cost_order(instance);
  for (std::size_t i = 0; i < instance.agents.size(); ++i)
  {
    const auto& a = instance.agents[i];
    AgentModel m;
    m.agent = i;
    m.space = std::make_unique<AgentSpace>(
      AgentSpace::Settings{&instance.graph, &a, instance.battery_max,
        relax.unlimited_battery, {}},
      AgentSpace::start_state(a));
    m.release = a.release;
    m.bans = bans_for(relax, a);
    m.battery = a.battery;
    p.models.push_back(std::move(m));
  }
  return p;
}

/// Local state of model m at absolute time t in a group solution.
inline int state_at(const GroupSolution& sol, std::size_t m, Time t0, Time t)
{
  const auto& seq = sol.states[m];
  const auto k = static_cast<std::size_t>(std::min<Time>(t - t0,
      static_cast<Time>(seq.size()) - 1));
  return seq[k];
}

//==============================================================================
/// Independence detection: agents are planned in groups that are merged
/// whenever their plans conflict. Returns nullopt when some group has no
/// plan within the horizon.
class IndependenceDetection
{
public:
  IndependenceDetection(
    const JointProblem& problem,
    Time horizon,
    const CancelToken& cancel,
    std::size_t& expanded)
  : _p(problem),
    _horizon(horizon),
    _cancel(cancel),
    _expanded(expanded)
  {
    // Do nothing
  }

  std::optional<JointSolution> run()
  {
    const std::size_t n = _p.models.size();
    _group_of.resize(n);
    for (std::size_t m = 0; m < n; ++m)
    {
      _group_of[m] = m;
      _groups.push_back({m});
    }

    _solutions.resize(n);
    for (std::size_t g = 0; g < n; ++g)
    {
      if (!solve_group(g))
        return std::nullopt;
    }

    while (_p.collisions)
    {
      const auto clash = first_conflict();
      if (!clash)
        break;

      auto [a, b] = *clash;
      if (a > b)
        std::swap(a, b);
      // Merge b into a and keep members in model order.
      for (const auto m : _groups[b])
        _group_of[m] = a;
      _groups[a].insert(_groups[a].end(), _groups[b].begin(), _groups[b].end());
      std::sort(_groups[a].begin(), _groups[a].end());
      _groups[b].clear();
      if (!solve_group(a))
        return std::nullopt;
    }

    JointSolution out;
    out.states.resize(n);
    out.charges.resize(n);
    for (std::size_t m = 0; m < n; ++m)
    {
      const auto& model = _p.models[m];
      const auto& [sol, pos] = _member_solution[m];
      const auto& seq = sol->states[pos];
      bool finished = false;
      for (std::size_t k = 0; k < seq.size() && !finished; ++k)
      {
        if (seq[k] == kAbsent)
          continue;
        const auto& s = model.space->state(seq[k]);
        out.states[m].push_back(s);
        finished = s.done;
        if (!finished && k < sol->charges[pos].size() && sol->charges[pos][k])
          out.charges[m].insert(_p.t0 + static_cast<Time>(k));
      }
    }
    return out;
  }

private:
  bool solve_group(std::size_t g)
  {
    GroupProblem gp;
    gp.t0 = _p.t0;
    gp.horizon = _horizon;
    gp.collisions = _p.collisions;
    gp.order = _p.order;
    for (const auto m : _groups[g])
    {
      const auto& model = _p.models[m];
      gp.members.push_back({model.space.get(), model.release, model.bans});
    }

    GroupSearch search(gp, _cancel);
    auto sol = search.run();
    _expanded += search.expanded();
    if (!sol)
      return false;

    _solutions[g] = std::make_shared<GroupSolution>(std::move(*sol));
    for (std::size_t i = 0; i < _groups[g].size(); ++i)
      _member_solution[_groups[g][i]] = {_solutions[g], i};
    return true;
  }

  Footprint footprint(std::size_t m, Time t) const
  {
    const auto& model = _p.models[m];
    const auto& [sol, pos] = _member_solution.at(m);
    const int a = state_at(*sol, pos, _p.t0, t);
    const int b = state_at(*sol, pos, _p.t0, t + 1);
    if (b == kAbsent)
      return Footprint{};
    if (a == kAbsent)
      return AgentSpace::appear(model.space->state(b));
    return model.space->footprint(a, b);
  }

  bool present(std::size_t m, Time t) const
  {
    const auto& [sol, pos] = _member_solution.at(m);
    return state_at(*sol, pos, _p.t0, t) != kAbsent;
  }

  std::optional<std::pair<std::size_t, std::size_t>> first_conflict() const
  {
    Time end = _p.t0;
    for (const auto& s : _solutions)
    {
      if (s)
        end = std::max(end, s->end);
    }

    const std::size_t n = _p.models.size();
    for (Time t = _p.t0; t < end; ++t)
    {
      for (std::size_t i = 0; i < n; ++i)
      {
        if (!present(i, t + 1))
          continue;
        const auto fi = footprint(i, t);
        for (std::size_t j = i + 1; j < n; ++j)
        {
          if (_group_of[i] == _group_of[j] || !present(j, t + 1))
            continue;
          if (footprints_conflict(fi, footprint(j, t)))
            return std::make_pair(_group_of[i], _group_of[j]);
        }
      }
    }
    return std::nullopt;
  }

  const JointProblem& _p;
  Time _horizon;
  const CancelToken& _cancel;
  std::size_t& _expanded;

  std::vector<std::size_t> _group_of;
  std::vector<std::vector<std::size_t>> _groups;
  std::vector<std::shared_ptr<GroupSolution>> _solutions;
  std::map<std::size_t, std::pair<std::shared_ptr<GroupSolution>, std::size_t>>
  _member_solution;
};

} // namespace detail

//==============================================================================
/// Searches for a joint plan in which every model completes by the horizon.
/// Throws SolverTimeout when the token expires.
inline std::optional<JointSolution> solve_joint(
  const JointProblem& problem,
  Time horizon,
  const CancelToken& cancel,
  std::size_t& expanded)
{
  return detail::IndependenceDetection(problem, horizon, cancel, expanded).run();
}

//==============================================================================
/// Appends a searched suffix to an agent plan. `plan` may already hold a
/// prefix ending just before the first searched state; `level` is the battery
/// at that state.
inline void append_suffix(
  AgentPlan& plan,
  const AgentSpec& agent,
  const std::vector<detail::LocalState>& states,
  const std::set<Time>& charges,
  int level,
  int battery_max)
{
  const Time first = plan.start_time + static_cast<Time>(plan.trajectory.size());
  bool completed = completion_time(agent, plan).has_value();
  for (std::size_t k = 0; k < states.size(); ++k)
  {
    const auto& s = states[k];
    const Time t = first + static_cast<Time>(k);
    bool reached = false;
    if (s.done)
    {
      if (completed)
      {
        plan.trajectory.emplace_back(Done{});
        continue;
      }
      plan.trajectory.emplace_back(AtVertex{agent.goal});
      completed = true;
      reached = true;
    }
    else if (s.in_transit())
    {
      plan.trajectory.emplace_back(InTransit{s.at, s.to, s.step});
    }
    else
    {
      plan.trajectory.emplace_back(AtVertex{s.at});
    }

    plan.battery.push_back(level);
    if (!reached && charges.count(t))
      plan.charge_times.insert(t);
    level = battery_step(level, charges.count(t) > 0, battery_max);
  }
}

/// Pads every trajectory with Done up to the latest completion and sets the
/// plan makespan.
inline void finalize_plan(const Instance& instance, Plan& plan)
{
  Time makespan = 0;
  for (const auto& a : instance.agents)
  {
    const auto it = plan.agents.find(a.id);
    if (it == plan.agents.end())
      continue;
    const auto done = completion_time(a, it->second);
    makespan = std::max(makespan, done.value_or(it->second.end_time()));
    makespan = std::max(makespan, it->second.start_time);
  }
  plan.makespan = makespan;
  for (auto& [id, a] : plan.agents)
  {
    while (a.end_time() < makespan)
      a.trajectory.emplace_back(Done{});
  }
}

/// Builds a plan for agents planned from their start.
inline Plan assemble_plan(
  const Instance& instance,
  const JointProblem& problem,
  const JointSolution& solution)
{
  Plan plan;
  for (std::size_t m = 0; m < problem.models.size(); ++m)
  {
    const auto& model = problem.models[m];
    const auto& spec = instance.agents[model.agent];
    AgentPlan a;
    a.start_time = std::max(problem.t0, model.release);
    append_suffix(a, spec, solution.states[m], solution.charges[m],
      model.battery, instance.battery_max);
    plan.agents[spec.id] = std::move(a);
  }
  finalize_plan(instance, plan);
  return plan;
}

//==============================================================================
namespace detail {

class Stopwatch
{
public:
  double elapsed_ms() const
  {
    return std::chrono::duration<double, std::milli>(
      std::chrono::steady_clock::now() - _start).count();
  }

private:
  std::chrono::steady_clock::time_point _start = std::chrono::steady_clock::now();
};

inline Time horizon_cap(const Instance& instance, const Relaxation& relax)
{
  return instance.makespan_bound + relax.extra_horizon;
}

inline void check_relaxation(
  const Instance& instance,
  const Relaxation& relax,
  const SolverConfig& config)
{
  for (const auto o : relax.ignored_obstacles)
  {
    if (!instance.graph.is_obstacle(o))
      throw SchemaError("relaxation.ignored_obstacles",
              "vertex " + std::to_string(o) + " is not an obstacle");
  }
  if (relax.extra_horizon < 0 || relax.extra_horizon > config.max_extra_horizon)
    throw SchemaError("relaxation.extra_horizon",
            "must lie in [0, " + std::to_string(config.max_extra_horizon) + "]");
  for (const auto& f : relax.forbidden_waits)
  {
    if (!instance.find_agent(f.agent))
      throw SchemaError("relaxation.forbidden_waits",
              "unknown agent '" + f.agent + "'");
  }
}

inline std::optional<Time> lower_bound(const JointProblem& p)
{
  Time bound = 0;
  for (const auto& m : p.models)
  {
    const int h = m.space->heuristic(m.space->initial());
    if (h >= kNoPath)
      return std::nullopt;
    bound = std::max(bound, std::max(p.t0, m.release) + h);
  }
  return bound;
}

/// Test builds define MMAPF_CHECK_PLANS to re-validate every plan a solve
/// returns.
inline Plan checked(const Instance& world, const Relaxation& relax, Plan plan)
{
#ifdef MMAPF_CHECK_PLANS
  ValidateOptions options;
  options.relax = relax;
  options.relax.extra_horizon = 0;
  if (!validate(world, plan, options).feasible())
    throw std::logic_error("solver produced a plan that does not validate");
#else
  (void)world;
  (void)relax;
#endif
  return plan;
}

} // namespace detail

//==============================================================================
/// Earliest completion over agents each planned alone, or nullopt when some
/// agent cannot complete at all.
inline std::optional<Time> makespan_lower_bound(
  const Instance& instance,
  const Relaxation& relax = {})
{
  const Instance world = relaxed(instance, relax);
  const auto problem = detail::free_problem(world, relax);
  return detail::lower_bound(problem);
}

//==============================================================================
/// Decides whether a plan with makespan at most `horizon` exists.
inline SolveResult solve_decision(
  const Instance& instance,
  Time horizon,
  const Relaxation& relax = {},
  const SolverConfig& config = {})
{
  detail::check_relaxation(instance, relax, config);
  if (horizon > detail::horizon_cap(instance, relax))
    throw SchemaError("horizon", "exceeds makespan_bound + extra_horizon");

  detail::Stopwatch clock;
  SolveResult result;
  const Instance world = relaxed(instance, relax);
  const auto problem = detail::free_problem(world, relax);
  const auto cancel = config.token();
  try
  {
    const auto sol = solve_joint(problem, horizon, cancel,
        result.stats.nodes_expanded);
    result.stats.horizon_tried = horizon;
    if (sol)
    {
      result.outcome = Outcome::Sat;
      result.plan = detail::checked(world, relax,
        assemble_plan(world, problem, *sol));
    }
  }
  catch (const SolverTimeout&)
  {
    result.outcome = Outcome::Timeout;
  }
  result.stats.wall_ms = clock.elapsed_ms();
  return result;
}

//==============================================================================
/// Lexicographically optimal plan: smallest makespan within the bound, then
/// the remaining objectives in instance order.
inline SolveResult solve_optimal(
  const Instance& instance,
  const Relaxation& relax = {},
  const SolverConfig& config = {})
{
  detail::check_relaxation(instance, relax, config);

  detail::Stopwatch clock;
  SolveResult result;
  const Instance world = relaxed(instance, relax);
  const auto problem = detail::free_problem(world, relax);
  const auto cancel = config.token();
  const auto lb = detail::lower_bound(problem);
  const Time cap = detail::horizon_cap(instance, relax);
  if (lb)
  {
    try
    {
      for (Time h = *lb; h <= cap; ++h)
      {
        const auto sol = solve_joint(problem, h, cancel,
            result.stats.nodes_expanded);
        result.stats.horizon_tried = h;
        if (sol)
        {
          result.outcome = Outcome::Sat;
          result.plan = detail::checked(world, relax,
        assemble_plan(world, problem, *sol));
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
/// Fastest completion of one agent ignoring all others. The plan holds only
/// that agent.
inline SolveResult single_agent_optimal(
  const Instance& instance,
  const AgentId& agent,
  const Relaxation& relax = {},
  const SolverConfig& config = {})
{
  const auto index = instance.find_agent(agent);
  if (!index)
    throw LookupError("unknown agent '" + agent + "'");

  Instance alone = instance;
  alone.agents = {instance.agents[*index]};
  Relaxation r = relax;
  r.ignore_agent_collisions = true;
  std::erase_if(r.forbidden_waits,
    [&](const ForbiddenWait& f) { return f.agent != agent; });
  return solve_optimal(alone, r, config);
}

} // namespace mmapf

#endif // MMAPF__SOLVER_HPP
