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

#ifndef MMAPF__IO_HPP
#define MMAPF__IO_HPP

#include <mmapf/dynamic.hpp>
#include <mmapf/explain.hpp>

#include <json.hpp>

#include <sstream>

namespace mmapf {
namespace io {

using json = nlohmann::json;

//==============================================================================
namespace detail {

inline bool is_scalar(const json& j)
{
  return !j.is_object() && !j.is_array();
}

inline bool scalar_array(const json& j)
{
  if (!j.is_array())
    return false;
  for (const auto& e : j)
  {
    if (!is_scalar(e))
      return false;
  }
  return true;
}

inline bool flat_object(const json& j)
{
  if (!j.is_object())
    return false;
  for (const auto& [k, v] : j.items())
  {
    if (!is_scalar(v) && !scalar_array(v))
      return false;
  }
  return true;
}

inline void write(std::string& out, const json& j, int indent, bool in_array)
{
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  const std::string inner(static_cast<std::size_t>(indent + 2), ' ');

  if (is_scalar(j))
  {
    out += j.dump();
    return;
  }

  if (j.is_array())
  {
    if (j.empty())
    {
      out += "[]";
      return;
    }
    if (scalar_array(j))
    {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i)
        out += (i ? ", " : "") + j[i].dump();
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i)
    {
      out += inner;
      write(out, j[i], indent + 2, true);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += pad + "]";
    return;
  }

  if (j.empty())
  {
    out += "{}";
    return;
  }
  if (in_array && flat_object(j))
  {
    out += "{";
    bool first = true;
    for (const auto& [k, v] : j.items())
    {
      out += (first ? "" : ", ") + json(k).dump() + ": ";
      write(out, v, indent, true);
      first = false;
    }
    out += "}";
    return;
  }
  out += "{\n";
  std::size_t i = 0;
  for (const auto& [k, v] : j.items())
  {
    out += inner + json(k).dump() + ": ";
    write(out, v, indent + 2, false);
    out += ++i < j.size() ? ",\n" : "\n";
  }
  out += pad + "}";
}

} // namespace detail

/// Canonical text form: sorted keys, two-space indent, scalar arrays and
/// flat objects inside arrays on one line, trailing newline.
inline std::string dump(const json& j)
{
  std::string out;
  detail::write(out, j, 0, false);
  out += "\n";
  return out;
}

//==============================================================================
namespace detail {

inline std::string join(const std::string& path, const std::string& key)
{
  return path.empty() ? key : path + "." + key;
}

inline std::string index(const std::string& path, std::size_t i)
{
  return path + "[" + std::to_string(i) + "]";
}

inline void expect_object(const json& o, const std::string& path)
{
  if (!o.is_object())
    throw SchemaError(path, "expected an object");
}

inline void only_keys(const json& o, std::initializer_list<const char*> keys,
  const std::string& path)
{
  expect_object(o, path);
  for (const auto& [k, v] : o.items())
  {
    if (std::find_if(keys.begin(), keys.end(),
      [&](const char* x) { return k == x; }) == keys.end())
      throw SchemaError(join(path, k), "unknown field");
  }
}

inline const json& require(const json& o, const char* key, const std::string& path)
{
  expect_object(o, path);
  const auto it = o.find(key);
  if (it == o.end())
    throw SchemaError(join(path, key), "missing field");
  return *it;
}

inline const json* optional(const json& o, const char* key)
{
  const auto it = o.find(key);
  return it == o.end() ? nullptr : &*it;
}

inline int as_int(const json& v, const std::string& path)
{
  if (!v.is_number_integer())
    throw SchemaError(path, "expected an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() / 4 || x > std::numeric_limits<int>::max() / 4)
    throw SchemaError(path, "integer out of range");
  return static_cast<int>(x);
}

inline bool as_bool(const json& v, const std::string& path)
{
  if (!v.is_boolean())
    throw SchemaError(path, "expected a boolean");
  return v.get<bool>();
}

inline std::string as_string(const json& v, const std::string& path)
{
  if (!v.is_string())
    throw SchemaError(path, "expected a string");
  return v.get<std::string>();
}

inline std::vector<int> as_ints(const json& v, const std::string& path)
{
  if (!v.is_array())
    throw SchemaError(path, "expected an array");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_int(v[i], index(path, i)));
  return out;
}

inline std::set<int> as_int_set(const json& v, const std::string& path)
{
  const auto list = as_ints(v, path);
  std::set<int> out(list.begin(), list.end());
  if (out.size() != list.size())
    throw SchemaError(path, "duplicate entries");
  return out;
}

inline json ints(const std::set<int>& s)
{
  return json(std::vector<int>(s.begin(), s.end()));
}

inline json parse_text(const std::string& text)
{
  try
  {
    return json::parse(text);
  }
  catch (const json::parse_error& e)
  {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
}

} // namespace detail

//==============================================================================
inline const char* to_string(Objective o)
{
  switch (o)
  {
    case Objective::Makespan: return "makespan";
    case Objective::TotalTime: return "total_time";
    case Objective::Charges: return "charges";
  }
  return "makespan";
}

inline Objective objective_from(const std::string& s, const std::string& path)
{
  if (s == "makespan")
    return Objective::Makespan;
  if (s == "total_time")
    return Objective::TotalTime;
  if (s == "charges")
    return Objective::Charges;
  throw SchemaError(path, "unknown objective '" + s + "'");
}

//==============================================================================
inline json agent_to_json(const AgentSpec& a)
{
  json j = {
    {"battery", a.battery},
    {"goal", a.goal},
    {"id", a.id},
    {"start", a.start},
    {"waypoints", detail::ints(a.waypoints)}
  };
  if (a.release != 0)
    j["release"] = a.release;
  return j;
}

inline AgentSpec agent_from_json(const json& j, const std::string& path)
{
  detail::only_keys(j,
    {"battery", "goal", "id", "start", "waypoints", "release"}, path);
  AgentSpec a;
  a.id = detail::as_string(detail::require(j, "id", path), detail::join(path, "id"));
  a.start = detail::as_int(detail::require(j, "start", path),
      detail::join(path, "start"));
  a.goal = detail::as_int(detail::require(j, "goal", path),
      detail::join(path, "goal"));
  a.battery = detail::as_int(detail::require(j, "battery", path),
      detail::join(path, "battery"));
  if (const auto* w = detail::optional(j, "waypoints"))
    a.waypoints = detail::as_int_set(*w, detail::join(path, "waypoints"));
  if (const auto* r = detail::optional(j, "release"))
    a.release = detail::as_int(*r, detail::join(path, "release"));
  return a;
}

inline json instance_to_json(const Instance& in)
{
  json j;
  j["agents"] = json::array();
  for (const auto& a : in.agents)
    j["agents"].push_back(agent_to_json(a));
  j["battery_max"] = in.battery_max;
  j["makespan_bound"] = in.makespan_bound;
  j["objectives"] = json::array();
  for (const auto o : in.objectives)
    j["objectives"].push_back(to_string(o));

  if (in.grid)
  {
    const auto& g = *in.grid;
    j["grid"] = {
      {"charging", detail::ints(g.charging)},
      {"cols", g.cols},
      {"obstacles", detail::ints(g.obstacles)},
      {"rows", g.rows},
      {"slow_cells", detail::ints(g.slow_cells)},
      {"slow_duration", g.slow_duration}
    };
  }
  else
  {
    json edges = json::array();
    for (const auto& e : in.graph.edges())
      edges.push_back({{"duration", e.duration}, {"u", e.u}, {"v", e.v}});
    j["graph"] = {
      {"charging", detail::ints(in.graph.charging())},
      {"edges", edges},
      {"obstacles", detail::ints(in.graph.obstacles())},
      {"vertices", in.graph.vertices()}
    };
  }
  return j;
}

inline Instance instance_from_json(const json& j, const std::string& path = "")
{
  using namespace detail;
  only_keys(j, {"agents", "battery_max", "grid", "graph", "makespan_bound",
      "objectives"}, path);

  Instance in;
  const auto* grid = optional(j, "grid");
  const auto* graph = optional(j, "graph");
  if ((grid != nullptr) == (graph != nullptr))
    throw SchemaError(path, "exactly one of 'grid' and 'graph' is required");

  if (grid)
  {
    const std::string p = join(path, "grid");
    only_keys(*grid, {"charging", "cols", "obstacles", "rows", "slow_cells",
        "slow_duration"}, p);
    GridSpec g;
    g.rows = as_int(require(*grid, "rows", p), join(p, "rows"));
    g.cols = as_int(require(*grid, "cols", p), join(p, "cols"));
    if (const auto* v = optional(*grid, "obstacles"))
      g.obstacles = as_int_set(*v, join(p, "obstacles"));
    if (const auto* v = optional(*grid, "slow_cells"))
      g.slow_cells = as_int_set(*v, join(p, "slow_cells"));
    if (const auto* v = optional(*grid, "slow_duration"))
      g.slow_duration = as_int(*v, join(p, "slow_duration"));
    if (const auto* v = optional(*grid, "charging"))
      g.charging = as_int_set(*v, join(p, "charging"));
    if (static_cast<long long>(g.rows) * g.cols > 1'000'000)
      throw SchemaError(p, "grid is too large");
    in.graph = build_graph(g);
    in.grid = g;
  }
  else
  {
    const std::string p = join(path, "graph");
    only_keys(*graph, {"charging", "edges", "obstacles", "vertices"}, p);
    const auto vertices = as_ints(require(*graph, "vertices", p),
        join(p, "vertices"));
    std::vector<Edge> edges;
    const auto& ej = require(*graph, "edges", p);
    if (!ej.is_array())
      throw SchemaError(join(p, "edges"), "expected an array");
    for (std::size_t i = 0; i < ej.size(); ++i)
    {
      const std::string ep = index(join(p, "edges"), i);
      only_keys(ej[i], {"duration", "u", "v"}, ep);
      Edge e;
      e.u = as_int(require(ej[i], "u", ep), join(ep, "u"));
      e.v = as_int(require(ej[i], "v", ep), join(ep, "v"));
      if (const auto* d = optional(ej[i], "duration"))
        e.duration = as_int(*d, join(ep, "duration"));
      edges.push_back(e);
    }
    std::set<VertexId> obstacles;
    std::set<VertexId> charging;
    if (const auto* v = optional(*graph, "obstacles"))
      obstacles = as_int_set(*v, join(p, "obstacles"));
    if (const auto* v = optional(*graph, "charging"))
      charging = as_int_set(*v, join(p, "charging"));
    try
    {
      in.graph = WorldGraph(vertices, edges, obstacles, charging);
    }
    catch (const SchemaError& e)
    {
      throw SchemaError(join(p, e.path()), e.what());
    }
  }

  in.battery_max = as_int(require(j, "battery_max", path), join(path, "battery_max"));
  in.makespan_bound = as_int(require(j, "makespan_bound", path),
      join(path, "makespan_bound"));

  const auto& agents = require(j, "agents", path);
  if (!agents.is_array())
    throw SchemaError(join(path, "agents"), "expected an array");
  for (std::size_t i = 0; i < agents.size(); ++i)
    in.agents.push_back(agent_from_json(agents[i], index(join(path, "agents"), i)));

  if (const auto* o = optional(j, "objectives"))
  {
    if (!o->is_array())
      throw SchemaError(join(path, "objectives"), "expected an array");
    in.objectives.clear();
    for (std::size_t i = 0; i < o->size(); ++i)
    {
      const auto p = index(join(path, "objectives"), i);
      in.objectives.push_back(objective_from(as_string((*o)[i], p), p));
    }
  }

  try
  {
    check_instance(in);
  }
  catch (const SchemaError& e)
  {
    throw SchemaError(join(path, e.path()), e.what());
  }
  return in;
}

inline Instance parse_instance(const std::string& text)
{
  return instance_from_json(detail::parse_text(text));
}

inline std::string serialize_instance(const Instance& in)
{
  return dump(instance_to_json(in));
}

//==============================================================================
inline json state_to_json(const AgentState& s)
{
  if (const auto* at = std::get_if<AtVertex>(&s))
    return {{"at", at->vertex}};
  if (const auto* tr = std::get_if<InTransit>(&s))
    return {{"step", tr->step}, {"transit", {tr->from, tr->to}}};
  return "done";
}

inline AgentState state_from_json(const json& j, const std::string& path,
  const WorldGraph* graph)
{
  using namespace detail;
  if (j.is_string())
  {
    if (j.get<std::string>() != "done")
      throw SchemaError(path, "expected \"done\"");
    return Done{};
  }
  expect_object(j, path);
  if (j.contains("at"))
  {
    only_keys(j, {"at"}, path);
    return AtVertex{as_int(j["at"], join(path, "at"))};
  }
  only_keys(j, {"step", "transit"}, path);
  const auto ends = as_ints(require(j, "transit", path), join(path, "transit"));
  if (ends.size() != 2)
    throw SchemaError(join(path, "transit"), "expected [from, to]");
  const int step = as_int(require(j, "step", path), join(path, "step"));
  if (step < 1)
    throw SchemaError(join(path, "step"), "must be >= 1");
  if (graph)
  {
    const auto d = graph->duration(ends[0], ends[1]);
    if (!d)
      throw SchemaError(join(path, "transit"), "not an edge");
    if (step >= *d)
      throw SchemaError(join(path, "step"), "must be less than the edge duration "
              + std::to_string(*d));
  }
  return InTransit{ends[0], ends[1], step};
}

inline json agent_plan_to_json(const AgentPlan& a)
{
  json route = json::array();
  for (const auto& s : a.trajectory)
    route.push_back(state_to_json(s));
  json j = {
    {"battery", a.battery},
    {"charge_times", detail::ints(a.charge_times)},
    {"route", route}
  };
  if (a.start_time != 0)
    j["start_time"] = a.start_time;
  return j;
}

inline AgentPlan agent_plan_from_json(const json& j, const std::string& path,
  const WorldGraph* graph)
{
  using namespace detail;
  only_keys(j, {"battery", "charge_times", "route", "start_time"}, path);
  AgentPlan a;
  const auto& route = require(j, "route", path);
  if (!route.is_array())
    throw SchemaError(join(path, "route"), "expected an array");
  for (std::size_t i = 0; i < route.size(); ++i)
    a.trajectory.push_back(state_from_json(route[i],
        index(join(path, "route"), i), graph));
  a.battery = as_ints(require(j, "battery", path), join(path, "battery"));
  if (const auto* c = optional(j, "charge_times"))
    a.charge_times = as_int_set(*c, join(path, "charge_times"));
  if (const auto* s = optional(j, "start_time"))
    a.start_time = as_int(*s, join(path, "start_time"));
  return a;
}

inline json plan_to_json(const Plan& p)
{
  json agents = json::object();
  for (const auto& [id, a] : p.agents)
    agents[id] = agent_plan_to_json(a);
  return {{"agents", agents}, {"makespan", p.makespan}};
}

/// Parses a plan. With a graph, transit steps are checked against edge
/// durations.
inline Plan plan_from_json(const json& j, const std::string& path = "",
  const WorldGraph* graph = nullptr)
{
  using namespace detail;
  only_keys(j, {"agents", "makespan"}, path);
  Plan p;
  p.makespan = as_int(require(j, "makespan", path), join(path, "makespan"));
  const auto& agents = require(j, "agents", path);
  expect_object(agents, join(path, "agents"));
  for (const auto& [id, a] : agents.items())
    p.agents[id] = agent_plan_from_json(a, join(join(path, "agents"), id), graph);
  return p;
}

inline Plan parse_plan(const std::string& text, const WorldGraph* graph = nullptr)
{
  return plan_from_json(detail::parse_text(text), "", graph);
}

inline std::string serialize_plan(const Plan& p)
{
  return dump(plan_to_json(p));
}

//==============================================================================
inline json violation_to_json(const Violation& v)
{
  json j = {{"agents", v.agents}, {"kind", to_string(v.kind)}};
  if (v.location.is_edge())
    j["edge"] = {v.location.vertex, *v.location.to};
  else
    j["vertex"] = v.location.vertex;
  if (v.time)
    j["time"] = *v.time;
  if (!v.detail.empty())
    j["detail"] = v.detail;
  return j;
}

inline json report_to_json(const ValidationReport& r)
{
  json violations = json::array();
  for (const auto& v : r.violations)
    violations.push_back(violation_to_json(v));
  json summary = json::object();
  for (const auto& [k, n] : r.summary)
    summary[k] = n;
  return {
    {"categories", categorize(r)},
    {"feasible", r.feasible()},
    {"summary", summary},
    {"violations", violations}
  };
}

//==============================================================================
inline json relaxation_to_json(const Relaxation& r)
{
  json waits = json::array();
  for (const auto& f : r.forbidden_waits)
  {
    json w = {{"agent", f.agent}, {"from", f.from}, {"vertex", f.vertex}};
    if (f.until != kUnbounded)
      w["until"] = f.until;
    waits.push_back(w);
  }
  return {
    {"extra_horizon", r.extra_horizon},
    {"forbidden_waits", waits},
    {"ignore_agent_collisions", r.ignore_agent_collisions},
    {"ignored_obstacles", detail::ints(r.ignored_obstacles)},
    {"unlimited_battery", r.unlimited_battery}
  };
}

inline json objectives_to_json(const ObjectiveValues& v)
{
  return {{"charges", v.charges}, {"makespan", v.makespan},
    {"total_time", v.total_time}};
}

inline json stats_to_json(const SolveStats& s, bool timing)
{
  json j = {{"horizon_tried", s.horizon_tried},
    {"nodes_expanded", s.nodes_expanded}};
  if (timing)
    j["wall_ms"] = s.wall_ms;
  return j;
}

/// Solve result. Wall time is left out unless requested so that outputs stay
/// byte-stable.
inline json result_to_json(const Instance& in, const SolveResult& r,
  bool timing = false)
{
  json j = {{"outcome", to_string(r.outcome)}, {"stats", stats_to_json(r.stats, timing)}};
  if (r.plan)
  {
    j["plan"] = plan_to_json(*r.plan);
    j["objectives"] = objectives_to_json(evaluate(in, *r.plan));
  }
  return j;
}

inline json dynamic_to_json(const Instance& in, const DynamicResult& r,
  bool timing = false)
{
  json j = {
    {"horizon_used", r.horizon_used},
    {"outcome", to_string(r.outcome)},
    {"stats", stats_to_json(r.stats, timing)}
  };
  if (r.method)
    j["method"] = to_string(*r.method);
  if (r.plan)
  {
    j["plan"] = plan_to_json(*r.plan);
    j["objectives"] = objectives_to_json(evaluate(in, *r.plan));
  }
  return j;
}

//==============================================================================
inline json explanation_to_json(const Explanation& e)
{
  json j = {{"kind", kind_name(e)}, {"message", e.message}};
  std::visit([&](const auto& b)
    {
      using B = std::decay_t<decltype(b)>;
      if constexpr (std::is_same_v<B, AlternativePlan>)
      {
        j["plan"] = plan_to_json(b.plan);
      }
      else if constexpr (std::is_same_v<B, DelayedItinerary>)
      {
        j["plan"] = plan_to_json(b.plan);
        j["delay"] = b.delay;
      }
      else if constexpr (std::is_same_v<B, CounterfactualConflict>)
      {
        j["violation"] = violation_to_json(b.violation);
        j["counterfactual"] = plan_to_json(b.counterfactual);
      }
      else if constexpr (std::is_same_v<B, RelaxationSuggestion>)
      {
        j["relaxation"] = relaxation_to_json(b.relaxation);
        j["witness"] = plan_to_json(b.witness);
        j["first_violation"] = violation_to_json(b.first_violation);
      }
      else if constexpr (std::is_same_v<B, OptimalityGap>)
      {
        j["time_delta"] = b.time_delta;
        j["total_time_delta"] = b.total_time_delta;
        j["charge_delta"] = b.charge_delta;
        j["optimal_plan"] = plan_to_json(b.optimal_plan);
      }
      else if constexpr (std::is_same_v<B, FeasibilityConfirmed>)
      {
        j["better_plans"] = json::array();
        for (const auto& p : b.better_plans)
          j["better_plans"].push_back(plan_to_json(p));
      }
      else
      {
        j["categories"] = b.categories;
        j["violations"] = json::array();
        for (const auto& v : b.violations)
          j["violations"].push_back(violation_to_json(v));
      }
    }, e.body);
  return j;
}

/// Answer to a query as JSON. WhyInfeasible yields a list, with a note when
/// no probe succeeded.
inline json answer_to_json(const Query& q, const std::vector<Explanation>& list)
{
  if (std::holds_alternative<WhyInfeasible>(q))
  {
    json j = {{"explanations", json::array()}};
    for (const auto& e : list)
      j["explanations"].push_back(explanation_to_json(e));
    if (list.empty())
      j["message"] = messages::no_relaxation();
    return j;
  }
  return explanation_to_json(list.front());
}

//==============================================================================
inline Query query_from_json(const json& j, const std::string& path = "",
  const WorldGraph* graph = nullptr)
{
  using namespace detail;
  const auto kind = as_string(require(j, "kind", path), join(path, "kind"));
  if (kind == "why_wait")
  {
    only_keys(j, {"kind", "agent", "vertex", "window"}, path);
    WhyWait q;
    q.agent = as_string(require(j, "agent", path), join(path, "agent"));
    q.vertex = as_int(require(j, "vertex", path), join(path, "vertex"));
    if (const auto* w = optional(j, "window"))
    {
      const auto p = join(path, "window");
      only_keys(*w, {"from", "until"}, p);
      WaitWindow win;
      if (const auto* f = optional(*w, "from"))
        win.from = as_int(*f, join(p, "from"));
      if (const auto* u = optional(*w, "until"))
        win.until = as_int(*u, join(p, "until"));
      q.window = win;
    }
    return q;
  }
  if (kind == "why_infeasible")
  {
    only_keys(j, {"kind"}, path);
    return WhyInfeasible{};
  }
  if (kind == "check_modified_plan" || kind == "why_nonoptimal")
  {
    only_keys(j, {"kind", "plan"}, path);
    Plan p = plan_from_json(require(j, "plan", path), join(path, "plan"), graph);
    if (kind == "check_modified_plan")
      return CheckModifiedPlan{std::move(p)};
    return WhyNonoptimal{std::move(p)};
  }
  throw SchemaError(join(path, "kind"), "unknown query kind '" + kind + "'");
}

//==============================================================================
inline json event_to_json(const Event& e)
{
  json j = {{"time", e.time}};
  std::visit([&](const auto& k)
    {
      using K = std::decay_t<decltype(k)>;
      if constexpr (std::is_same_v<K, AgentJoin>)
      {
        j["kind"] = "agent_join";
        AgentSpec a = k.agent;
        a.release = 0;
        j["agent"] = agent_to_json(a);
      }
      else if constexpr (std::is_same_v<K, AgentLeave>)
      {
        j["kind"] = "agent_leave";
        j["agent"] = k.agent;
      }
      else if constexpr (std::is_same_v<K, ObstacleAdd>)
      {
        j["kind"] = "obstacle_add";
        j["vertex"] = k.vertex;
      }
      else if constexpr (std::is_same_v<K, ObstacleRemove>)
      {
        j["kind"] = "obstacle_remove";
        j["vertex"] = k.vertex;
      }
      else
      {
        j["kind"] = "obstacle_move";
        j["from"] = k.from;
        j["to"] = k.to;
      }
    }, e.kind);
  return j;
}

inline Event event_from_json(const json& j, const std::string& path = "")
{
  using namespace detail;
  Event e;
  e.time = as_int(require(j, "time", path), join(path, "time"));
  const auto kind = as_string(require(j, "kind", path), join(path, "kind"));
  if (kind == "agent_join")
  {
    only_keys(j, {"time", "kind", "agent"}, path);
    e.kind = AgentJoin{agent_from_json(require(j, "agent", path),
        join(path, "agent"))};
  }
  else if (kind == "agent_leave")
  {
    only_keys(j, {"time", "kind", "agent"}, path);
    e.kind = AgentLeave{as_string(require(j, "agent", path), join(path, "agent"))};
  }
  else if (kind == "obstacle_add" || kind == "obstacle_remove")
  {
    only_keys(j, {"time", "kind", "vertex"}, path);
    const int v = as_int(require(j, "vertex", path), join(path, "vertex"));
    if (kind == "obstacle_add")
      e.kind = ObstacleAdd{v};
    else
      e.kind = ObstacleRemove{v};
  }
  else if (kind == "obstacle_move")
  {
    only_keys(j, {"time", "kind", "from", "to"}, path);
    e.kind = ObstacleMove{as_int(require(j, "from", path), join(path, "from")),
      as_int(require(j, "to", path), join(path, "to"))};
  }
  else
  {
    throw SchemaError(join(path, "kind"), "unknown event kind '" + kind + "'");
  }
  return e;
}

inline std::vector<Event> parse_events(const std::string& text)
{
  const json j = detail::parse_text(text);
  detail::only_keys(j, {"events"}, "");
  const auto& list = detail::require(j, "events", "");
  if (!list.is_array())
    throw SchemaError("events", "expected an array");
  std::vector<Event> out;
  for (std::size_t i = 0; i < list.size(); ++i)
    out.push_back(event_from_json(list[i], detail::index("events", i)));
  return out;
}

inline std::string serialize_events(const std::vector<Event>& events)
{
  json list = json::array();
  for (const auto& e : events)
    list.push_back(event_to_json(e));
  return dump({{"events", list}});
}

//==============================================================================
inline json execution_to_json(const ExecutionState& s)
{
  json departed = json::object();
  for (const auto& [id, a] : s.departed)
    departed[id] = agent_plan_to_json(a);
  return {
    {"active_plan", plan_to_json(s.active_plan)},
    {"departed", departed},
    {"fresh", std::vector<std::string>(s.fresh.begin(), s.fresh.end())},
    {"instance", instance_to_json(s.instance)},
    {"stale", s.stale},
    {"t_now", s.t_now}
  };
}

inline ExecutionState execution_from_json(const json& j, const std::string& path = "")
{
  using namespace detail;
  only_keys(j, {"active_plan", "departed", "fresh", "instance", "stale", "t_now"},
    path);
  ExecutionState s;
  s.instance = instance_from_json(require(j, "instance", path),
      join(path, "instance"));
  s.active_plan = plan_from_json(require(j, "active_plan", path),
      join(path, "active_plan"), &s.instance.graph);
  s.t_now = as_int(require(j, "t_now", path), join(path, "t_now"));
  s.stale = as_bool(require(j, "stale", path), join(path, "stale"));
  if (const auto* f = optional(j, "fresh"))
  {
    if (!f->is_array())
      throw SchemaError(join(path, "fresh"), "expected an array");
    for (std::size_t i = 0; i < f->size(); ++i)
      s.fresh.insert(as_string((*f)[i], index(join(path, "fresh"), i)));
  }
  if (const auto* d = optional(j, "departed"))
  {
    expect_object(*d, join(path, "departed"));
    for (const auto& [id, a] : d->items())
      s.departed[id] = agent_plan_from_json(a, join(join(path, "departed"), id),
          nullptr);
  }
  return s;
}

//==============================================================================
/// Reads the hand-authoring grid format:
///
///   ..+..
///   .#33.
///   battery_max 10
///   makespan_bound 12
///   agent A1 1 15 battery=10 waypoints=3,7
///
/// Grid rows use '.' for free cells, '#' for obstacles, '+' for charging
/// stations and a digit 2-9 for slow cells with that traversal duration.
inline Instance parse_ascii(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> rows;
  Instance out;
  std::optional<int> slow_duration;
  bool battery_set = false;
  int line_no = 0;

  const auto where = [&]() { return "line " + std::to_string(line_no); };

  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line[0] == ';')
      continue;

    std::istringstream words(line);
    std::string head;
    words >> head;
    if (head == "battery_max")
    {
      if (!(words >> out.battery_max))
        throw SchemaError(where(), "expected an integer after battery_max");
      battery_set = true;
    }
    else if (head == "makespan_bound")
    {
      if (!(words >> out.makespan_bound))
        throw SchemaError(where(), "expected an integer after makespan_bound");
    }
    else if (head == "agent")
    {
      AgentSpec a;
      if (!(words >> a.id >> a.start >> a.goal))
        throw SchemaError(where(), "expected: agent ID START GOAL [battery=B]"
                " [waypoints=a,b]");
      a.battery = -1;
      std::string opt;
      while (words >> opt)
      {
        const auto eq = opt.find('=');
        const std::string key = opt.substr(0, eq);
        const std::string value = eq == std::string::npos ? "" : opt.substr(eq + 1);
        try
        {
          if (key == "battery")
          {
            a.battery = std::stoi(value);
          }
          else if (key == "waypoints")
          {
            std::istringstream list(value);
            std::string item;
            while (std::getline(list, item, ','))
              a.waypoints.insert(std::stoi(item));
          }
          else
          {
            throw SchemaError(where(), "unknown agent option '" + key + "'");
          }
        }
        catch (const std::logic_error&)
        {
          throw SchemaError(where(), "malformed option '" + opt + "'");
        }
      }
      out.agents.push_back(a);
    }
    else
    {
      if (!out.agents.empty() || battery_set)
        throw SchemaError(where(), "grid rows must come first");
      rows.push_back(line);
    }
  }

  if (rows.empty())
    throw SchemaError("grid", "no grid rows");

  GridSpec g;
  g.rows = static_cast<int>(rows.size());
  g.cols = static_cast<int>(rows.front().size());
  for (int r = 0; r < g.rows; ++r)
  {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != g.cols)
      throw SchemaError("grid", "row " + std::to_string(r + 1)
              + " has a different width");
    for (int c = 0; c < g.cols; ++c)
    {
      const VertexId v = r * g.cols + c + 1;
      const char ch = row[static_cast<std::size_t>(c)];
      if (ch == '#')
        g.obstacles.insert(v);
      else if (ch == '+')
        g.charging.insert(v);
      else if (ch >= '2' && ch <= '9')
      {
        if (slow_duration && *slow_duration != ch - '0')
          throw SchemaError("grid", "all slow cells must share one duration");
        slow_duration = ch - '0';
        g.slow_cells.insert(v);
      }
      else if (ch != '.')
        throw SchemaError("grid", std::string("unknown cell character '") + ch + "'");
    }
  }
  g.slow_duration = slow_duration.value_or(2);

  out.graph = build_graph(g);
  out.grid = g;
  for (auto& a : out.agents)
  {
    if (a.battery < 0)
      a.battery = out.battery_max;
  }
  check_instance(out);
  return out;
}

} // namespace io
} // namespace mmapf

#endif // MMAPF__IO_HPP
