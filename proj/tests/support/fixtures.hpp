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

#ifndef MMAPF_TESTS__SUPPORT__FIXTURES_HPP
#define MMAPF_TESTS__SUPPORT__FIXTURES_HPP

#include <mmapf/io.hpp>

#include <fstream>
#include <sstream>

namespace mmapf {
namespace test {

inline std::string fixture_path(const std::string& name)
{
  return std::string(MMAPF_FIXTURES_DIR) + "/" + name;
}

inline std::string read_text(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Instance load_instance(const std::string& name)
{
  return io::parse_instance(read_text(fixture_path(name)));
}

inline Plan load_plan(const std::string& name, const Instance& instance)
{
  return io::parse_plan(read_text(fixture_path(name)), &instance.graph);
}

inline std::vector<Event> load_events(const std::string& name)
{
  return io::parse_events(read_text(fixture_path(name)));
}

/// Route of an agent as vertex ids, with -1 for transit and 0 for done.
inline std::vector<int> route_of(const Plan& plan, const AgentId& agent)
{
  std::vector<int> out;
  for (const auto& s : plan.agents.at(agent).trajectory)
  {
    if (const auto* at = at_vertex(s))
      out.push_back(at->vertex);
    else if (std::holds_alternative<InTransit>(s))
      out.push_back(-1);
    else
      out.push_back(0);
  }
  return out;
}

/// Hand-written agent route: a vertex per arrival, repeated for waits.
/// Moves along slow edges expand into transit states.
struct Route
{
  AgentId agent;
  std::vector<VertexId> vertices;
  std::set<Time> charges = {};
  Time start_time = 0;
};

/// Inverse of make_plan for plans it can express: the vertex at each
/// arrival or wait, transit steps and Done padding dropped.
inline std::vector<Route> routes_of(const Plan& plan)
{
  std::vector<Route> out;
  for (const auto& [id, a] : plan.agents)
  {
    Route r{id, {}, a.charge_times, a.start_time};
    for (const auto& s : a.trajectory)
    {
      if (const auto* at = at_vertex(s))
        r.vertices.push_back(at->vertex);
      else if (std::holds_alternative<Done>(s))
        break;
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Builds a plan from routes. Agents that finish are padded with Done, the
/// others keep waiting at their last vertex; batteries are replayed without
/// a floor so that depletion stays visible to the validator.
inline Plan make_plan(const Instance& instance, const std::vector<Route>& routes)
{
  Plan plan;
  for (const auto& r : routes)
  {
    AgentPlan a;
    a.start_time = r.start_time;
    a.charge_times = r.charges;
    for (std::size_t i = 0; i < r.vertices.size(); ++i)
    {
      if (i > 0 && r.vertices[i] != r.vertices[i - 1])
      {
        // Jumps between non-adjacent vertices are kept as single steps so that
        // broken routes can be built on purpose.
        const int d = instance.graph.duration(r.vertices[i - 1], r.vertices[i])
          .value_or(1);
        for (int step = 1; step < d; ++step)
          a.trajectory.push_back(InTransit{r.vertices[i - 1], r.vertices[i], step});
      }
      a.trajectory.push_back(AtVertex{r.vertices[i]});
    }
    plan.makespan = std::max(plan.makespan, a.end_time());
    plan.agents[r.agent] = std::move(a);
  }

  for (auto& [id, a] : plan.agents)
  {
    const auto& spec = instance.agent(id);
    const auto completion = completion_time(spec, a);
    const VertexId last = at_vertex(a.trajectory.back())->vertex;
    while (a.end_time() < plan.makespan)
    {
      if (completion)
        a.trajectory.push_back(Done{});
      else
        a.trajectory.push_back(AtVertex{last});
    }

    const Time until = completion.value_or(a.end_time());
    int level = spec.battery;
    for (Time t = a.start_time; t <= until; ++t)
    {
      a.battery.push_back(level);
      level = battery_step(level, a.charge_times.count(t) > 0, instance.battery_max);
    }
  }
  return plan;
}

/// Recomputes an agent's battery trace from its charge times, without a
/// floor, so that a hand edit shows up as depletion rather than a mismatch.
inline void replay_battery(const Instance& instance, Plan& plan, const AgentId& agent)
{
  auto& a = plan.agents.at(agent);
  int level = instance.agent(agent).battery;
  for (std::size_t k = 0; k < a.battery.size(); ++k)
  {
    a.battery[k] = level;
    const Time t = a.start_time + static_cast<Time>(k);
    level = battery_step(level, a.charge_times.count(t) > 0, instance.battery_max);
  }
}

} // namespace test
} // namespace mmapf

#endif // MMAPF_TESTS__SUPPORT__FIXTURES_HPP
