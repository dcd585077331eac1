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

#ifndef MMAPF__DETAIL__AGENT_SPACE_HPP
#define MMAPF__DETAIL__AGENT_SPACE_HPP

#include <mmapf/model.hpp>

#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

namespace mmapf {
namespace detail {

inline constexpr int kNoPath = std::numeric_limits<int>::max() / 4;

//==============================================================================
/// Time-free state of a single agent. For free agents `progress` is the
/// visited-waypoint mask; for route-bound agents it is the index of the last
/// route vertex reached.
struct LocalState
{
  VertexId at = 0;
  VertexId to = 0;
  int step = 0;
  std::uint32_t progress = 0;
  int battery = 0;
  bool done = false;

  bool in_transit() const { return to != 0; }

  bool operator==(const LocalState&) const = default;
};

struct LocalStateHash
{
  std::size_t operator()(const LocalState& s) const
  {
    std::uint64_t h = static_cast<std::uint32_t>(s.at);
    h = h * 1000003u ^ static_cast<std::uint32_t>(s.to);
    h = h * 1000003u ^ static_cast<std::uint32_t>(s.step);
    h = h * 1000003u ^ s.progress;
    h = h * 1000003u ^ static_cast<std::uint32_t>(s.battery);
    h = h * 1000003u ^ static_cast<std::uint32_t>(s.done);
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

struct Transition
{
  int target = 0;
  bool charge = false;
  /// Stays on the same vertex (waiting, possibly while charging).
  bool wait = false;
};

//==============================================================================
/// What an agent occupies during one step t -> t+1, used for conflict tests.
struct Footprint
{
  /// Vertex occupied at t+1, or 0.
  VertexId vertex = 0;
  /// Directed edge occupied during the open interval (t, t+1), if any.
  VertexId edge_from = 0;
  VertexId edge_to = 0;
  int edge_duration = 0;
  /// Whether the agent is still on that edge at t+1.
  bool transit_next = false;
};

inline bool footprints_conflict(const Footprint& a, const Footprint& b)
{
  if (a.vertex != 0 && a.vertex == b.vertex)
    return true;
  if (a.edge_from == 0 || b.edge_from == 0)
    return false;
  if (a.edge_from == b.edge_to && a.edge_to == b.edge_from)
    return true;
  return a.transit_next && b.transit_next
    && a.edge_from == b.edge_from && a.edge_to == b.edge_to;
}

//==============================================================================
/// Explicit state graph of one agent ignoring every other agent, together
/// with the exact number of steps to completion from each state.
class AgentSpace
{
public:
  struct Settings
  {
    const WorldGraph* graph = nullptr;
    const AgentSpec* agent = nullptr;
    int battery_max = 1;
    bool unlimited_battery = false;
    /// When non-empty the agent may only follow this vertex sequence,
    /// inserting waits.
    std::vector<VertexId> route;
  };

  AgentSpace(Settings settings, LocalState initial)
  : _graph(settings.graph),
    _agent(settings.agent),
    _battery_max(settings.battery_max),
    _unlimited(settings.unlimited_battery),
    _route(std::move(settings.route))
  {
    _waypoints.assign(_agent->waypoints.begin(), _agent->waypoints.end());
    _full_mask = _waypoints.empty() ?
      0u : static_cast<std::uint32_t>((1ull << _waypoints.size()) - 1);

    if (_unlimited && !initial.done)
      initial.battery = 0;
    if (!initial.done && !initial.in_transit())
    {
      if (route_bound())
      {
        initial.done = initial.progress + 1 == _route.size();
      }
      else
      {
        initial.progress = visit(initial.progress, initial.at);
        initial.done = initial.at == _agent->goal
          && initial.progress == _full_mask;
      }
    }
    if (initial.done)
      initial = done_state();

    _initial = intern(initial);
    explore();
    compute_heuristic();
  }

  /// State of a free agent standing at its start vertex.
  static LocalState start_state(const AgentSpec& agent)
  {
    LocalState s;
    s.at = agent.start;
    s.battery = agent.battery;
    return s;
  }

  int initial() const { return _initial; }
  std::size_t size() const { return _states.size(); }
  const LocalState& state(int i) const { return _states[static_cast<std::size_t>(i)]; }
  bool done(int i) const { return state(i).done; }
  int heuristic(int i) const { return _heuristic[static_cast<std::size_t>(i)]; }
  const AgentSpec& agent() const { return *_agent; }
  bool route_bound() const { return !_route.empty(); }
  const std::vector<VertexId>& route() const { return _route; }

  std::span<const Transition> successors(int i) const
  {
    return _successors[static_cast<std::size_t>(i)];
  }

  /// Vertex occupied in state i, or 0 when in transit.
  VertexId vertex(int i) const
  {
    const auto& s = state(i);
    return s.in_transit() ? 0 : s.at;
  }

  Footprint footprint(int from, int to) const
  {
    const auto& a = state(from);
    const auto& b = state(to);
    Footprint f;
    if (!b.in_transit())
      f.vertex = b.at;

    if (a.in_transit())
    {
      f.edge_from = a.at;
      f.edge_to = a.to;
    }
    else if (b.in_transit())
    {
      f.edge_from = b.at;
      f.edge_to = b.to;
    }
    else if (a.at != b.at)
    {
      f.edge_from = a.at;
      f.edge_to = b.at;
    }

    if (f.edge_from != 0)
    {
      f.edge_duration = *_graph->duration(f.edge_from, f.edge_to);
      f.transit_next = b.in_transit();
    }
    return f;
  }

  /// Footprint of an agent appearing at its start vertex.
  static Footprint appear(const LocalState& s)
  {
    Footprint f;
    f.vertex = s.in_transit() ? 0 : s.at;
    return f;
  }

  /// Index of a state if it is reachable from the initial state.
  std::optional<int> find(const LocalState& s) const
  {
    const auto it = _index.find(s);
    if (it == _index.end())
      return std::nullopt;
    return it->second;
  }

private:
  LocalState done_state() const
  {
    LocalState s;
    s.at = _agent->goal;
    s.done = true;
    return s;
  }

  int intern(const LocalState& s)
  {
    const auto [it, inserted] = _index.emplace(s, static_cast<int>(_states.size()));
    if (inserted)
    {
      _states.push_back(s);
      _successors.emplace_back();
    }
    return it->second;
  }

  std::uint32_t visit(std::uint32_t mask, VertexId v) const
  {
    for (std::size_t i = 0; i < _waypoints.size(); ++i)
    {
      if (_waypoints[i] == v)
        return mask | (1u << i);
    }
    return mask;
  }

  /// Arrival at vertex v. Returns the done state when this completes the
  /// task.
  LocalState arrive(const LocalState& from, VertexId v, std::uint32_t progress,
    int battery) const
  {
    LocalState s;
    s.at = v;
    s.battery = battery;
    if (route_bound())
    {
      s.progress = progress;
      if (progress + 1 == _route.size())
        return done_state();
    }
    else
    {
      s.progress = visit(from.progress, v);
      if (v == _agent->goal && s.progress == _full_mask)
        return done_state();
    }
    return s;
  }

  void expand(int index, std::vector<Transition>& out)
  {
    const LocalState s = state(index);
    if (s.done)
    {
      out.push_back({index, false, false});
      return;
    }

    const auto next_battery = [&](bool charge)
      {
        if (_unlimited)
          return 0;
        return battery_step(s.battery, charge, _battery_max);
      };

    if (s.in_transit())
    {
      const int b = next_battery(false);
      if (!_unlimited && b < 1)
        return;
      const int d = *_graph->duration(s.at, s.to);
      if (s.step + 1 < d)
      {
        LocalState n = s;
        n.step += 1;
        n.battery = b;
        out.push_back({intern(n), false, false});
      }
      else
      {
        const auto progress = route_bound() ? s.progress + 1 : s.progress;
        out.push_back({intern(arrive(s, s.to, progress, b)), false, false});
      }
      return;
    }

    // Moves to smaller vertices first, then the wait; charging variants
    // after all plain actions.
    std::vector<VertexId> targets;
    if (route_bound())
    {
      if (s.progress + 1 < _route.size())
        targets.push_back(_route[s.progress + 1]);
    }
    else
    {
      for (const auto& n : _graph->neighbors(s.at))
        targets.push_back(n.vertex);
    }

    const bool can_charge = !_unlimited && _graph->is_charging(s.at);
    for (const bool charge : {false, true})
    {
      if (charge && !can_charge)
        break;
      const int b = next_battery(charge);
      if (!_unlimited && b < 1)
        continue;

      for (const auto v : targets)
      {
        if (_graph->is_obstacle(v))
          continue;
        const int d = *_graph->duration(s.at, v);
        if (d == 1)
        {
          const auto progress = route_bound() ? s.progress + 1 : s.progress;
          out.push_back({intern(arrive(s, v, progress, b)), charge, false});
        }
        else
        {
          LocalState n = s;
          n.to = v;
          n.step = 1;
          n.battery = b;
          out.push_back({intern(n), charge, false});
        }
      }

      LocalState w = s;
      w.battery = b;
      out.push_back({intern(w), charge, true});
    }
  }

  void explore()
  {
    for (std::size_t i = 0; i < _states.size(); ++i)
    {
      std::vector<Transition> out;
      expand(static_cast<int>(i), out);
      _successors[i] = std::move(out);
    }
  }

  void compute_heuristic()
  {
    const std::size_t n = _states.size();
    std::vector<std::vector<int>> reverse(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      for (const auto& tr : _successors[i])
      {
        if (tr.target != static_cast<int>(i))
          reverse[static_cast<std::size_t>(tr.target)].push_back(static_cast<int>(i));
      }
    }

    _heuristic.assign(n, kNoPath);
    std::deque<int> queue;
    for (std::size_t i = 0; i < n; ++i)
    {
      if (_states[i].done)
      {
        _heuristic[i] = 0;
        queue.push_back(static_cast<int>(i));
      }
    }
    while (!queue.empty())
    {
      const int u = queue.front();
      queue.pop_front();
      for (const int p : reverse[static_cast<std::size_t>(u)])
      {
        auto& h = _heuristic[static_cast<std::size_t>(p)];
        if (h == kNoPath)
        {
          h = _heuristic[static_cast<std::size_t>(u)] + 1;
          queue.push_back(p);
        }
      }
    }
  }

  const WorldGraph* _graph;
  const AgentSpec* _agent;
  int _battery_max;
  bool _unlimited;
  std::vector<VertexId> _route;
  std::vector<VertexId> _waypoints;
  std::uint32_t _full_mask = 0;

  int _initial = 0;
  std::vector<LocalState> _states;
  std::unordered_map<LocalState, int, LocalStateHash> _index;
  std::vector<std::vector<Transition>> _successors;
  std::vector<int> _heuristic;
};

} // namespace detail
} // namespace mmapf

#endif // MMAPF__DETAIL__AGENT_SPACE_HPP
