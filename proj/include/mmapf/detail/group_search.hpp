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

#ifndef MMAPF__DETAIL__GROUP_SEARCH_HPP
#define MMAPF__DETAIL__GROUP_SEARCH_HPP

#include <mmapf/detail/agent_space.hpp>

#include <array>
#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <queue>
#include <unordered_set>
#include <vector>

namespace mmapf {

//==============================================================================
/// Cooperative cancellation: a wall-clock budget plus an optional external
/// flag. Searches poll it every few hundred node expansions.
class CancelToken
{
public:
  CancelToken() = default;

  explicit CancelToken(
    std::chrono::milliseconds budget,
    std::shared_ptr<std::atomic<bool>> flag = nullptr)
  : _deadline(std::chrono::steady_clock::now() + budget),
    _flag(std::move(flag))
  {
    // Do nothing
  }

  bool expired() const
  {
    if (_flag && _flag->load())
      return true;
    return _deadline && std::chrono::steady_clock::now() > *_deadline;
  }

private:
  std::optional<std::chrono::steady_clock::time_point> _deadline;
  std::shared_ptr<std::atomic<bool>> _flag;
};

/// Thrown when a solve runs out of budget.
class SolverTimeout : public Error
{
public:
  SolverTimeout() : Error("solver timed out") {}
};

namespace detail {

inline constexpr int kAbsent = -1;

struct WaitBan
{
  VertexId vertex = 0;
  Time from = 0;
  Time until = 0;
};

struct Member
{
  const AgentSpace* space = nullptr;
  /// The member does not exist before this timestep.
  Time release = 0;
  std::vector<WaitBan> banned_waits;
};

enum class CostKey
{
  None,
  TotalTime,
  Charges
};

struct GroupProblem
{
  std::vector<Member> members;
  Time t0 = 0;
  Time horizon = 0;
  bool collisions = true;
  /// Secondary objectives in priority order.
  std::array<CostKey, 2> order = {CostKey::TotalTime, CostKey::Charges};
};

struct Cost
{
  long long total_time = 0;
  long long charges = 0;

  Cost& operator+=(const Cost& o)
  {
    total_time += o.total_time;
    charges += o.charges;
    return *this;
  }
};

inline std::array<long long, 2> ordered(const Cost& c,
  const std::array<CostKey, 2>& order)
{
  std::array<long long, 2> out{0, 0};
  for (std::size_t i = 0; i < 2; ++i)
  {
    if (order[i] == CostKey::TotalTime)
      out[i] = c.total_time;
    else if (order[i] == CostKey::Charges)
      out[i] = c.charges;
  }
  return out;
}

struct GroupSolution
{
  /// states[m][k] is the local state of member m at t0 + k (kAbsent before
  /// release).
  std::vector<std::vector<int>> states;
  /// charges[m][k] is set when member m charges during step t0 + k.
  std::vector<std::vector<bool>> charges;
  Time end = 0;
  Cost cost;
};

//==============================================================================
/// A* over the time-expanded joint state space of a group of agents. Finds a
/// plan in which every member completes by the horizon and which minimises
/// the secondary objectives lexicographically.
class GroupSearch
{
public:
  GroupSearch(const GroupProblem& problem, const CancelToken& cancel)
  : _p(problem),
    _k(problem.members.size()),
    _cancel(cancel),
    _table(1024, KeyHash{this}, KeyEq{this})
  {
    // Do nothing
  }

  std::optional<GroupSolution> run()
  {
    std::vector<int> init(_k);
    for (std::size_t m = 0; m < _k; ++m)
    {
      const auto& mem = _p.members[m];
      init[m] = mem.release <= _p.t0 ? mem.space->initial() : kAbsent;
      if (member_bound(m, init[m], _p.t0) > _p.horizon)
        return std::nullopt;
    }

    if (_cancel.expired())
      throw SolverTimeout();

    const int root = add_node(init, -1, _p.t0, Cost{}, 0);
    _table.insert(root);
    push(root);

    std::vector<int> next(_k);
    while (!_open.empty())
    {
      const OpenEntry top = _open.top();
      _open.pop();
      Node& node = _nodes[static_cast<std::size_t>(top.node)];
      if (node.closed || top.g_total != node.g.total_time
        || top.g_charges != node.g.charges)
        continue;
      node.closed = true;

      if ((++_expanded & 0xff) == 0 && _cancel.expired())
        throw SolverTimeout();

      if (all_done(top.node))
        return reconstruct(top.node);

      expand(top.node);
    }
    return std::nullopt;
  }

  std::size_t expanded() const { return _expanded; }

private:
  struct Node
  {
    int parent = -1;
    Time t = 0;
    Cost g;
    std::uint64_t charge_mask = 0;
    bool closed = false;
  };

  struct OpenEntry
  {
    std::array<long long, 2> f;
    Time t;
    std::uint64_t seq;
    int node;
    long long g_total;
    long long g_charges;

    bool operator<(const OpenEntry& o) const
    {
      // std::priority_queue pops the largest element.
      if (f != o.f)
        return f > o.f;
      if (t != o.t)
        return t < o.t;
      return seq > o.seq;
    }
  };

  struct KeyHash
  {
    const GroupSearch* self;
    std::size_t operator()(int id) const
    {
      std::uint64_t h = static_cast<std::uint64_t>(
        self->_nodes[static_cast<std::size_t>(id)].t) * 0x9E3779B97F4A7C15ull;
      for (const int s : self->slice(id))
        h = (h ^ static_cast<std::uint32_t>(s)) * 0x100000001B3ull;
      return static_cast<std::size_t>(h ^ (h >> 31));
    }
  };

  struct KeyEq
  {
    const GroupSearch* self;
    bool operator()(int a, int b) const
    {
      if (self->_nodes[static_cast<std::size_t>(a)].t
        != self->_nodes[static_cast<std::size_t>(b)].t)
        return false;
      const auto sa = self->slice(a);
      const auto sb = self->slice(b);
      return std::equal(sa.begin(), sa.end(), sb.begin());
    }
  };

  struct Candidate
  {
    int next;
    bool charge;
    Footprint footprint;
    bool present;
  };

  std::span<const int> slice(int id) const
  {
    return {_pool.data() + static_cast<std::size_t>(id) * _k, _k};
  }

  int add_node(const std::vector<int>& states, int parent, Time t, Cost g,
    std::uint64_t charge_mask)
  {
    const int id = static_cast<int>(_nodes.size());
    _pool.insert(_pool.end(), states.begin(), states.end());
    _nodes.push_back({parent, t, g, charge_mask, false});
    return id;
  }

  void drop_last_node()
  {
    _nodes.pop_back();
    _pool.resize(_pool.size() - _k);
  }

  /// Earliest possible completion time of member m in state s at time t.
  long long member_bound(std::size_t m, int s, Time t) const
  {
    const auto& mem = _p.members[m];
    if (s == kAbsent)
    {
      const int h = mem.space->heuristic(mem.space->initial());
      return h >= kNoPath ? kNoPath : static_cast<long long>(mem.release) + h;
    }
    const int h = mem.space->heuristic(s);
    return h >= kNoPath ? kNoPath : static_cast<long long>(t) + h;
  }

  bool member_done(std::size_t m, int s) const
  {
    return s != kAbsent && _p.members[m].space->done(s);
  }

  bool all_done(int id) const
  {
    const auto s = slice(id);
    for (std::size_t m = 0; m < _k; ++m)
    {
      if (!member_done(m, s[m]))
        return false;
    }
    return true;
  }

  void push(int id)
  {
    const Node& n = _nodes[static_cast<std::size_t>(id)];
    Cost f = n.g;
    const auto s = slice(id);
    for (std::size_t m = 0; m < _k; ++m)
    {
      if (!member_done(m, s[m]))
        f.total_time += member_bound(m, s[m], n.t) - n.t;
    }
    _open.push({ordered(f, _p.order), n.t, _seq++, id, n.g.total_time,
        n.g.charges});
  }

  bool banned(const Member& mem, VertexId v, Time t) const
  {
    for (const auto& b : mem.banned_waits)
    {
      if (b.vertex == v && b.from <= t && t + 1 <= b.until)
        return true;
    }
    return false;
  }

  void expand(int id)
  {
    const Time t = _nodes[static_cast<std::size_t>(id)].t;
    if (t >= _p.horizon)
      return;

    const std::vector<int> current(slice(id).begin(), slice(id).end());
    _candidates.assign(_k, {});
    Cost step;
    for (std::size_t m = 0; m < _k; ++m)
    {
      const auto& mem = _p.members[m];
      const int s = current[m];
      auto& out = _candidates[m];
      if (!member_done(m, s))
        step.total_time += 1;

      if (s == kAbsent)
      {
        if (t + 1 == mem.release)
        {
          const int init = mem.space->initial();
          out.push_back({init, false,
              AgentSpace::appear(mem.space->state(init)), true});
        }
        else
        {
          out.push_back({kAbsent, false, Footprint{}, false});
        }
        continue;
      }

      for (const auto& tr : mem.space->successors(s))
      {
        if (tr.wait && banned(mem, mem.space->vertex(s), t))
          continue;
        if (member_bound(m, tr.target, t + 1) > _p.horizon)
          continue;
        out.push_back({tr.target, tr.charge,
            mem.space->footprint(s, tr.target), true});
      }
      if (out.empty())
        return;
    }

    _choice.assign(_k, 0);
    combine(id, t, step, 0);
  }

  void combine(int parent, Time t, const Cost& step, std::size_t m)
  {
    if (m == _k)
    {
      emit(parent, t, step);
      return;
    }

    const auto& options = _candidates[m];
    for (std::size_t i = 0; i < options.size(); ++i)
    {
      const auto& c = options[i];
      if (_p.collisions && c.present)
      {
        bool clash = false;
        for (std::size_t o = 0; o < m && !clash; ++o)
        {
          const auto& other = _candidates[o][_choice[o]];
          clash = other.present && footprints_conflict(c.footprint, other.footprint);
        }
        if (clash)
          continue;
      }
      _choice[m] = i;
      combine(parent, t, step, m + 1);
    }
  }

  void emit(int parent, Time t, const Cost& step)
  {
    std::vector<int>& next = _scratch;
    next.resize(_k);
    Cost g = _nodes[static_cast<std::size_t>(parent)].g;
    g += step;
    std::uint64_t mask = 0;
    for (std::size_t m = 0; m < _k; ++m)
    {
      const auto& c = _candidates[m][_choice[m]];
      next[m] = c.next;
      if (c.charge)
      {
        g.charges += 1;
        mask |= 1ull << m;
      }
    }

    const int id = add_node(next, parent, t + 1, g, mask);
    const auto [it, inserted] = _table.insert(id);
    if (inserted)
    {
      push(id);
      return;
    }

    Node& existing = _nodes[static_cast<std::size_t>(*it)];
    const bool better = !existing.closed
      && ordered(g, _p.order) < ordered(existing.g, _p.order);
    const int existing_id = *it;
    drop_last_node();
    if (better)
    {
      Node& e = _nodes[static_cast<std::size_t>(existing_id)];
      e.g = g;
      e.parent = parent;
      e.charge_mask = mask;
      push(existing_id);
    }
  }

  GroupSolution reconstruct(int goal) const
  {
    std::vector<int> chain;
    for (int id = goal; id != -1; id = _nodes[static_cast<std::size_t>(id)].parent)
      chain.push_back(id);
    std::reverse(chain.begin(), chain.end());

    GroupSolution sol;
    sol.end = _nodes[static_cast<std::size_t>(goal)].t;
    sol.cost = _nodes[static_cast<std::size_t>(goal)].g;
    sol.states.assign(_k, {});
    sol.charges.assign(_k, {});
    for (std::size_t i = 0; i < chain.size(); ++i)
    {
      const auto s = slice(chain[i]);
      const auto mask = _nodes[static_cast<std::size_t>(chain[i])].charge_mask;
      for (std::size_t m = 0; m < _k; ++m)
      {
        sol.states[m].push_back(s[m]);
        if (i > 0)
          sol.charges[m].push_back((mask >> m) & 1u);
      }
    }
    return sol;
  }

  const GroupProblem& _p;
  std::size_t _k;
  const CancelToken& _cancel;

  std::vector<int> _pool;
  std::vector<Node> _nodes;
  std::unordered_set<int, KeyHash, KeyEq> _table;
  std::priority_queue<OpenEntry> _open;
  std::uint64_t _seq = 0;
  std::size_t _expanded = 0;

  std::vector<std::vector<Candidate>> _candidates;
  std::vector<std::size_t> _choice;
  std::vector<int> _scratch;
};

} // namespace detail
} // namespace mmapf

#endif // MMAPF__DETAIL__GROUP_SEARCH_HPP
