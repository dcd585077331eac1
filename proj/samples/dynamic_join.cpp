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

// Executes the 3x3 plan and lets two agents join mid-run.

#include <mmapf/mmapf.hpp>

#include <iostream>

namespace {

void print(const mmapf::Plan& plan)
{
  for (const auto& [id, a] : plan.agents)
  {
    std::cout << "  " << id << " from t=" << a.start_time << ":";
    for (const auto& s : a.trajectory)
    {
      if (const auto* at = mmapf::at_vertex(s))
        std::cout << " " << at->vertex;
    }
    std::cout << "\n";
  }
}

} // anonymous namespace

int main()
{
  using namespace mmapf;

  Instance instance;
  GridSpec grid;
  grid.rows = 3;
  grid.cols = 3;
  instance.grid = grid;
  instance.graph = build_graph(grid);
  instance.battery_max = 50;
  instance.makespan_bound = 8;
  instance.agents = {{"A1", 1, 9, {}, 50, 0}, {"A2", 3, 7, {}, 50, 0}};

  const auto initial = solve_optimal(instance);
  std::cout << "initial makespan " << initial.plan->makespan << "\n";
  print(*initial.plan);

  auto state = start_execution(instance, *initial.plan);
  const std::vector<Event> events = {
    {1, AgentJoin{{"A3", 9, 2, {}, 50, 0}}},
    {2, AgentJoin{{"A4", 7, 1, {}, 50, 0}}}
  };
  for (const auto& e : events)
  {
    state = apply_event(std::move(state), e);
    const auto r = resolve_dynamic(state);
    std::cout << "t=" << e.time << ": " << to_string(r.outcome);
    if (r.method)
      std::cout << " by " << to_string(*r.method);
    std::cout << ", horizon " << r.horizon_used << "\n";
    if (r.plan)
      print(*r.plan);
  }
}
