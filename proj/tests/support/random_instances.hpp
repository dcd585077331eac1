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

#ifndef MMAPF_TESTS__SUPPORT__RANDOM_INSTANCES_HPP
#define MMAPF_TESTS__SUPPORT__RANDOM_INSTANCES_HPP

#include <mmapf/model.hpp>

#include <random>

namespace mmapf {
namespace test {

struct RandomSettings
{
  int rows = 4;
  int cols = 4;
  int agents = 2;
  int max_waypoints = 1;
  int battery_max = 8;
  Time horizon = 12;
  double obstacle_density = 0.2;
  int charging_cells = 1;
};

/// Small random grid instance. Equal seeds give equal instances.
inline Instance random_instance(std::uint32_t seed, const RandomSettings& s = {})
{
  std::mt19937 rng(seed);
  const int n = s.rows * s.cols;
  std::vector<VertexId> cells(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    cells[static_cast<std::size_t>(i)] = i + 1;
  std::shuffle(cells.begin(), cells.end(), rng);

  // Reserve distinct cells for starts, goals and waypoints first.
  std::size_t next = 0;
  const auto take = [&]() { return cells[next++]; };

  Instance in;
  in.battery_max = s.battery_max;
  in.makespan_bound = s.horizon;

  std::uniform_int_distribution<int> battery(s.battery_max / 2, s.battery_max);
  std::uniform_int_distribution<int> waypoint_count(0, s.max_waypoints);
  std::set<VertexId> reserved;
  for (int a = 0; a < s.agents; ++a)
  {
    AgentSpec spec;
    spec.id = "A" + std::to_string(a + 1);
    spec.start = take();
    spec.goal = take();
    const int w = waypoint_count(rng);
    for (int k = 0; k < w; ++k)
      spec.waypoints.insert(take());
    spec.battery = battery(rng);
    reserved.insert(spec.start);
    reserved.insert(spec.goal);
    reserved.insert(spec.waypoints.begin(), spec.waypoints.end());
    in.agents.push_back(std::move(spec));
  }

  GridSpec grid;
  grid.rows = s.rows;
  grid.cols = s.cols;
  std::bernoulli_distribution obstacle(s.obstacle_density);
  std::vector<VertexId> free_cells;
  for (int c = 1; c <= n; ++c)
  {
    if (reserved.count(c))
      continue;
    if (obstacle(rng))
      grid.obstacles.insert(c);
    else
      free_cells.push_back(c);
  }

  std::vector<VertexId> candidates(reserved.begin(), reserved.end());
  candidates.insert(candidates.end(), free_cells.begin(), free_cells.end());
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (int k = 0; k < s.charging_cells && k < static_cast<int>(candidates.size()); ++k)
    grid.charging.insert(candidates[static_cast<std::size_t>(k)]);

  if (std::bernoulli_distribution(0.5)(rng))
  {
    std::uniform_int_distribution<int> cell(1, n);
    for (int k = 0; k < 4; ++k)
      grid.slow_cells.insert(cell(rng));
  }

  in.grid = grid;
  in.graph = build_graph(grid);
  return in;
}

} // namespace test
} // namespace mmapf

#endif // MMAPF_TESTS__SUPPORT__RANDOM_INSTANCES_HPP
