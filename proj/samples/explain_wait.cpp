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

// Asks why A2 waits at cell 8 in a plan for the small crossing graph.

#include <mmapf/mmapf.hpp>

#include <iostream>

int main()
{
  using namespace mmapf;

  Instance instance;
  instance.graph = WorldGraph({2, 5, 6, 7, 8, 11},
      {{7, 11, 1}, {7, 8, 1}, {6, 7, 1}, {5, 6, 1}, {2, 6, 1}});
  instance.battery_max = 20;
  instance.makespan_bound = 4;
  instance.agents = {{"A1", 11, 5, {7}, 20, 0}, {"A2", 8, 2, {7}, 20, 0}};

  // A2 waits one step at 8 while A1 passes through 7.
  const auto plan = io::parse_plan(R"({
    "agents": {
      "A1": {"battery": [20, 19, 18, 17], "charge_times": [],
             "route": [{"at": 11}, {"at": 7}, {"at": 6}, {"at": 5}, "done"]},
      "A2": {"battery": [20, 19, 18, 17, 16], "charge_times": [],
             "route": [{"at": 8}, {"at": 8}, {"at": 7}, {"at": 6}, {"at": 2}]}
    },
    "makespan": 4
  })", &instance.graph);

  const auto e = why_wait(instance, plan, "A2", 8);
  std::cout << e.message << "\n" << io::dump(io::explanation_to_json(e));
}
