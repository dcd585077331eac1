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

// Solves the 3x10 warehouse fixture and prints the plan with battery traces.

#include <mmapf/mmapf.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char* argv[])
{
  const std::string path = argc > 1
    ? argv[1] : std::string(MMAPF_FIXTURES_DIR) + "/fix_m.json";
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();

  const auto instance = mmapf::io::parse_instance(text.str());
  const auto result = mmapf::solve_optimal(instance);
  std::cout << "outcome: " << mmapf::to_string(result.outcome) << "\n";
  if (!result.plan)
    return 1;

  const auto values = mmapf::evaluate(instance, *result.plan);
  std::cout << "makespan " << values.makespan << ", total time "
            << values.total_time << ", charges " << values.charges << "\n";
  for (const auto& [id, a] : result.plan->agents)
  {
    std::cout << id << ":";
    for (const auto& s : a.trajectory)
    {
      if (const auto* at = mmapf::at_vertex(s))
        std::cout << " " << at->vertex;
      else if (std::holds_alternative<mmapf::InTransit>(s))
        std::cout << " ~";
      else
        std::cout << " --";
    }
    std::cout << "\n   battery:";
    for (const auto b : a.battery)
      std::cout << " " << b;
    std::cout << "\n";
  }
}
