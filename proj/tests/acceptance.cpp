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

// Acceptance run: one PASS or FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed in the constants below.

#include <support/goldens.hpp>
#include <support/oracle.hpp>
#include <support/random_instances.hpp>

#include <mmapf/mmapf.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>

using namespace mmapf;
using Clock = std::chrono::steady_clock;

namespace {

constexpr auto kFixMBudget = std::chrono::seconds(60);
constexpr Time kFixMBound = 18;
constexpr auto kFixDBudget = std::chrono::seconds(5);
constexpr std::uint32_t kOracleSeeds = 60;
constexpr auto kOracleBudget = std::chrono::minutes(10);
constexpr int kPropertyCases = 1000;

/// Thrown by `expect` with the reason a criterion failed.
struct Unmet : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what)
{
  if (!ok)
    throw Unmet(what);
}

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v)
{
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

std::vector<int> vertex_route(const Plan& plan, const AgentId& id)
{
  std::vector<int> out;
  for (const auto& s : plan.agents.at(id).trajectory)
  {
    if (const auto* at = at_vertex(s))
      out.push_back(at->vertex);
  }
  return out;
}

bool waits_at(const Plan& plan, const AgentId& id, VertexId v)
{
  const auto& t = plan.agents.at(id).trajectory;
  for (std::size_t k = 0; k + 1 < t.size(); ++k)
  {
    const auto* a = at_vertex(t[k]);
    const auto* b = at_vertex(t[k + 1]);
    if (a && b && a->vertex == v && b->vertex == v)
      return true;
  }
  return false;
}

//==============================================================================
std::string fix_m()
{
  const auto m = test::load_instance("fix_m.json");
  const auto plan = test::load_plan("fix_m_plan.json", m);
  const auto report = validate(m, plan);
  expect(report.violations.empty(), "reference plan has violations");

  const std::map<AgentId, std::vector<int>> rows = {
    {"A1", {10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 10, 9, 8, 7, 6, 5, 4, 3}},
    {"A2", {8, 7, 6, 5, 10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 10, 9, 8, 7, 6}}};
  for (const auto& [id, row] : rows)
  {
    const auto& a = plan.agents.at(id);
    std::vector<int> replay;
    int level = m.agent(id).battery;
    for (std::size_t k = 0; k < row.size(); ++k)
    {
      replay.push_back(level);
      level = a.charge_times.count(static_cast<Time>(k)) ? m.battery_max : level - 1;
    }
    expect(replay == row, id + " battery replay differs from the reference row");
    expect(a.battery == row, id + " stored battery row differs from the reference row");
  }

  const auto start = Clock::now();
  SolverConfig config;
  config.timeout = kFixMBudget;
  const auto r = solve_optimal(m, {}, config);
  const double took = seconds_since(start);
  expect(r.sat(), "solve_optimal did not return sat");
  expect(r.plan->makespan <= kFixMBound, "makespan above 18");
  expect(validate(m, *r.plan).feasible(), "solved plan does not validate");
  return "reference plan validates, battery rows 18+19 exact, solve makespan "
    + std::to_string(r.plan->makespan) + " in " + fixed(took) + " s";
}

std::string fix_d()
{
  const auto start = Clock::now();
  const auto d = test::load_instance("fix_d.json");
  const auto events = test::load_events("fix_d_events.json");
  const auto initial = solve_optimal(d);
  expect(initial.sat() && initial.plan->makespan == 4, "initial makespan is not 4");

  auto state = start_execution(d, test::load_plan("fix_d_plan.json", d));
  const auto a1 = vertex_route(state.active_plan, "A1");
  const auto a2 = vertex_route(state.active_plan, "A2");
  state = apply_event(state, events.at(0));
  const auto first = resolve_dynamic(state);
  expect(first.sat() && first.method == DynamicMethod::ReviseAugment
    && first.horizon_used == 4, "A3 join not revised at horizon 4");
  expect(vertex_route(*first.plan, "A1") == a1 && vertex_route(*first.plan, "A2") == a2,
    "A1/A2 routes changed");

  state = apply_event(state, events.at(1));
  expect(revise_and_augment(state, 4).outcome == Outcome::Unsat,
    "revise at horizon 4 is not unsat after A4");
  expect(revise_and_augment(state, 5).sat(), "revise at horizon 5 is not sat");

  const auto joined = test::load_plan("fix_d_after_joins_plan.json", state.instance);
  expect(validate(state.instance, joined, execution_options(state)).feasible(),
    "the hand-written plan after both joins does not validate");
  for (const auto* id : {"A1", "A2", "A3"})
  {
    const auto r = vertex_route(joined, id);
    int waits = 0;
    for (std::size_t k = 0; k + 1 < r.size(); ++k)
      waits += r[k] == r[k + 1] ? 1 : 0;
    expect(waits == 1, std::string(id) + " does not wait exactly once");
  }
  expect(vertex_route(joined, "A4") == std::vector<int>{7, 4, 1},
    "A4 route is not 7,4,1");

  const double took = seconds_since(start);
  expect(took < std::chrono::duration<double>(kFixDBudget).count(), "slower than 5 s");
  return "revise_augment h=4, then h=4 unsat / h=5 sat, hand-written plan validates, "
    + fixed(took) + " s";
}

std::string fix_e1()
{
  const auto e1 = test::load_instance("fix_e1.json");
  const auto plan1 = test::load_plan("fix_e1_plan1.json", e1);
  const auto plan2 = test::load_plan("fix_e1_plan2.json", e1);
  const auto e = why_wait(e1, plan1, "A2", 8);
  expect(std::holds_alternative<AlternativePlan>(e.body), "not an AlternativePlan");
  const auto& alt = std::get<AlternativePlan>(e.body).plan;
  expect(alt.makespan == 4, "alternative makespan is not 4");
  expect(!waits_at(alt, "A2", 8), "A2 still waits at Cell 8");
  expect(validate(e1, alt).feasible(), "alternative does not validate");
  expect(validate(e1, plan1).feasible() && validate(e1, plan2).feasible(),
    "Plan-1 or Plan-2 does not validate");

  auto shorter = e1;
  shorter.makespan_bound = 3;
  expect(!oracle::brute_force_optimal(shorter).sat, "oracle finds a plan at makespan 3");
  expect(!solve_decision(e1, 3).sat(), "solver finds a plan at makespan 3");
  return "AlternativePlan at makespan 4, Plan-2 validates, makespan 3 unsat (oracle)";
}

std::string fix_e6()
{
  const auto e6 = test::load_instance("fix_e6.json");
  expect(solve_optimal(e6).outcome == Outcome::Unsat, "solver does not report unsat");
  expect(!oracle::brute_force_optimal(e6).sat, "oracle finds a plan");

  const auto answers = why_infeasible(e6);
  expect(answers.size() >= 2, "fewer than two explanations");
  bool collision = false;
  bool obstacle = false;
  for (const auto& a : answers)
  {
    const auto& s = std::get<RelaxationSuggestion>(a.body);
    ValidateOptions relaxed;
    relaxed.relax = s.relaxation;
    const bool witness_ok = validate(e6, s.witness, relaxed).feasible();
    if (s.relaxation.ignore_agent_collisions)
      collision = witness_ok;
    if (s.relaxation.ignored_obstacles == std::set<VertexId>{2})
      obstacle = witness_ok && oracle::brute_force_optimal(e6, s.relaxation).sat;
  }
  expect(collision, "no collision report");
  expect(obstacle, "no validated suggestion to remove the obstacle at Cell 2");
  return std::to_string(answers.size())
    + " explanations incl. collision and obstacle 2 (witness validated)";
}

std::string oracle_equivalence()
{
  const auto start = Clock::now();
  for (std::uint32_t seed = 0; seed < kOracleSeeds; ++seed)
  {
    const auto in = test::random_instance(seed);
    const auto r = solve_optimal(in);
    const auto o = oracle::brute_force_optimal(in);
    const auto tag = " on seed " + std::to_string(seed);
    expect(r.outcome != Outcome::Timeout, "solver timeout" + tag);
    expect(r.sat() == o.sat, "sat/unsat disagreement" + tag);
    if (r.sat())
      expect(evaluate(in, *r.plan) == o.objectives, "objective disagreement" + tag);
  }
  const double took = seconds_since(start);
  expect(took < std::chrono::duration<double>(kOracleBudget).count(),
    "slower than 10 min");
  return std::to_string(kOracleSeeds) + " seeds agree in " + fixed(took) + " s";
}

//==============================================================================
/// Battery invariant and conflict freedom on solved random instances.
void check_solved_plan(const Instance& in, const Plan& plan)
{
  expect(validate(in, plan).feasible(), "a solved plan fails validation");
  expect(oracle::oracle_accepts(in, plan), "a solved plan fails the reference check");
  for (const auto& spec : in.agents)
  {
    const auto& a = plan.agents.at(spec.id);
    for (std::size_t k = 0; k + 1 < a.battery.size(); ++k)
    {
      const Time t = a.start_time + static_cast<Time>(k);
      const int next = a.battery[k + 1];
      const bool charged = a.charge_times.count(t) > 0;
      expect(next == a.battery[k] - 1 || next == in.battery_max,
        "battery step outside {level-1, max}");
      if (next == in.battery_max && next != a.battery[k] - 1)
      {
        const auto* at = at_vertex(a.trajectory[k]);
        expect(charged && at && in.graph.is_charging(at->vertex),
          "battery refilled without a charge at a station");
      }
      expect(a.battery[k] >= 1, "battery below 1");
    }
  }
}

std::string properties()
{
  int battery_and_conflicts = 0;
  for (std::uint32_t seed = 1; battery_and_conflicts < kPropertyCases; ++seed)
  {
    test::RandomSettings s;
    s.rows = 3 + static_cast<int>(seed % 2);
    s.horizon = 10;
    const auto in = test::random_instance(seed, s);
    const auto r = solve_optimal(in);
    if (!r.sat())
      continue;
    check_solved_plan(in, *r.plan);
    ++battery_and_conflicts;
  }

  std::mt19937 rng(20261016);
  int resolves = 0;
  for (std::uint32_t seed = 1; resolves < kPropertyCases; ++seed)
  {
    test::RandomSettings s;
    s.rows = 3;
    s.agents = 2;
    s.horizon = 10;
    const auto in = test::random_instance(seed, s);
    const auto first = solve_optimal(in);
    if (!first.sat() || first.plan->makespan < 1)
      continue;
    auto state = start_execution(in, *first.plan);
    const Time t = std::uniform_int_distribution<Time>(1, first.plan->makespan)(rng);
    const auto& vs = in.graph.vertices();
    const VertexId v = vs[std::uniform_int_distribution<std::size_t>(0, vs.size() - 1)(rng)];
    try
    {
      state = apply_event(state, {t, ObstacleAdd{v}});
    }
    catch (const EventRejected&)
    {
      continue;
    }
    const auto before = state;
    const auto r = resolve_dynamic(state);
    ++resolves;
    if (!r.sat())
      continue;
    expect(validate(state.instance, *r.plan, execution_options(state)).feasible(),
      "a resolved plan fails validation");
    for (const auto& [id, old] : before.active_plan.agents)
    {
      const auto kept = before.prefix_before(id, t + 1).trajectory;
      const auto& now = r.plan->agents.at(id).trajectory;
      expect(now.size() >= kept.size() && std::equal(kept.begin(), kept.end(),
        now.begin()), "executed prefix changed on seed " + std::to_string(seed));
    }
  }
  return std::to_string(battery_and_conflicts) + " solved plans (battery, conflicts), "
    + std::to_string(resolves) + " dynamic resolves (prefix)";
}

std::string determinism()
{
  std::size_t compared = 0;
  for (const auto& g : test::goldens())
  {
    const auto first = test::run_golden(g);
    const auto second = test::run_golden(g);
    expect(first == second, g.name + " differs between runs");
    const auto path = test::golden_path(g.name);
    expect(std::filesystem::exists(path), g.name + " has no committed golden");
    expect(test::read_text(path) == first, g.name + " differs from its golden");
    ++compared;
  }
  return std::to_string(compared) + " outputs byte-identical across 2 runs and "
    "against the committed goldens";
}

} // anonymous namespace

//==============================================================================
int main()
{
  const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
    {"FIX-M regression", fix_m},
    {"FIX-D dynamic trace", fix_d},
    {"FIX-E1 explanation", fix_e1},
    {"FIX-E6 infeasibility", fix_e6},
    {"oracle equivalence", oracle_equivalence},
    {"semantics properties", properties},
    {"determinism", determinism}};

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i)
  {
    const auto& [name, check] = criteria[i];
    std::string verdict = "PASS";
    std::string detail;
    try
    {
      detail = check();
    }
    catch (const std::exception& e)
    {
      verdict = "FAIL";
      detail = e.what();
      ++failed;
    }
    std::cout << verdict << " criterion " << i + 1 << ": " << name << " ("
              << detail << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
