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

#include <catch_amalgamated.hpp>

#include <support/fixtures.hpp>
#include <support/resume.hpp>

using namespace mmapf;

namespace {

struct FixD
{
  Instance instance = test::load_instance("fix_d.json");
  Plan plan = test::load_plan("fix_d_plan.json", instance);
  std::vector<Event> events = test::load_events("fix_d_events.json");
};

std::vector<int> vertices(const AgentPlan& a)
{
  std::vector<int> out;
  for (const auto& s : a.trajectory)
    out.push_back(at_vertex(s) ? at_vertex(s)->vertex : 0);
  return out;
}

/// Routes with the trailing Done entries dropped.
std::vector<int> visited(const Plan& plan, const AgentId& id)
{
  auto r = test::route_of(plan, id);
  while (!r.empty() && r.back() == 0)
    r.pop_back();
  return r;
}

} // anonymous namespace

//==============================================================================
SCENARIO("Agents join a running plan")
{
  FixD d;
  CHECK(solve_optimal(d.instance).plan->makespan == 4);

  auto state = start_execution(d.instance, d.plan);
  CHECK_FALSE(state.stale);

  WHEN("A3 joins at t=1")
  {
    state = apply_event(state, d.events[0]);
    CHECK(state.stale);
    CHECK(state.t_now == 1);
    CHECK(state.instance.agents.size() == 3);
    CHECK(state.instance.agent("A3").release == 1);
    CHECK(vertices(state.committed("A1")) == std::vector<int>{1, 2});
    CHECK(vertices(state.committed("A2")) == std::vector<int>{3, 6});

    THEN("revising at horizon 4 keeps the old routes and adds A3")
    {
      const auto r = revise_and_augment(state, 4);
      REQUIRE(r.sat());
      CHECK(visited(*r.plan, "A1") == std::vector<int>{1, 2, 3, 6, 9});
      CHECK(visited(*r.plan, "A2") == std::vector<int>{3, 6, 5, 4, 7});
      CHECK(visited(*r.plan, "A3") == std::vector<int>{9, 6, 5, 2});
      CHECK(r.plan->agents.at("A3").start_time == 1);
      CHECK(validate(state.instance, *r.plan, execution_options(state)).feasible());
    }

    THEN("resolving picks revise-and-augment at horizon 4")
    {
      const auto r = resolve_dynamic(state);
      REQUIRE(r.sat());
      CHECK(r.method == DynamicMethod::ReviseAugment);
      CHECK(r.horizon_used == 4);
      CHECK_FALSE(state.stale);
      CHECK(state.active_plan == *r.plan);
    }
  }
}

SCENARIO("A fourth agent forces one more step")
{
  FixD d;
  auto state = start_execution(d.instance, d.plan);
  state = apply_event(state, d.events[0]);
  REQUIRE(resolve_dynamic(state).sat());
  state = apply_event(state, d.events[1]);
  CHECK(state.instance.agents.size() == 4);

  CHECK(revise_and_augment(state, 4).outcome == Outcome::Unsat);

  const auto r5 = revise_and_augment(state, 5);
  REQUIRE(r5.sat());
  CHECK(visited(*r5.plan, "A1") == std::vector<int>{1, 2, 3, 3, 6, 9});
  CHECK(visited(*r5.plan, "A2") == std::vector<int>{3, 6, 5, 5, 4, 7});
  CHECK(visited(*r5.plan, "A3") == std::vector<int>{9, 6, 6, 5, 2});
  CHECK(visited(*r5.plan, "A4") == std::vector<int>{7, 4, 1});

  const auto joined = test::load_plan("fix_d_after_joins_plan.json", state.instance);
  const auto joined_report = validate(state.instance, joined, execution_options(state));
  INFO(io::dump(io::report_to_json(joined_report)));
  CHECK(joined_report.feasible());

  WHEN("resolving with the default policy")
  {
    const auto r = resolve_dynamic(state);
    REQUIRE(r.sat());
    CHECK(r.method == DynamicMethod::ReviseAugment);
    CHECK(r.horizon_used == 5);
  }

  WHEN("revising may not extend the horizon")
  {
    DynamicPolicy policy;
    policy.delta_max = 0;
    const auto before = state;
    const auto r = resolve_dynamic(state, policy);
    REQUIRE(r.sat());
    CHECK(r.method == DynamicMethod::Replan);
    CHECK(validate(state.instance, *r.plan, execution_options(state)).feasible());

    // A free replan beats the revised horizon; the oracle started from the
    // same configuration agrees on the makespan.
    const auto o = oracle::brute_force_optimal(
      before.instance, {}, test::resume_of(before));
    REQUIRE(o.sat);
    CHECK(o.objectives.makespan == r.plan->makespan);
    CHECK(r.plan->makespan < 5);
  }

  WHEN("neither revising nor replanning is allowed to help")
  {
    DynamicPolicy policy;
    policy.delta_max = 0;
    policy.fallback_replan = false;
    const auto r = resolve_dynamic(state, policy);
    CHECK(r.outcome == Outcome::Unsat);
    CHECK_FALSE(r.method);
    CHECK(state.stale);
  }
}

//==============================================================================
SCENARIO("Events are checked before they apply")
{
  FixD d;
  auto state = start_execution(d.instance, d.plan);

  GIVEN("a join onto an occupied vertex")
  {
    try
    {
      apply_event(state, {1, AgentJoin{{"A5", 2, 8, {}, 50, 0}}});
      FAIL("expected a rejection");
    }
    catch (const EventRejected& e)
    {
      CHECK(e.diagnostic().kind == ViolationKind::VertexConflict);
      CHECK(e.diagnostic().location == Location::at(2));
      CHECK(e.diagnostic().time == 1);
    }
  }

  GIVEN("a join with an existing id")
  {
    CHECK_THROWS_AS(apply_event(state, {1, AgentJoin{{"A1", 8, 5, {}, 50, 0}}}),
      EventRejected);
  }

  GIVEN("removing a vertex that is not an obstacle")
  {
    CHECK_THROWS_AS(apply_event(state, {1, ObstacleRemove{5}}), EventRejected);
  }

  GIVEN("an obstacle on an agent's goal")
  {
    CHECK_THROWS_AS(apply_event(state, {1, ObstacleAdd{9}}), EventRejected);
  }

  GIVEN("an event in the past")
  {
    state = apply_event(state, {2, ObstacleAdd{8}});
    CHECK_THROWS_AS(apply_event(state, {1, ObstacleAdd{5}}), EventRejected);
  }

  GIVEN("a later event while the plan is stale")
  {
    state = apply_event(state, {1, ObstacleAdd{8}});
    try
    {
      apply_event(state, {2, ObstacleAdd{5}});
      FAIL("expected a precondition error");
    }
    catch (const PreconditionError& e)
    {
      CHECK(e.code() == "plan_stale");
    }
  }

  GIVEN("a resolve without a pending event")
  {
    CHECK_THROWS_AS(resolve_dynamic(state), PreconditionError);
  }

  GIVEN("an infeasible starting plan")
  {
    Plan bad = d.plan;
    bad.agents.erase("A2");
    CHECK_THROWS_AS(start_execution(d.instance, bad), PreconditionError);
  }
}

//==============================================================================
SCENARIO("Simultaneous events apply as one batch")
{
  FixD d;
  auto state = start_execution(d.instance, d.plan);
  state = apply_event(state, d.events[0]);
  state = apply_event(state, {1, ObstacleAdd{8}});
  const auto r = resolve_dynamic(state);
  REQUIRE(r.sat());
  CHECK(state.instance.graph.is_obstacle(8));
  CHECK(validate(state.instance, *r.plan, execution_options(state)).feasible());
}

SCENARIO("Leaving agents stop occupying the world")
{
  FixD d;
  auto state = start_execution(d.instance, d.plan);
  state = apply_event(state, {1, AgentLeave{"A2"}});
  CHECK(state.instance.agents.size() == 1);
  CHECK(state.departed.count("A2"));
  const auto r = resolve_dynamic(state);
  REQUIRE(r.sat());
  CHECK(r.plan->agents.size() == 1);

  // A newcomer may now start where A2 stood when it left.
  REQUIRE(r.plan->makespan >= 2);
  state = apply_event(state, {2, AgentJoin{{"A5", 6, 4, {}, 50, 0}}});
  CHECK(resolve_dynamic(state).sat());
}

SCENARIO("Obstacles moving onto a route force a replan")
{
  FixD d;
  auto state = start_execution(d.instance, d.plan);
  state = apply_event(state, {1, ObstacleAdd{5}});
  const auto r = resolve_dynamic(state);
  REQUIRE(r.sat());
  CHECK(r.method == DynamicMethod::Replan);
  CHECK(validate(state.instance, *r.plan, execution_options(state)).feasible());
  // The committed prefix survives the replan.
  CHECK(vertices(state.committed("A2")) == std::vector<int>{3, 6});
  CHECK(visited(*r.plan, "A2")[1] == 6);

  state = apply_event(state, {2, ObstacleMove{5, 2}});
  CHECK(state.instance.graph.is_obstacle(2));
  CHECK_FALSE(state.instance.graph.is_obstacle(5));
}

SCENARIO("An agent that finishes at the event time keeps its battery trace")
{
  Instance in;
  in.graph = WorldGraph({1, 2, 3, 4}, {{1, 2, 1}, {2, 3, 1}, {3, 4, 1}});
  in.battery_max = 5;
  in.makespan_bound = 6;
  in.agents = {{"A1", 1, 2, {}, 5, 0}};
  auto state = start_execution(in, *solve_optimal(in).plan);
  state = apply_event(state, {1, AgentJoin{{"A2", 4, 3, {}, 5, 0}}});
  const auto r = resolve_dynamic(state);
  REQUIRE(r.sat());
  CHECK(r.plan->agents.at("A1").battery == std::vector<int>{5, 4});
  CHECK(validate(state.instance, *r.plan, execution_options(state)).feasible());
}
