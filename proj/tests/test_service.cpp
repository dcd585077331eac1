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

#include <mmapf/service.hpp>

#include <thread>

using namespace mmapf;
using json = nlohmann::json;

namespace {

json fixture_json(const std::string& name)
{
  return json::parse(test::read_text(test::fixture_path(name)));
}

std::string create(service::Service& svc, const json& body)
{
  const auto r = svc.handle("POST", "/sessions", body.dump());
  REQUIRE(r.status == 201);
  return r.body.at("session_id").get<std::string>();
}

service::Response post(service::Service& svc, const std::string& id,
  const std::string& verb, const json& body)
{
  return svc.handle("POST", "/sessions/" + id + "/" + verb, body.dump());
}

/// Polls GET /sessions/{id} until no job is running.
json wait_idle(service::Service& svc, const std::string& id)
{
  for (int i = 0; i < 600; ++i)
  {
    const auto r = svc.handle("GET", "/sessions/" + id, "");
    if (!r.body.at("busy").get<bool>())
      return r.body;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  FAIL("session stayed busy");
  return {};
}

} // anonymous namespace

//==============================================================================
SCENARIO("A why-wait query over a session")
{
  service::Service svc;
  const auto id = create(svc, {{"instance", fixture_json("fix_e1.json")}});
  CHECK(id.size() == 16);

  const auto r = post(svc, id, "query", {
    {"query", {{"kind", "why_wait"}, {"agent", "A2"}, {"vertex", 8}}},
    {"plan", fixture_json("fix_e1_plan1.json")}});
  REQUIRE(r.status == 200);
  CHECK(r.body["kind"] == "alternative_plan");
  CHECK(r.body["message"] == "Actually, A2 does not have to wait at Cell 8 from "
    "time step 0 to 2. Here is an alternative optimal plan.");

  const auto solved = post(svc, id, "solve", json::object());
  REQUIRE(solved.status == 200);
  CHECK(solved.body["objectives"]["makespan"] == 4);

  const auto valid = post(svc, id, "validate", {{"plan", fixture_json("fix_e1_plan2.json")}});
  CHECK(valid.status == 200);
  CHECK(valid.body["feasible"] == true);

  const auto view = svc.handle("GET", "/sessions/" + id, "");
  CHECK(view.status == 200);
  CHECK(view.body["busy"] == false);
  CHECK(view.body["history"].size() == 3);
  CHECK(view.body.contains("plan"));

  const auto list = svc.handle("GET", "/sessions", "");
  CHECK(list.body["sessions"] == json::array({id}));

  CHECK(svc.handle("DELETE", "/sessions/" + id, "").status == 200);
  CHECK(svc.handle("GET", "/sessions/" + id, "").status == 404);
}

SCENARIO("The A4 join costs one extra horizon step")
{
  service::Service svc;
  const auto id = create(svc, {{"snapshot", {
    {"instance", fixture_json("fix_d.json")},
    {"plan", fixture_json("fix_d_plan.json")}}}});
  const auto events = fixture_json("fix_d_events.json")["events"];

  const auto first = post(svc, id, "event", {{"event", events[0]}});
  REQUIRE(first.status == 200);
  CHECK(first.body["method"] == "revise_augment");
  CHECK(first.body["horizon_used"] == 4);

  const auto second = post(svc, id, "event", {{"event", events[1]}});
  REQUIRE(second.status == 200);
  CHECK(second.body["horizon_used"] == 5);
  CHECK(second.body["plan"]["makespan"] == 5);

  const auto snap = svc.handle("GET", "/sessions/" + id + "/snapshot", "");
  CHECK(snap.body["execution"]["t_now"] == 2);
  CHECK(snap.body["history"].size() == 2);

  GIVEN("an event that the policy cannot absorb")
  {
    const auto before = svc.handle("GET", "/sessions/" + id + "/snapshot", "").body;
    const auto r = post(svc, id, "event", {
      {"event", {{"kind", "obstacle_add"}, {"vertex", 4}, {"time", 2}}},
      {"policy", {{"delta_max", 0}, {"fallback_replan", false}}}});
    CHECK(r.status == 200);
    CHECK(r.body["outcome"] == "unsat");
    // The session keeps its last good state.
    const auto after = svc.handle("GET", "/sessions/" + id + "/snapshot", "").body;
    CHECK(after["execution"] == before["execution"]);
    CHECK(after["plan"] == before["plan"]);
  }

  GIVEN("a join onto an occupied vertex")
  {
    const auto r = post(svc, id, "event", {{"event", {{"kind", "agent_join"},
      {"time", 3}, {"agent", {{"id", "A5"}, {"start", 6}, {"goal", 8},
        {"waypoints", json::array()}, {"battery", 50}}}}}});
    CHECK(r.status == 422);
    CHECK(r.body["error"]["code"] == "event_rejected");
    CHECK(r.body["error"]["diagnostic"]["kind"] == "vertex_conflict");
  }
}

//==============================================================================
SCENARIO("Errors come back as structured JSON")
{
  service::Service svc;
  CHECK(svc.handle("GET", "/nowhere", "").status == 404);
  CHECK(svc.handle("GET", "/sessions/0123456789abcdef", "").body["error"]["code"]
    == "session_not_found");
  CHECK(svc.handle("OPTIONS", "/sessions", "").status == 204);

  const auto garbage = svc.handle("POST", "/sessions", "{not json");
  CHECK(garbage.status == 400);
  CHECK(garbage.body["error"]["code"] == "schema_error");

  auto bad = fixture_json("fix_e1.json");
  bad["agents"][0]["speed"] = 2;
  const auto schema = svc.handle("POST", "/sessions", json{{"instance", bad}}.dump());
  CHECK(schema.status == 400);
  CHECK(schema.body["error"]["path"] == "instance.agents[0].speed");

  const auto id = create(svc, {{"instance", fixture_json("fix_e1.json")}});
  const auto feasible = post(svc, id, "query", {{"query", {{"kind", "why_infeasible"}}}});
  CHECK(feasible.status == 422);
  CHECK(feasible.body["error"]["code"] == "instance_is_feasible");

  const auto no_plan = post(svc, id, "event", {{"event",
    {{"kind", "obstacle_add"}, {"vertex", 6}, {"time", 1}}}});
  CHECK(no_plan.status == 422);
  CHECK(no_plan.body["error"]["code"] == "plan_required");

  auto broken = fixture_json("fix_e1_plan1.json");
  broken["agents"]["A1"]["route"][1] = {{"at", 5}};
  const auto infeasible = post(svc, id, "query", {
    {"query", {{"kind", "why_wait"}, {"agent", "A2"}, {"vertex", 8}}},
    {"plan", broken}});
  CHECK(infeasible.status == 422);
  CHECK(infeasible.body["error"]["code"] == "plan_infeasible");
  CHECK(infeasible.body["error"]["report"]["feasible"] == false);

  const auto snapshot = post(svc, id, "snapshot", {{"name", "x"}});
  CHECK(snapshot.body["error"]["code"] == "snapshots_disabled");
}

SCENARIO("A running solve holds the session")
{
  service::Service svc;
  const auto id = create(svc, {{"instance", fixture_json("crowded.json")}});

  const auto started = post(svc, id, "solve", {{"async", true}, {"timeout", 2}});
  REQUIRE(started.status == 202);
  CHECK(started.body["job"]["status"] == "running");

  CHECK(post(svc, id, "validate", {{"plan", json::object()}}).status == 409);
  CHECK(svc.handle("DELETE", "/sessions/" + id, "").status == 409);
  CHECK(post(svc, id, "solve", {{"async", true}}).status == 409);
  CHECK(svc.handle("GET", "/sessions/" + id, "").body["busy"] == true);

  const auto done = wait_idle(svc, id);
  CHECK(done["job"]["status"] == "done");
  CHECK(done["job"]["http_status"] == 504);
  CHECK(done["job"]["result"]["error"]["code"] == "solver_timeout");
  CHECK(done["history"].size() == 1);

  const auto sync = post(svc, id, "solve", {{"timeout", 0.2}});
  CHECK(sync.status == 504);
}

SCENARIO("Shutting down cancels running jobs")
{
  const auto start = std::chrono::steady_clock::now();
  {
    service::Service svc;
    const auto id = create(svc, {{"instance", fixture_json("crowded.json")}});
    REQUIRE(post(svc, id, "solve", {{"async", true}, {"timeout", 60}}).status == 202);
  }
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}

//==============================================================================
SCENARIO("Replaying a session history reproduces every response")
{
  service::Service svc;
  const auto id = create(svc, {{"snapshot", {
    {"instance", fixture_json("fix_d.json")},
    {"plan", fixture_json("fix_d_plan.json")}}}});
  const auto events = fixture_json("fix_d_events.json")["events"];
  post(svc, id, "validate", {{"plan", fixture_json("fix_d_plan.json")}});
  post(svc, id, "event", {{"event", events[0]}});
  post(svc, id, "event", {{"event", events[1]}});
  post(svc, id, "query", {{"query", {{"kind", "why_nonoptimal"},
    {"plan", fixture_json("fix_d_after_joins_plan.json")}}}});
  const auto history = svc.handle("GET", "/sessions/" + id + "/snapshot", "")
    .body["history"];
  REQUIRE(history.size() == 4);

  const auto replay = create(svc, {{"snapshot", {
    {"instance", fixture_json("fix_d.json")},
    {"plan", fixture_json("fix_d_plan.json")}}}});
  for (const auto& h : history)
  {
    CAPTURE(h["action"]);
    const auto r = post(svc, replay, h["action"].get<std::string>(), h["request"]);
    CHECK(r.status == h["status"]);
    CHECK(io::dump(r.body) == io::dump(h["response"]));
  }

  // A restored snapshot continues where the original left off.
  const auto snap = svc.handle("GET", "/sessions/" + id + "/snapshot", "").body;
  const auto restored = create(svc, {{"snapshot", snap}});
  CHECK(svc.handle("GET", "/sessions/" + restored + "/snapshot", "").body == snap);
}

SCENARIO("Snapshots are written to the configured directory")
{
  const auto dir = std::filesystem::temp_directory_path() / "mmapf_test_snapshots";
  std::filesystem::create_directories(dir);
  service::ServiceConfig config;
  config.snapshot_dir = dir.string();
  service::Service svc(config);
  const auto id = create(svc, {{"instance", fixture_json("fix_e1.json")}});

  const auto r = post(svc, id, "snapshot", {{"name", "e1_start"}});
  REQUIRE(r.status == 200);
  const auto written = json::parse(test::read_text((dir / "e1_start.json").string()));
  CHECK(written["instance"] == fixture_json("fix_e1.json"));

  CHECK(post(svc, id, "snapshot", {{"name", "../escape"}}).status == 400);
}

//==============================================================================
SCENARIO("The service answers over HTTP with CORS headers")
{
  service::ServiceConfig config;
  service::Service svc(config);
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread listener([&]() { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto created = client.Post("/sessions",
    json{{"instance", fixture_json("fix_e1.json")}}.dump(), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(created->get_header_value("Content-Type") == "application/json");
  const auto id = json::parse(created->body)["session_id"].get<std::string>();

  const auto solved = client.Post("/sessions/" + id + "/solve", "{}", "application/json");
  REQUIRE(solved);
  CHECK(solved->status == 200);
  CHECK(solved->body == io::dump(json::parse(solved->body)));

  const auto preflight = client.Options("/sessions/" + id + "/query");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);
  CHECK(preflight->get_header_value("Access-Control-Allow-Methods")
    == "GET, POST, DELETE, OPTIONS");

  const auto missing = client.Get("/sessions/ffffffffffffffff");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  listener.join();
}
