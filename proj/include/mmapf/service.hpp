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

#ifndef MMAPF__SERVICE_HPP
#define MMAPF__SERVICE_HPP

#include <mmapf/io.hpp>

#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <semaphore>
#include <thread>

namespace mmapf {
namespace service {

using json = nlohmann::json;

//==============================================================================
struct ServiceConfig
{
  std::string host = "127.0.0.1";
  int port = 8080;

  /// Solve budget when a request does not name one.
  std::chrono::milliseconds default_timeout{60000};

  /// Solves with a requested budget above this run in the background and are
  /// polled through GET /sessions/{id}.
  std::chrono::milliseconds async_threshold{10000};

  std::string cors_origin = "*";

  /// Directory for POST /sessions/{id}/snapshot. Empty disables writing.
  std::string snapshot_dir;

  DynamicPolicy policy;
};

struct Response
{
  int status = 200;
  json body;
};

/// A failed request. The body is {"error": {"code", "message", ...}}.
class HttpError : public Error
{
public:
  HttpError(int status, std::string code, const std::string& message,
    json extra = json::object())
  : Error(message),
    _status(status),
    _code(std::move(code)),
    _extra(std::move(extra))
  {
    // Do nothing
  }

  int status() const { return _status; }
  const std::string& code() const { return _code; }

  json body() const
  {
    json e = _extra;
    e["code"] = _code;
    e["message"] = what();
    return {{"error", e}};
  }

private:
  int _status;
  std::string _code;
  json _extra;
};

//==============================================================================
/// One what-if trail. Writers hold `busy`, which a background job may
/// release from another thread.
struct Session
{
  std::string id;
  Instance instance;
  std::optional<Plan> plan;
  std::optional<ExecutionState> execution;
  std::vector<json> history;

  std::binary_semaphore busy{1};

  std::mutex job_mutex;
  std::optional<json> job;

  const Instance& current_instance() const
  {
    return execution ? execution->instance : instance;
  }

  json snapshot() const
  {
    json j = {{"history", history}, {"instance", io::instance_to_json(instance)}};
    if (plan)
      j["plan"] = io::plan_to_json(*plan);
    if (execution)
      j["execution"] = io::execution_to_json(*execution);
    return j;
  }
};

//==============================================================================
/// Session-oriented JSON facade. handle() is transport independent; mount()
/// wires it into an httplib server.
class Service
{
public:
  explicit Service(ServiceConfig config = {})
  : _config(std::move(config)),
    _cancel(std::make_shared<std::atomic<bool>>(false)),
    _rng(std::random_device{}())
  {
    // Do nothing
  }

  ~Service()
  {
    _cancel->store(true);
    std::lock_guard<std::mutex> lock(_threads_mutex);
    for (auto& t : _threads)
    {
      if (t.joinable())
        t.join();
    }
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const { return _config; }

  Response handle(const std::string& method, const std::string& path,
    const std::string& body)
  {
    try
    {
      return route(method, path, body);
    }
    catch (const HttpError& e)
    {
      return {e.status(), e.body()};
    }
    catch (const SchemaError& e)
    {
      return fail(400, "schema_error", e.what(), {{"path", e.path()}});
    }
    catch (const LookupError& e)
    {
      return fail(400, "schema_error", e.what());
    }
    catch (const EventRejected& e)
    {
      return fail(422, "event_rejected", e.what(),
          {{"diagnostic", io::violation_to_json(e.diagnostic())}});
    }
    catch (const PlanInfeasible& e)
    {
      return fail(422, e.code(), e.what(),
          {{"report", io::report_to_json(e.report())}});
    }
    catch (const PreconditionError& e)
    {
      return fail(422, e.code(), e.what());
    }
    catch (const SolverTimeout& e)
    {
      return fail(504, "solver_timeout", e.what());
    }
    catch (const std::exception& e)
    {
      return fail(500, "internal_error", e.what());
    }
  }

  void mount(httplib::Server& server)
  {
    const auto forward = [this](const httplib::Request& req, httplib::Response& res)
      {
        const auto r = handle(req.method, req.path, req.body);
        res.status = r.status;
        if (r.status != 204)
          res.set_content(io::dump(r.body), "application/json");
      };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Delete(".*", forward);
    server.Options(".*", forward);
    server.set_default_headers({
      {"Access-Control-Allow-Origin", _config.cors_origin},
      {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
      {"Access-Control-Allow-Headers", "Content-Type"}
    });
  }

  /// Serves until the process is stopped.
  bool run()
  {
    httplib::Server server;
    mount(server);
    return server.listen(_config.host, _config.port);
  }

private:
  using Params = std::vector<std::string>;

  static Response fail(int status, const std::string& code,
    const std::string& message, json extra = json::object())
  {
    return {status, HttpError(status, code, message, std::move(extra)).body()};
  }

  Response route(const std::string& method, const std::string& path,
    const std::string& body)
  {
    static const std::regex sessions("^/sessions/?$");
    static const std::regex session("^/sessions/([A-Za-z0-9]+)/?$");
    static const std::regex action("^/sessions/([A-Za-z0-9]+)/([a-z]+)/?$");

    if (method == "OPTIONS")
      return {204, json()};

    std::smatch m;
    if (std::regex_match(path, m, sessions))
    {
      if (method == "POST")
        return create(parse_body(body));
      if (method == "GET")
        return list();
    }
    else if (std::regex_match(path, m, session))
    {
      auto s = find(m[1]);
      if (method == "GET")
        return view(*s);
      if (method == "DELETE")
        return remove(s);
    }
    else if (std::regex_match(path, m, action))
    {
      auto s = find(m[1]);
      const std::string verb = m[2];
      if (method == "GET" && verb == "snapshot")
        return {200, s->snapshot()};
      if (method == "POST")
      {
        const json request = parse_body(body);
        if (verb == "solve")
          return solve(s, request, path);
        if (verb == "validate")
          return locked(*s, path, request, [&]() { return validate_plan(*s, request); });
        if (verb == "event")
          return locked(*s, path, request, [&]() { return event(*s, request); });
        if (verb == "query")
          return locked(*s, path, request, [&]() { return query(*s, request); });
        if (verb == "snapshot")
          return write_snapshot(*s, request);
      }
    }
    throw HttpError(404, "not_found", "no route for " + method + " " + path);
  }

  static json parse_body(const std::string& body)
  {
    if (body.empty())
      return json::object();
    try
    {
      return json::parse(body);
    }
    catch (const json::parse_error& e)
    {
      throw HttpError(400, "schema_error", std::string("invalid JSON: ") + e.what());
    }
  }

  std::shared_ptr<Session> find(const std::string& id)
  {
    std::lock_guard<std::mutex> lock(_sessions_mutex);
    const auto it = _sessions.find(id);
    if (it == _sessions.end())
      throw HttpError(404, "session_not_found", "no session '" + id + "'");
    return it->second;
  }

  std::string fresh_id()
  {
    static const char* hex = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 16; ++i)
      id += hex[_rng() % 16];
    return id;
  }

  SolverConfig solver_config(const json& request) const
  {
    SolverConfig c;
    c.timeout = _config.default_timeout;
    c.cancel = _cancel;
    if (const auto* t = io::detail::optional(request, "timeout"))
    {
      if (!t->is_number() || t->get<double>() <= 0)
        throw SchemaError("timeout", "expected a positive number of seconds");
      c.timeout = std::chrono::milliseconds(
        static_cast<long long>(t->get<double>() * 1000.0));
    }
    return c;
  }

  /// Runs a mutation with the session held. Busy sessions answer 409.
  template<typename F>
  Response locked(Session& s, const std::string& path, const json& request, F&& f)
  {
    if (!s.busy.try_acquire())
      throw HttpError(409, "session_busy", "session '" + s.id
              + "' is processing another request");
    Response r;
    try
    {
      r = f();
    }
    catch (...)
    {
      s.busy.release();
      throw;
    }
    record(s, path, request, r);
    s.busy.release();
    return r;
  }

  static void record(Session& s, const std::string& path, const json& request,
    const Response& r)
  {
    const auto slash = path.find_last_of('/');
    s.history.push_back({
      {"action", path.substr(slash + 1)},
      {"request", request},
      {"response", r.body},
      {"status", r.status}
    });
  }

  //============================================================================
  Response create(const json& request)
  {
    io::detail::only_keys(request, {"instance", "snapshot"}, "");
    auto s = std::make_shared<Session>();
    if (const auto* snap = io::detail::optional(request, "snapshot"))
    {
      io::detail::only_keys(*snap, {"history", "instance", "plan", "execution"},
        "snapshot");
      s->instance = io::instance_from_json(
        io::detail::require(*snap, "instance", "snapshot"), "snapshot.instance");
      if (const auto* p = io::detail::optional(*snap, "plan"))
        s->plan = io::plan_from_json(*p, "snapshot.plan", &s->instance.graph);
      if (const auto* e = io::detail::optional(*snap, "execution"))
        s->execution = io::execution_from_json(*e, "snapshot.execution");
      if (const auto* h = io::detail::optional(*snap, "history"))
        s->history = h->get<std::vector<json>>();
    }
    else
    {
      s->instance = io::instance_from_json(
        io::detail::require(request, "instance", ""), "instance");
    }

    std::lock_guard<std::mutex> lock(_sessions_mutex);
    do
    {
      s->id = fresh_id();
    } while (_sessions.count(s->id));
    _sessions[s->id] = s;
    return {201, {{"session_id", s->id}}};
  }

  Response list()
  {
    std::lock_guard<std::mutex> lock(_sessions_mutex);
    json ids = json::array();
    for (const auto& [id, s] : _sessions)
      ids.push_back(id);
    return {200, {{"sessions", ids}}};
  }

  Response view(Session& s)
  {
    json j;
    {
      std::lock_guard<std::mutex> lock(s.job_mutex);
      if (s.job)
        j["job"] = *s.job;
    }
    if (!s.busy.try_acquire())
    {
      j["busy"] = true;
      j["session_id"] = s.id;
      return {200, j};
    }
    const json snap = s.snapshot();
    s.busy.release();
    j.update(snap);
    j["busy"] = false;
    j["session_id"] = s.id;
    return {200, j};
  }

  Response remove(const std::shared_ptr<Session>& s)
  {
    if (!s->busy.try_acquire())
      throw HttpError(409, "session_busy", "session '" + s->id + "' is busy");
    {
      std::lock_guard<std::mutex> lock(_sessions_mutex);
      _sessions.erase(s->id);
    }
    s->busy.release();
    return {200, {{"deleted", s->id}}};
  }

  //============================================================================
  Response run_solve(Session& s, const json& request, const SolverConfig& config)
  {
    Instance in = s.instance;
    if (const auto* m = io::detail::optional(request, "makespan"))
      in.makespan_bound = io::detail::as_int(*m, "makespan");
    const auto result = solve_optimal(in, {}, config);
    if (result.outcome == Outcome::Timeout)
      throw HttpError(504, "solver_timeout", "no answer within the time budget",
          {{"stats", io::stats_to_json(result.stats, false)}});
    if (result.plan)
    {
      s.plan = result.plan;
      s.execution.reset();
    }
    return {200, io::result_to_json(s.instance, result)};
  }

  Response solve(const std::shared_ptr<Session>& s, const json& request,
    const std::string& path)
  {
    io::detail::only_keys(request, {"async", "makespan", "timeout"}, "");
    const auto config = solver_config(request);
    bool background = config.timeout > _config.async_threshold
      && io::detail::optional(request, "timeout");
    if (const auto* a = io::detail::optional(request, "async"))
      background = io::detail::as_bool(*a, "async");

    if (!background)
      return locked(*s, path, request, [&]() { return run_solve(*s, request, config); });

    if (!s->busy.try_acquire())
      throw HttpError(409, "session_busy", "session '" + s->id + "' is busy");
    {
      std::lock_guard<std::mutex> lock(s->job_mutex);
      s->job = json{{"action", "solve"}, {"status", "running"}};
    }
    std::lock_guard<std::mutex> lock(_threads_mutex);
    _threads.emplace_back([this, s, request, config, path]()
      {
        Response r;
        try
        {
          r = run_solve(*s, request, config);
        }
        catch (const HttpError& e)
        {
          r = {e.status(), e.body()};
        }
        catch (const std::exception& e)
        {
          r = fail(500, "internal_error", e.what());
        }
        record(*s, path, request, r);
        {
          std::lock_guard<std::mutex> job_lock(s->job_mutex);
          s->job = json{{"action", "solve"}, {"result", r.body},
            {"status", "done"}, {"http_status", r.status}};
        }
        s->busy.release();
      });
    return {202, {{"job", {{"action", "solve"}, {"status", "running"}}},
      {"session_id", s->id}}};
  }

  Response validate_plan(Session& s, const json& request)
  {
    io::detail::only_keys(request, {"plan"}, "");
    const auto& in = s.current_instance();
    const Plan plan = io::plan_from_json(io::detail::require(request, "plan", ""),
        "plan", &in.graph);
    ValidateOptions options;
    if (s.execution)
      options = execution_options(*s.execution);
    return {200, io::report_to_json(validate(in, plan, options))};
  }

  Response event(Session& s, const json& request)
  {
    io::detail::only_keys(request, {"event", "events", "policy", "timeout"}, "");
    std::vector<Event> events;
    if (const auto* e = io::detail::optional(request, "event"))
      events.push_back(io::event_from_json(*e, "event"));
    if (const auto* list = io::detail::optional(request, "events"))
    {
      if (!list->is_array())
        throw SchemaError("events", "expected an array");
      for (std::size_t i = 0; i < list->size(); ++i)
        events.push_back(io::event_from_json((*list)[i], io::detail::index("events", i)));
    }
    if (events.empty())
      throw SchemaError("event", "missing field");

    DynamicPolicy policy = _config.policy;
    if (const auto* p = io::detail::optional(request, "policy"))
    {
      io::detail::only_keys(*p, {"delta_max", "fallback_replan"}, "policy");
      if (const auto* d = io::detail::optional(*p, "delta_max"))
        policy.delta_max = io::detail::as_int(*d, "policy.delta_max");
      if (const auto* f = io::detail::optional(*p, "fallback_replan"))
        policy.fallback_replan = io::detail::as_bool(*f, "policy.fallback_replan");
    }

    if (!s.plan)
      throw PreconditionError("plan_required", "solve the session before sending events");
    ExecutionState state = s.execution
      ? *s.execution : start_execution(s.instance, *s.plan);
    for (const auto& e : events)
      state = apply_event(std::move(state), e);

    const auto result = resolve_dynamic(state, policy, solver_config(request));
    if (result.outcome == Outcome::Timeout)
      throw HttpError(504, "solver_timeout", "no answer within the time budget");
    if (result.sat())
    {
      s.execution = state;
      s.plan = state.active_plan;
    }
    return {200, io::dynamic_to_json(state.instance, result)};
  }

  Response query(Session& s, const json& request)
  {
    io::detail::only_keys(request, {"plan", "query", "timeout"}, "");
    const auto& in = s.current_instance();
    const Query q = io::query_from_json(io::detail::require(request, "query", ""),
        "query", &in.graph);
    std::optional<Plan> plan = s.plan;
    if (const auto* p = io::detail::optional(request, "plan"))
      plan = io::plan_from_json(*p, "plan", &in.graph);
    const auto answer = mmapf::answer(in, plan ? &*plan : nullptr, q,
        solver_config(request));
    return {200, io::answer_to_json(q, answer)};
  }

  Response write_snapshot(Session& s, const json& request)
  {
    io::detail::only_keys(request, {"name"}, "");
    if (_config.snapshot_dir.empty())
      throw PreconditionError("snapshots_disabled",
              "the service was started without a snapshot directory");
    const auto name = io::detail::as_string(io::detail::require(request, "name", ""),
        "name");
    static const std::regex safe("^[A-Za-z0-9_-]{1,64}$");
    if (!std::regex_match(name, safe))
      throw SchemaError("name", "use 1-64 letters, digits, '_' or '-'");

    if (!s.busy.try_acquire())
      throw HttpError(409, "session_busy", "session '" + s.id + "' is busy");
    const json snap = s.snapshot();
    s.busy.release();

    const auto file = std::filesystem::path(_config.snapshot_dir) / (name + ".json");
    std::ofstream out(file);
    out << io::dump(snap);
    if (!out)
      throw HttpError(500, "io_error", "could not write " + file.string());
    return {200, {{"written", file.string()}}};
  }

  ServiceConfig _config;
  std::shared_ptr<std::atomic<bool>> _cancel;

  std::mutex _sessions_mutex;
  std::map<std::string, std::shared_ptr<Session>> _sessions;
  std::mt19937_64 _rng;

  std::mutex _threads_mutex;
  std::vector<std::thread> _threads;
};

} // namespace service
} // namespace mmapf

#endif // MMAPF__SERVICE_HPP
