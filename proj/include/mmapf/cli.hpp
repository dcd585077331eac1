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

#ifndef MMAPF__CLI_HPP
#define MMAPF__CLI_HPP

#include <mmapf/service.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>

namespace mmapf {
namespace cli {

using json = nlohmann::json;

/// Process exit codes.
enum Exit : int
{
  Ok = 0,
  Usage = 2,
  Schema = 3,
  Negative = 4,
  Timeout = 5
};

//==============================================================================
namespace render {

inline std::string cell(const AgentState& s)
{
  if (const auto* at = at_vertex(s))
    return std::to_string(at->vertex);
  if (std::holds_alternative<InTransit>(s))
    return "transit";
  return "--";
}

/// One location row and one battery row per agent, one column per timestep.
inline std::string plan(const Plan& p)
{
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"t"};
  for (Time t = 0; t <= p.makespan; ++t)
    header.push_back(std::to_string(t));
  rows.push_back(header);

  for (const auto& [id, a] : p.agents)
  {
    std::vector<std::string> where{id + " Location"};
    std::vector<std::string> battery{id + " Battery"};
    for (Time t = 0; t <= p.makespan; ++t)
    {
      const Time k = t - a.start_time;
      const bool inside = k >= 0 && k < static_cast<Time>(a.trajectory.size());
      where.push_back(inside ? cell(a.trajectory[static_cast<std::size_t>(k)]) : "");
      const bool charged = k >= 0 && k < static_cast<Time>(a.battery.size());
      battery.push_back(charged
        ? std::to_string(a.battery[static_cast<std::size_t>(k)])
          + (a.charge_times.count(t) ? "+" : "")
        : (inside ? "--" : ""));
    }
    rows.push_back(where);
    rows.push_back(battery);
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& r : rows)
  {
    for (std::size_t i = 0; i < r.size(); ++i)
      width[i] = std::max(width[i], r[i].size());
  }

  std::ostringstream out;
  for (const auto& r : rows)
  {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i)
    {
      std::ostringstream c;
      if (i == 0)
        c << std::left;
      c << std::setw(static_cast<int>(width[i])) << r[i];
      line += (i ? "  " : "") + c.str();
    }
    while (!line.empty() && line.back() == ' ')
      line.pop_back();
    out << line << "\n";
  }
  return out.str();
}

inline std::string violation(const Violation& v)
{
  std::string s = to_string(v.kind);
  for (const auto& a : v.agents)
    s += " " + a;
  s += " " + messages::place(v.location);
  if (v.time)
    s += " at time step " + std::to_string(*v.time);
  if (!v.detail.empty())
    s += " (" + v.detail + ")";
  return s;
}

inline std::string report(const ValidationReport& r)
{
  if (r.feasible())
    return "feasible: no violations\n";
  std::string out = "infeasible: " + std::to_string(r.violations.size())
    + " violation" + (r.violations.size() == 1 ? "" : "s") + "\n";
  for (const auto& v : r.violations)
    out += "  " + violation(v) + "\n";
  return out;
}

inline std::string explanation(const Explanation& e)
{
  std::string out = e.message + "\n";
  std::visit([&](const auto& b)
    {
      using B = std::decay_t<decltype(b)>;
      if constexpr (std::is_same_v<B, AlternativePlan> ||
        std::is_same_v<B, DelayedItinerary>)
        out += plan(b.plan);
      else if constexpr (std::is_same_v<B, CounterfactualConflict>)
        out += plan(b.counterfactual);
      else if constexpr (std::is_same_v<B, RelaxationSuggestion>)
        out += plan(b.witness);
      else if constexpr (std::is_same_v<B, OptimalityGap>)
        out += plan(b.optimal_plan);
      else if constexpr (std::is_same_v<B, FeasibilityConfirmed>)
      {
        for (const auto& p : b.better_plans)
          out += plan(p);
      }
      else
      {
        for (const auto& v : b.violations)
          out += "  " + violation(v) + "\n";
      }
    }, e.body);
  return out;
}

inline std::string result(const SolveResult& r)
{
  std::string out = std::string("outcome: ") + to_string(r.outcome);
  if (r.plan)
    out += ", makespan " + std::to_string(r.plan->makespan);
  out += "\n";
  if (r.plan)
    out += plan(*r.plan);
  return out;
}

} // namespace render

//==============================================================================
namespace detail {

inline std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw CLI::ValidationError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
    throw CLI::ValidationError("cannot write '" + path + "'");
}

inline json error_body(const std::string& code, const std::string& message,
  json extra = json::object())
{
  extra["code"] = code;
  extra["message"] = message;
  return {{"error", extra}};
}

/// Parses "AGENT:VERTEX" or "AGENT:VERTEX:T0-T1".
inline WhyWait parse_wait(const std::string& spec)
{
  const auto bad = [&]()
    {
      return CLI::ValidationError("--why-wait expects AGENT:VERTEX[:T0-T1], got '"
          + spec + "'");
    };
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(spec);
  while (std::getline(in, part, ':'))
    parts.push_back(part);
  if (parts.size() < 2 || parts.size() > 3 || parts[0].empty())
    throw bad();

  WhyWait q;
  q.agent = parts[0];
  try
  {
    std::size_t used = 0;
    q.vertex = std::stoi(parts[1], &used);
    if (used != parts[1].size())
      throw bad();
    if (parts.size() == 3)
    {
      const auto dash = parts[2].find('-');
      if (dash == std::string::npos)
        throw bad();
      q.window = WaitWindow{std::stoi(parts[2].substr(0, dash)),
        std::stoi(parts[2].substr(dash + 1))};
    }
  }
  catch (const std::logic_error&)
  {
    throw bad();
  }
  return q;
}

struct Common
{
  bool pretty = false;
  bool stats = false;
  bool from_ascii = false;
  double timeout = 60.0;

  SolverConfig solver() const
  {
    SolverConfig c;
    c.timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000.0));
    return c;
  }
};

inline Instance load_instance(const std::string& path, const Common& common)
{
  const auto text = read_file(path);
  return common.from_ascii ? io::parse_ascii(text) : io::parse_instance(text);
}

inline int solve_exit(Outcome o)
{
  switch (o)
  {
    case Outcome::Sat: return Exit::Ok;
    case Outcome::Unsat: return Exit::Negative;
    case Outcome::Timeout: return Exit::Timeout;
  }
  return Exit::Negative;
}

} // namespace detail

//==============================================================================
/// Runs the command line. Arguments exclude the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
  std::ostream& err)
{
  CLI::App app{"Multi-modal multi-agent path finding workbench", "mmapf"};
  app.require_subcommand(1);
  app.fallthrough();

  detail::Common common;
  app.add_flag("--pretty", common.pretty, "Human-readable output");
  app.add_flag("--stats", common.stats, "Include wall time in solver stats");
  app.add_flag("--from-ascii", common.from_ascii,
    "Read INSTANCE in the ASCII grid format");
  app.add_option("--timeout", common.timeout, "Solver budget in seconds")
  ->check(CLI::PositiveNumber);

  std::string instance_path;
  std::string plan_path;

  auto* solve = app.add_subcommand("solve", "Solve an instance optimally");
  std::optional<Time> makespan;
  std::string out_path;
  solve->add_option("INSTANCE", instance_path)->required();
  solve->add_option("--makespan", makespan,
    "Override the makespan bound")->check(CLI::NonNegativeNumber);
  solve->add_option("--out", out_path, "Write the plan to this file");

  auto* check = app.add_subcommand("validate", "Validate a plan");
  check->add_option("INSTANCE", instance_path)->required();
  check->add_option("PLAN", plan_path)->required();

  auto* explain = app.add_subcommand("explain", "Answer a query");
  std::string why_wait;
  bool why_infeasible = false;
  std::string check_plan;
  std::string why_nonoptimal;
  explain->add_option("INSTANCE", instance_path)->required();
  auto* wait_opt = explain->add_option("--why-wait", why_wait,
    "AGENT:VERTEX[:T0-T1]");
  explain->add_option("--plan", plan_path, "Plan for --why-wait")
  ->needs(wait_opt);
  auto* infeasible_opt = explain->add_flag("--why-infeasible", why_infeasible);
  auto* check_opt = explain->add_option("--check-plan", check_plan, "PLAN");
  auto* nonoptimal_opt = explain->add_option("--why-nonoptimal", why_nonoptimal,
    "PLAN");
  wait_opt->excludes(infeasible_opt)->excludes(check_opt)->excludes(nonoptimal_opt);
  infeasible_opt->excludes(check_opt)->excludes(nonoptimal_opt);
  check_opt->excludes(nonoptimal_opt);

  auto* dynamic = app.add_subcommand("dynamic", "Execute a plan under events");
  std::string events_path;
  DynamicPolicy policy;
  std::string fallback = "on";
  dynamic->add_option("INSTANCE", instance_path)->required();
  dynamic->add_option("--events", events_path, "Event file")->required();
  dynamic->add_option("--plan", plan_path,
    "Initial plan (default: solve the instance)");
  dynamic->add_option("--delta-max", policy.delta_max,
    "Extra horizons tried before falling back")->check(CLI::NonNegativeNumber);
  dynamic->add_option("--fallback", fallback, "Replan when revising fails")
  ->check(CLI::IsMember({"on", "off"}));

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  service::ServiceConfig service_config;
  if (const char* port = std::getenv("MAPF_PORT"))
  {
    try
    {
      service_config.port = std::stoi(port);
    }
    catch (const std::logic_error&)
    {
      err << "ignoring MAPF_PORT='" << port << "'\n";
    }
  }
  serve->add_option("--port", service_config.port, "Port (default $MAPF_PORT or 8080)")
  ->check(CLI::Range(0, 65535));
  serve->add_option("--host", service_config.host, "Bind address");
  serve->add_option("--snapshot-dir", service_config.snapshot_dir,
    "Directory for session snapshots");

  const auto emit = [&](const json& j) { out << io::dump(j); };

  try
  {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    if (explain->parsed() && why_wait.empty() && !why_infeasible
      && check_plan.empty() && why_nonoptimal.empty())
      throw CLI::RequiredError("explain needs one of --why-wait, --why-infeasible,"
              " --check-plan, --why-nonoptimal");
    if (explain->parsed() && !why_wait.empty() && plan_path.empty())
      throw CLI::RequiredError("--why-wait needs --plan");
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e, out, err);
    return code == 0 ? Exit::Ok : Exit::Usage;
  }

  try
  {
    if (serve->parsed())
    {
      service::Service svc(service_config);
      err << "mmapf listening on " << service_config.host << ":"
          << service_config.port << "\n";
      return svc.run() ? Exit::Ok : Exit::Usage;
    }

    Instance instance = detail::load_instance(instance_path, common);
    const auto config = common.solver();

    if (solve->parsed())
    {
      if (makespan)
        instance.makespan_bound = *makespan;
      const auto r = solve_optimal(instance, {}, config);
      if (r.plan && !out_path.empty())
        detail::write_file(out_path, io::serialize_plan(*r.plan));
      if (common.pretty)
        out << render::result(r);
      else
        emit(io::result_to_json(instance, r, common.stats));
      return detail::solve_exit(r.outcome);
    }

    if (check->parsed())
    {
      const Plan plan = io::parse_plan(detail::read_file(plan_path), &instance.graph);
      const auto report = validate(instance, plan);
      if (common.pretty)
        out << render::report(report);
      else
        emit(io::report_to_json(report));
      return report.feasible() ? Exit::Ok : Exit::Negative;
    }

    if (explain->parsed())
    {
      Query query = WhyInfeasible{};
      std::optional<Plan> plan;
      const auto load = [&](const std::string& path)
        {
          return io::parse_plan(detail::read_file(path), &instance.graph);
        };
      if (!why_wait.empty())
      {
        query = detail::parse_wait(why_wait);
        plan = load(plan_path);
      }
      else if (!check_plan.empty())
        query = CheckModifiedPlan{load(check_plan)};
      else if (!why_nonoptimal.empty())
        query = WhyNonoptimal{load(why_nonoptimal)};

      const auto answers = answer(instance, plan ? &*plan : nullptr, query, config);
      if (common.pretty)
      {
        if (answers.empty())
          out << messages::no_relaxation() << "\n";
        for (const auto& a : answers)
          out << render::explanation(a);
      }
      else
      {
        emit(io::answer_to_json(query, answers));
      }
      return Exit::Ok;
    }

    // dynamic
    policy.fallback_replan = fallback == "on";
    auto events = io::parse_events(detail::read_file(events_path));
    std::stable_sort(events.begin(), events.end(),
      [](const Event& a, const Event& b) { return a.time < b.time; });

    Plan initial;
    json initial_json;
    if (!plan_path.empty())
    {
      initial = io::parse_plan(detail::read_file(plan_path), &instance.graph);
      initial_json = {{"plan", io::plan_to_json(initial)}, {"source", "file"}};
    }
    else
    {
      const auto r = solve_optimal(instance, {}, config);
      initial_json = io::result_to_json(instance, r, common.stats);
      initial_json["source"] = "solve";
      if (!r.plan)
      {
        emit({{"initial", initial_json}, {"steps", json::array()}});
        return detail::solve_exit(r.outcome);
      }
      initial = *r.plan;
    }

    ExecutionState state = start_execution(instance, initial);
    json steps = json::array();
    int code = Exit::Ok;
    std::string pretty;
    for (std::size_t i = 0; i < events.size();)
    {
      const Time t = events[i].time;
      json batch = json::array();
      for (; i < events.size() && events[i].time == t; ++i)
      {
        state = apply_event(std::move(state), events[i]);
        batch.push_back(io::event_to_json(events[i]));
      }
      const auto r = resolve_dynamic(state, policy, config);
      steps.push_back({{"events", batch},
        {"result", io::dynamic_to_json(state.instance, r, common.stats)},
        {"time", t}});
      pretty += "t=" + std::to_string(t) + ": " + to_string(r.outcome)
        + (r.method ? std::string(" by ") + to_string(*r.method) : std::string())
        + ", horizon " + std::to_string(r.horizon_used) + "\n";
      if (r.plan)
        pretty += render::plan(*r.plan);
      if (!r.sat())
      {
        code = detail::solve_exit(r.outcome);
        break;
      }
    }
    if (common.pretty)
      out << pretty;
    else
      emit({{"initial", initial_json}, {"steps", steps}});
    return code;
  }
  catch (const CLI::Error& e)
  {
    emit(detail::error_body("usage", e.what()));
    return Exit::Usage;
  }
  catch (const SchemaError& e)
  {
    emit(detail::error_body("schema_error", e.what(), {{"path", e.path()}}));
    return Exit::Schema;
  }
  catch (const LookupError& e)
  {
    emit(detail::error_body("schema_error", e.what()));
    return Exit::Schema;
  }
  catch (const EventRejected& e)
  {
    emit(detail::error_body("event_rejected", e.what(),
      {{"diagnostic", io::violation_to_json(e.diagnostic())}}));
    return Exit::Negative;
  }
  catch (const PlanInfeasible& e)
  {
    emit(detail::error_body(e.code(), e.what(),
      {{"report", io::report_to_json(e.report())}}));
    return Exit::Negative;
  }
  catch (const PreconditionError& e)
  {
    emit(detail::error_body(e.code(), e.what()));
    return Exit::Negative;
  }
  catch (const SolverTimeout& e)
  {
    emit(detail::error_body("solver_timeout", e.what()));
    return Exit::Timeout;
  }
}

} // namespace cli
} // namespace mmapf

#endif // MMAPF__CLI_HPP
