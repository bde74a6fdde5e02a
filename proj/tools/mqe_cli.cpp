#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mqe/oracle.hpp"
#include "mqe/trajectory.hpp"
#include "mqe/vecenv.hpp"

using namespace mqe;
using nlohmann::json;

namespace {

constexpr int kExitFault = 2;
constexpr int kExitMismatch = 1;

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.file, "key = value config file");
  cmd->add_option("--set", args.sets, "override, key=value (repeatable)");
}

EnvConfig build_config(const ConfigArgs& args) {
  EnvConfig cfg;
  if (!args.file.empty()) {
    for (const auto& [k, v] : load_config_file(args.file).entries) apply_override(cfg, k, v);
  }
  for (const std::string& s : args.sets) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

bool is_success(const TaskSpec& spec, Outcome o) {
  if (spec.collaborative) return o == Outcome::Success || o == Outcome::Goal;
  return o == Outcome::TeamAWin;
}

std::string mean_std(double mean, double sd) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(0) << mean << " ± " << sd;
  return s.str();
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_list_tasks(bool as_json) {
  EnvConfig cfg;
  json all = json::array();
  for (TaskId id : all_tasks()) {
    const Task task(id, cfg);
    const TaskSpec& spec = task.spec();
    json t = {{"id", spec.name},
              {"kind", spec.collaborative ? "collaborative" : "competitive"},
              {"n_agents", spec.n_agents},
              {"obs_dim", task.obs_dim()},
              {"privileged_obs_dim", task.privileged_obs_dim()},
              {"episode_len", spec.episode_len}};
    json terms = json::array();
    for (const RewardTerm& r : spec.terms) {
      terms.push_back({{"name", r.name}, {"kind", to_string(r.kind)}, {"scale", r.scale}});
    }
    t["terms"] = terms;
    json layout = json::array();
    static const char* kKinds[] = {"ego", "body", "anchor", "scalar"};
    for (const ObsSlot& slot : task.obs_layout()) {
      layout.push_back({{"kind", kKinds[static_cast<int>(slot.kind)]},
                        {"label", slot.label},
                        {"width", slot.width}});
    }
    t["obs_layout"] = layout;
    json sc = json::array();
    for (const ScriptInfo& s : scripts())
      if (s.task == id) sc.push_back(std::string(s.name));
    t["scripts"] = sc;
    all.push_back(t);
  }
  if (as_json) {
    std::cout << all.dump(2) << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(17) << "id" << std::setw(15) << "kind" << std::setw(8)
            << "agents" << std::setw(6) << "obs" << "scripts\n";
  for (const json& t : all) {
    std::string sc;
    for (const json& s : t["scripts"]) sc += (sc.empty() ? "" : ", ") + s.get<std::string>();
    std::cout << std::left << std::setw(17) << t["id"].get<std::string>() << std::setw(15)
              << t["kind"].get<std::string>() << std::setw(8) << t["n_agents"].get<int>()
              << std::setw(6) << t["obs_dim"].get<int>() << (sc.empty() ? "-" : sc) << '\n';
  }
  return 0;
}

struct RunArgs {
  std::string task;
  std::string policy = "random";
  int envs = 8;
  std::uint64_t seed = 0;
  int steps = 0;
  int workers = 0;
  std::string record;
  std::string dump_config;
  bool json_out = false;
  ConfigArgs config;
};

int cmd_run(const RunArgs& a) {
  const TaskId id = parse_task_id(a.task);
  const EnvConfig cfg = build_config(a.config);
  const PolicySpec policy = parse_policy(a.policy);
  if (a.envs < 1) throw ConfigError("--envs must be >= 1");
  auto task = std::make_shared<const Task>(id, cfg);
  if (policy.kind == PolicyKind::Scripted) (void)find_script(policy.script, id);
  const int steps = a.steps > 0 ? a.steps : task->spec().episode_len;
  if (!a.dump_config.empty()) {
    std::ofstream out(a.dump_config);
    out << dump_config(cfg);
    if (!out) throw Fault("cannot write " + a.dump_config);
  }

  EnvBatch batch(task, a.envs, a.seed, a.workers > 0 ? a.workers : default_workers());
  BatchPolicy pol(policy, batch);
  std::ofstream file;
  std::unique_ptr<TrajectoryWriter> writer;
  if (!a.record.empty()) {
    file.open(a.record, std::ios::binary | std::ios::trunc);
    if (!file) throw Fault("cannot open record path " + a.record);
    writer = std::make_unique<TrajectoryWriter>(file, batch, policy, steps);
  }

  batch.reset();
  if (writer) writer->flush();
  std::vector<double> actions(static_cast<std::size_t>(batch.n_envs() * batch.n_agents() * 3));
  std::map<std::string, int> histogram;
  int episodes = 0;
  int successes = 0;
  double return_sum = 0.0;
  for (int s = 0; s < steps; ++s) {
    pol.act(batch, actions);
    batch.step(actions);
    if (writer) writer->flush();
    for (int e = 0; e < batch.n_envs(); ++e) {
      if (!batch.dones()[static_cast<std::size_t>(e)]) continue;
      const EnvInfo& info = batch.info(e);
      ++episodes;
      ++histogram[std::string(to_string(info.outcome))];
      successes += is_success(task->spec(), info.outcome);
      return_sum += info.episode_return[0];
    }
  }
  writer.reset();

  const double rate = episodes ? static_cast<double>(successes) / episodes : 0.0;
  const double mean_return = episodes ? return_sum / episodes : 0.0;
  if (a.json_out) {
    json j = {{"task", task->spec().name},     {"policy", policy.text()},
              {"n_envs", batch.n_envs()},      {"seed", a.seed},
              {"steps", steps},                {"episodes", episodes},
              {"mean_episode_return", mean_return}, {"success_rate", rate},
              {"outcomes", histogram}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << "task " << task->spec().name << "  policy " << policy.text() << "  envs "
            << batch.n_envs() << "  seed " << a.seed << "  steps " << steps << '\n';
  std::cout << "episodes " << episodes << '\n';
  std::cout << "mean episode return " << format_double(mean_return) << '\n';
  std::cout << "success rate " << format_double(rate) << '\n';
  std::cout << "outcomes";
  for (const auto& [k, v] : histogram) std::cout << ' ' << k << '=' << v;
  std::cout << '\n';
  if (!a.record.empty()) std::cout << "recorded " << a.record << '\n';
  return 0;
}

int cmd_replay(const std::string& path, double tolerance, bool json_out) {
  const ReplayReport r = replay_file(path);
  const bool ok = r.ok(tolerance);
  if (json_out) {
    json issues = json::array();
    for (const ReplayIssue& i : r.issues)
      issues.push_back({{"line", i.line}, {"env", i.env}, {"step", i.step}, {"what", i.what}});
    json j = {{"task", r.task},
              {"transitions", r.transitions},
              {"episodes", r.episodes},
              {"max_discrepancy", r.max_discrepancy},
              {"worst", {{"env", r.worst_env}, {"step", r.worst_step}, {"line", r.worst_line},
                         {"field", r.worst_field}}},
              {"termination_mismatches", r.termination_mismatches},
              {"issues", issues},
              {"ok", ok}};
    std::cout << j.dump(2) << '\n';
    return ok ? 0 : kExitMismatch;
  }
  std::cout << "task " << r.task << "  envs " << r.n_envs << "  transitions " << r.transitions
            << "  completed episodes " << r.episodes << '\n';
  std::cout << "max discrepancy " << format_double(r.max_discrepancy);
  if (r.worst_env >= 0) {
    std::cout << " at env " << r.worst_env << " step " << r.worst_step << " (line " << r.worst_line
              << ", " << r.worst_field << ")";
  }
  std::cout << '\n';
  std::cout << "termination mismatches " << r.termination_mismatches << '\n';
  for (const ReplayIssue& i : r.issues) {
    std::cout << "  line " << i.line << " env " << i.env << " step " << i.step << ": " << i.what
              << '\n';
  }
  std::cout << (ok ? "OK" : "MISMATCH") << " (tolerance " << format_double(tolerance) << ")\n";
  return ok ? 0 : kExitMismatch;
}

struct BenchArgs {
  std::string tasks = "narrow_gate,climb_seesaw,sheepdog_easy";
  std::string envs = "500,1000";
  int steps = 200;
  int trials = 5;
  int workers = 0;
  std::uint64_t seed = 0;
  std::string policy = "random";
  std::string report;
  ConfigArgs config;
};

int cmd_bench(const BenchArgs& a) {
  const EnvConfig cfg = build_config(a.config);
  const PolicySpec policy = parse_policy(a.policy);
  std::vector<TaskId> tasks;
  for (const std::string& t : split_csv(a.tasks)) tasks.push_back(parse_task_id(t));
  std::vector<int> counts;
  for (const std::string& n : split_csv(a.envs)) {
    try {
      counts.push_back(std::stoi(n));
    } catch (const std::exception&) {
      throw ConfigError("--envs expects integers, got '" + n + "'");
    }
    if (counts.back() < 1) throw ConfigError("--envs values must be >= 1");
  }
  if (tasks.empty() || counts.empty()) throw ConfigError("bench needs at least one task and env count");
  if (a.trials < 1 || a.steps < 1) throw ConfigError("--trials and --steps must be >= 1");
  const int workers = a.workers > 0 ? a.workers : default_workers();

  json rows = json::array();
  std::map<std::pair<int, int>, BenchResult> results;
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    for (std::size_t ci = 0; ci < counts.size(); ++ci) {
      BenchResult r = bench(tasks[ti], cfg, counts[ci], a.steps, policy, a.trials, workers, a.seed);
      rows.push_back({{"task", r.task},
                      {"n_envs", r.n_envs},
                      {"n_workers", r.n_workers},
                      {"n_steps", r.n_steps},
                      {"policy", r.policy},
                      {"trials", [&] {
                         json t = json::array();
                         for (const BenchTrial& x : r.trials) t.push_back(x.agent_steps_per_sec);
                         return t;
                       }()},
                      {"mean", r.mean},
                      {"std", r.stddev},
                      {"policy_fraction", r.policy_fraction}});
      results[{static_cast<int>(ti), static_cast<int>(ci)}] = std::move(r);
    }
  }

  std::cout << "agent-steps/s, mean ± std over " << a.trials << " trials (" << policy.text()
            << " policy, " << a.steps << " steps, " << workers << " workers)\n";
  std::cout << std::left << std::setw(8) << "envs";
  for (TaskId t : tasks) std::cout << std::setw(24) << task_name(t);
  std::cout << '\n';
  for (std::size_t ci = 0; ci < counts.size(); ++ci) {
    std::cout << std::left << std::setw(8) << counts[ci];
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
      const BenchResult& r = results[{static_cast<int>(ti), static_cast<int>(ci)}];
      std::cout << std::setw(24) << mean_std(r.mean, r.stddev);
    }
    std::cout << '\n';
  }
  const json report = {{"unit", "agent_steps_per_sec"}, {"workers", workers}, {"rows", rows}};
  if (!a.report.empty()) {
    std::ofstream out(a.report);
    out << report.dump(2) << '\n';
    if (!out) throw Fault("cannot write " + a.report);
    std::cout << "report " << a.report << '\n';
  } else {
    std::cout << report.dump() << '\n';
  }
  return 0;
}

int cmd_validate(const ConfigArgs& args, bool list_keys, bool dump) {
  if (list_keys) {
    for (const ConfigKey& k : config_keys()) std::cout << k.key << "  " << k.description << '\n';
    return 0;
  }
  const EnvConfig cfg = build_config(args);
  for (TaskId id : all_tasks()) (void)Task(id, cfg);
  if (dump) std::cout << dump_config(cfg);
  std::cout << "config ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent quadruped environment"};
  app.require_subcommand(1);

  bool list_json = false;
  CLI::App* list = app.add_subcommand("list-tasks", "enumerate task ids, sizes and scripts");
  list->add_flag("--json", list_json, "machine-readable output");

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "run a batch and print an episode summary");
  run->add_option("--task", run_args.task, "task id")->required();
  run->add_option("--policy", run_args.policy, "zero | random | scripted:<name>")
      ->capture_default_str();
  run->add_option("--envs", run_args.envs, "number of environments")->capture_default_str();
  run->add_option("--seed", run_args.seed, "master seed")->capture_default_str();
  run->add_option("--steps", run_args.steps, "control steps (default: one episode length)");
  run->add_option("--workers", run_args.workers, "worker threads (default: MQE_WORKERS or cores)");
  run->add_option("--record", run_args.record, "write a trajectory file");
  run->add_option("--dump-config", run_args.dump_config, "write the effective config");
  run->add_flag("--json", run_args.json_out, "machine-readable summary");
  add_config_options(run, run_args.config);

  std::string replay_path;
  double tolerance = 1e-9;
  bool replay_json = false;
  CLI::App* replay = app.add_subcommand("replay", "recompute rewards of a trajectory with the oracle");
  replay->add_option("path", replay_path, "trajectory file")->required();
  replay->add_option("--tolerance", tolerance, "max allowed discrepancy")->capture_default_str();
  replay->add_flag("--json", replay_json, "machine-readable report");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("bench", "throughput table over tasks x env counts");
  bench_cmd->add_option("--tasks", bench_args.tasks, "comma-separated task ids")->capture_default_str();
  bench_cmd->add_option("--envs", bench_args.envs, "comma-separated env counts")->capture_default_str();
  bench_cmd->add_option("--steps", bench_args.steps, "timed steps per trial")->capture_default_str();
  bench_cmd->add_option("--trials", bench_args.trials, "trials per cell")->capture_default_str();
  bench_cmd->add_option("--workers", bench_args.workers, "worker threads");
  bench_cmd->add_option("--seed", bench_args.seed, "master seed")->capture_default_str();
  bench_cmd->add_option("--policy", bench_args.policy, "zero | random | scripted:<name>")
      ->capture_default_str();
  bench_cmd->add_option("--report", bench_args.report, "write the JSON report here");
  add_config_options(bench_cmd, bench_args.config);

  ConfigArgs validate_args;
  bool list_keys = false;
  bool dump = false;
  CLI::App* validate = app.add_subcommand("validate-config", "check a config file and overrides");
  validate->add_option("file", validate_args.file, "config file");
  validate->add_option("--set", validate_args.sets, "override, key=value (repeatable)");
  validate->add_flag("--list-keys", list_keys, "print every accepted key");
  validate->add_flag("--dump", dump, "print the effective config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) return cmd_list_tasks(list_json);
    if (*run) return cmd_run(run_args);
    if (*replay) return cmd_replay(replay_path, tolerance, replay_json);
    if (*bench_cmd) return cmd_bench(bench_args);
    if (*validate) return cmd_validate(validate_args, list_keys, dump);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFault;
  }
  return 0;
}
