// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
//
// vnt - virtual-node training and scheduling testbed.
//
// Subcommands: train, profile, solve, sched, gen-trace. Every command takes
// a JSON config (--config), validates it strictly, and produces
// deterministic outputs. stdout carries machine-readable payloads when
// --json is set; diagnostics go to stderr.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "vnt/errors.hpp"
#include "vnt/json_io.hpp"
#include "vnt/runner.hpp"
#include "vnt/trace_gen.hpp"

namespace {

using vnt::io::json;

constexpr int kExitConfig = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitInfeasible = 5;

struct CommonFlags {
  std::string config_path;
  bool json_output = false;
  std::optional<std::uint64_t> seed_override;
};

class DivergenceFailure : public vnt::Error {
 public:
  using Error::Error;
};

std::vector<vnt::DeviceSpec> devices_from_json(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw vnt::ConfigError("devices: expected a non-empty array");
  }
  std::vector<vnt::DeviceSpec> devices;
  for (const json& d : j) devices.push_back(vnt::io::device_spec_from_json(d));
  return devices;
}

int cmd_train(const CommonFlags& flags, const std::string& compare_against) {
  const json config = vnt::io::load_json_file(flags.config_path);
  vnt::io::ObjectReader reader(config, "train config");

  vnt::RunnerConfig runner;
  runner.model = vnt::io::model_spec_from_json(reader.require("workload"));
  runner.global_batch = reader.require("global_batch").get<std::size_t>();
  runner.virtual_nodes = reader.require("virtual_nodes").get<std::size_t>();
  const auto steps = reader.require("steps").get<std::size_t>();
  runner.lr = reader.require("lr").get<double>();
  runner.devices = devices_from_json(reader.require("devices"));
  if (const json* v = reader.optional("data_seed")) {
    runner.data_seed = v->get<std::uint64_t>();
  }
  if (const json* v = reader.optional("dataset_size")) {
    runner.dataset_size = v->get<std::size_t>();
  }
  if (const json* v = reader.optional("shuffle_epochs")) {
    runner.shuffle_epochs = v->get<bool>();
  }
  if (const json* v = reader.optional("shuffle_seed")) {
    runner.shuffle_seed = v->get<std::uint64_t>();
  }
  if (const json* v = reader.optional("parallel_devices")) {
    runner.parallel_devices = v->get<bool>();
  }
  if (const json* v = reader.optional("prefetch")) {
    runner.prefetch = v->get<bool>();
  }
  std::vector<vnt::elastic::ResizePoint> schedule;
  if (const json* v = reader.optional("resize_schedule")) {
    schedule = vnt::io::resize_schedule_from_json(*v);
  }
  double tolerance = 0.0;
  if (const json* v = reader.optional("compare_tolerance")) {
    tolerance = v->get<double>();
  }
  std::string metrics_out, params_out;
  if (const json* v = reader.optional("metrics_out")) metrics_out = v->get<std::string>();
  if (const json* v = reader.optional("params_out")) params_out = v->get<std::string>();
  reader.done();

  if (flags.seed_override) {
    runner.model.seed = *flags.seed_override;
    runner.data_seed = *flags.seed_override;
  }

  vnt::Trainer trainer(runner);
  std::string metrics_lines;
  std::size_t cursor = 0;
  double last_loss = 0.0;
  for (std::uint64_t step = 0; step < steps; ++step) {
    while (cursor < schedule.size() && schedule[cursor].step == step) {
      trainer.resize(schedule[cursor].devices);
      ++cursor;
    }
    const vnt::StepMetrics metrics = trainer.step();
    last_loss = metrics.loss;
    metrics_lines += vnt::io::step_metrics_jsonl(metrics);
    metrics_lines += '\n';
  }
  if (!metrics_out.empty()) vnt::io::write_text_file(metrics_out, metrics_lines);
  if (!params_out.empty()) {
    vnt::io::write_text_file(params_out,
                             vnt::io::params_to_json(trainer.params()).dump(2) + "\n");
  }

  json summary{{"steps", steps}, {"final_loss", last_loss},
               {"devices", trainer.world().workers.size()}};
  if (!compare_against.empty()) {
    const vnt::ParamVector other =
        vnt::io::params_from_json(vnt::io::load_json_file(compare_against));
    if (!trainer.params().same_layout(other)) {
      throw vnt::ShapeError("--compare-against: parameter layouts differ");
    }
    double max_div = 0.0;
    for (std::size_t i = 0; i < other.values.size(); ++i) {
      max_div = std::max(max_div,
                         std::abs(trainer.params().values[i] - other.values[i]));
    }
    summary["max_divergence"] = max_div;
    summary["bitwise_identical"] = trainer.params().bitwise_equal(other);
    if (max_div > tolerance) {
      if (flags.json_output) std::cout << summary.dump() << "\n";
      throw DivergenceFailure("parameter divergence " + json(max_div).dump() +
                              " exceeds tolerance " + json(tolerance).dump());
    }
  }
  if (flags.json_output) {
    std::cout << summary.dump() << "\n";
  } else {
    std::cout << "trained " << steps << " steps on "
              << trainer.world().workers.size()
              << " devices, final loss " << json(last_loss).dump() << "\n";
    if (summary.contains("max_divergence")) {
      std::cout << "max divergence vs reference: "
                << summary["max_divergence"].dump() << "\n";
    }
  }
  return 0;
}

int cmd_profile(const CommonFlags& flags) {
  const json config = vnt::io::load_json_file(flags.config_path);
  vnt::io::ObjectReader reader(config, "profile config");

  const vnt::ModelSpec workload = vnt::io::model_spec_from_json(reader.require("workload"));
  const auto max_batch = reader.require("max_batch").get<std::size_t>();
  std::vector<vnt::hetero::DeviceCostModel> models;
  for (const json& m : reader.require("device_models")) {
    models.push_back(vnt::io::cost_model_from_json(m));
  }
  vnt::hetero::ProfileOptions options;
  if (const json* v = reader.optional("steps")) options.steps = v->get<std::size_t>();
  if (const json* v = reader.optional("data_seed")) {
    options.data_seed = v->get<std::uint64_t>();
  }
  const auto out_dir = reader.require("out_dir").get<std::string>();
  reader.done();

  if (models.empty()) throw vnt::ConfigError("profile: no device models");
  std::filesystem::create_directories(out_dir);

  const auto grid = vnt::hetero::candidate_batch_sizes(max_batch);
  json written = json::array();
  for (const vnt::hetero::DeviceCostModel& model : models) {
    const auto result = vnt::hetero::profile(workload, model, grid, options);
    for (const std::string& warning : result.warnings) {
      std::cerr << "warning: " << warning << "\n";
    }
    if (result.curve.points.empty()) {
      throw vnt::ConfigError("profile: no batch size fits device type " +
                             model.device_type + "; curve would be empty");
    }
    const std::string path = out_dir + "/" + model.device_type + ".json";
    vnt::io::write_text_file(
        path, vnt::io::profile_curve_to_json(result.curve).dump(2) + "\n");
    written.push_back(path);
  }
  if (flags.json_output) {
    std::cout << json{{"profiles", written}}.dump() << "\n";
  } else {
    for (const auto& p : written) std::cout << "wrote " << p.get<std::string>() << "\n";
  }
  return 0;
}

int cmd_solve(const CommonFlags& flags, bool explain) {
  const json config = vnt::io::load_json_file(flags.config_path);
  vnt::io::ObjectReader reader(config, "solve config");

  std::vector<vnt::hetero::ProfileCurve> profiles;
  for (const json& p : reader.require("profiles")) {
    profiles.push_back(
        vnt::io::profile_curve_from_json(vnt::io::load_json_file(p.get<std::string>())));
  }
  vnt::hetero::DevicePool pool;
  const json& pool_json = reader.require("pool");
  if (!pool_json.is_object()) throw vnt::ConfigError("solve: pool must be an object");
  for (const auto& [type, entry] : pool_json.items()) {
    vnt::io::ObjectReader er(entry, "pool entry " + type);
    vnt::hetero::DevicePoolEntry e;
    e.count = er.require("count").get<std::size_t>();
    e.memory_capacity = er.require("memory_capacity").get<std::size_t>();
    er.done();
    pool.entries[type] = e;
  }
  const auto global_batch = reader.require("global_batch").get<std::size_t>();
  vnt::hetero::SolveOptions options;
  options.collect_candidates = explain;
  if (const json* v = reader.optional("max_virtual_nodes")) {
    options.max_virtual_nodes = v->get<std::size_t>();
  }
  std::string out;
  if (const json* v = reader.optional("out")) out = v->get<std::string>();
  reader.done();

  const auto result = vnt::hetero::solve(profiles, pool, global_batch, options);
  const json assignment = vnt::io::assignment_to_json(result.best);
  if (!out.empty()) vnt::io::write_text_file(out, assignment.dump(2) + "\n");

  if (flags.json_output) {
    json payload{{"assignment", assignment}};
    if (explain) {
      json table = json::array();
      for (const auto& c : result.candidates) {
        table.push_back(vnt::io::assignment_to_json(c));
      }
      payload["candidates"] = table;
    }
    std::cout << payload.dump() << "\n";
  } else {
    std::cout << "predicted step time: "
              << json(result.best.predicted_step_time_s).dump() << " s\n";
    for (const auto& t : result.best.types) {
      std::cout << "  " << t.device_type << ": n=" << t.devices_used
                << " b=" << t.per_device_batch << " v=" << t.virtual_nodes << "\n";
    }
    if (explain) {
      std::cout << "evaluated " << result.candidates.size() << " candidates\n";
      for (const auto& c : result.candidates) {
        std::cout << "candidate t=" << json(c.predicted_step_time_s).dump();
        for (const auto& t : c.types) {
          std::cout << " " << t.device_type << ":n" << t.devices_used << ":b"
                    << t.per_device_batch << ":v" << t.virtual_nodes;
        }
        std::cout << "\n";
      }
    }
  }
  return 0;
}

int cmd_sched(const CommonFlags& flags, const std::string& policy_override) {
  const json config = vnt::io::load_json_file(flags.config_path);
  vnt::io::ObjectReader reader(config, "sched config");

  const auto trace_path = reader.require("trace").get<std::string>();
  const auto trace = vnt::io::trace_from_json(vnt::io::load_json_file(trace_path));
  const vnt::sched::Cluster cluster =
      vnt::io::cluster_from_json(reader.require("cluster"));
  vnt::sched::SimOptions options;
  options.policy = vnt::sched::policy_from_string(
      policy_override.empty() ? reader.require("policy").get<std::string>()
                              : policy_override);
  if (!policy_override.empty()) reader.optional("policy");
  if (const json* v = reader.optional("round_seconds")) {
    options.round_seconds = v->get<double>();
  }
  if (const json* v = reader.optional("seed")) options.seed = v->get<std::uint64_t>();
  if (flags.seed_override) options.seed = *flags.seed_override;
  std::string summary_out, utilization_out, jobs_csv_out;
  if (const json* v = reader.optional("summary_out")) {
    summary_out = v->get<std::string>();
  }
  if (const json* v = reader.optional("utilization_out")) {
    utilization_out = v->get<std::string>();
  }
  if (const json* v = reader.optional("jobs_csv_out")) {
    jobs_csv_out = v->get<std::string>();
  }
  reader.done();

  const auto metrics = vnt::sched::run_simulation(trace, cluster, options);
  const json summary = vnt::io::trace_metrics_summary(metrics);
  if (!summary_out.empty()) {
    vnt::io::write_text_file(summary_out, summary.dump(2) + "\n");
  }
  if (!utilization_out.empty()) {
    vnt::io::write_text_file(utilization_out, vnt::io::utilization_jsonl(metrics));
  }
  if (!jobs_csv_out.empty()) {
    vnt::io::write_text_file(jobs_csv_out, vnt::io::per_job_csv(metrics));
  }
  if (flags.json_output) {
    std::cout << summary.dump() << "\n";
  } else {
    std::cout << "policy " << vnt::sched::to_string(options.policy) << ": "
              << metrics.jobs.size() << " jobs, makespan "
              << json(metrics.makespan).dump() << " s, mean utilization "
              << json(metrics.mean_utilization).dump() << "\n";
  }
  return 0;
}

int cmd_gen_trace(const CommonFlags& flags) {
  const json config = vnt::io::load_json_file(flags.config_path);
  vnt::io::ObjectReader reader(config, "gen-trace config");

  vnt::sched::TraceGenOptions options;
  options.seed = reader.require("seed").get<std::uint64_t>();
  options.num_jobs = reader.require("num_jobs").get<std::size_t>();
  if (const json* v = reader.optional("mean_interarrival_s")) {
    options.mean_interarrival_s = v->get<double>();
  }
  if (const json* v = reader.optional("priorities")) {
    options.priorities = v->get<std::vector<double>>();
  }
  if (const json* v = reader.optional("max_demand")) {
    options.max_demand = v->get<std::size_t>();
  }
  const auto out = reader.require("out").get<std::string>();
  reader.done();

  if (flags.seed_override) options.seed = *flags.seed_override;
  const auto trace = vnt::sched::generate_poisson_trace(options);
  vnt::io::write_text_file(out, vnt::io::trace_to_json(trace).dump(2) + "\n");
  if (flags.json_output) {
    std::cout << json{{"jobs", trace.size()}, {"out", out}}.dump() << "\n";
  } else {
    std::cout << "wrote " << trace.size() << " jobs to " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual-node training and scheduling testbed"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string compare_against, policy_override;
  bool explain = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "JSON config file")->required();
    cmd->add_flag("--json", flags.json_output, "machine-readable stdout");
    cmd->add_option("--seed", flags.seed_override, "override the config seed");
  };

  CLI::App* train = app.add_subcommand("train", "run a training experiment");
  add_common(train);
  train->add_option("--compare-against", compare_against,
                    "params file to compare the final parameters against");

  CLI::App* profile = app.add_subcommand("profile", "offline device profiling");
  add_common(profile);

  CLI::App* solve = app.add_subcommand("solve", "heterogeneous batch assignment");
  add_common(solve);
  solve->add_flag("--explain", explain, "dump the evaluated candidate table");

  CLI::App* sched = app.add_subcommand("sched", "cluster scheduling simulation");
  add_common(sched);
  sched->add_option("--policy", policy_override,
                    "scheduling policy: static, wfs or het-rounds");

  CLI::App* gen = app.add_subcommand("gen-trace", "generate a Poisson job trace");
  add_common(gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train->parsed()) return cmd_train(flags, compare_against);
    if (profile->parsed()) return cmd_profile(flags);
    if (solve->parsed()) return cmd_solve(flags, explain);
    if (sched->parsed()) return cmd_sched(flags, policy_override);
    if (gen->parsed()) return cmd_gen_trace(flags);
  } catch (const DivergenceFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const vnt::CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const vnt::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const vnt::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const vnt::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
