// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include <filesystem>

#include "doctest.h"
#include "helpers/cli_runner.hpp"
#include "helpers/solver_oracle.hpp"
#include "json.hpp"
#include "vnt/json_io.hpp"

using json = nlohmann::json;
using vnt_test::run_vnt;
using vnt_test::scratch_dir;
using vnt_test::slurp;
using vnt_test::spit;

namespace {

json base_train_config() {
  json devices = json::array();
  for (int i = 0; i < 4; ++i) {
    devices.push_back({{"device_id", "gpu" + std::to_string(i)},
                       {"device_type", "V100"},
                       {"memory_capacity", 64}});
  }
  return json{
      {"workload", {{"layer_widths", {4, 16, 4}},
                    {"activation", "tanh"},
                    {"loss", "mse"},
                    {"seed", 11}}},
      {"global_batch", 32},
      {"virtual_nodes", 8},
      {"steps", 20},
      {"lr", 0.05},
      {"data_seed", 11},
      {"dataset_size", 128},
      {"devices", devices},
      {"metrics_out", "metrics.jsonl"},
      {"params_out", "params.json"},
  };
}

json single_device_variant(json config) {
  json devices = json::array();
  devices.push_back({{"device_id", "solo"},
                     {"device_type", "V100"},
                     {"memory_capacity", 64}});
  config["devices"] = devices;
  config["metrics_out"] = "metrics_single.jsonl";
  config["params_out"] = "params_single.json";
  return config;
}

}  // namespace

TEST_CASE("train runs and rerunning is byte identical") {
  const auto dir = scratch_dir("train_determinism");
  spit(dir / "config.json", base_train_config().dump(2));
  const auto a = run_vnt("train --config config.json --json", dir);
  REQUIRE(a.exit_code == 0);
  const std::string metrics_a = slurp(dir / "metrics.jsonl");
  const std::string params_a = slurp(dir / "params.json");
  const auto b = run_vnt("train --config config.json --json", dir);
  REQUIRE(b.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(metrics_a == slurp(dir / "metrics.jsonl"));
  CHECK(params_a == slurp(dir / "params.json"));
  CHECK(!metrics_a.empty());

  // JSONL metrics parse line by line.
  std::istringstream lines(metrics_a);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const json record = json::parse(line);
    CHECK(record.contains("step"));
    CHECK(record.contains("loss"));
    CHECK(record["per_device"].size() == 4);
    ++count;
  }
  CHECK(count == 20);
}

TEST_CASE("mapping invariance holds end to end through the CLI") {
  const auto dir = scratch_dir("train_invariance");
  spit(dir / "four.json", base_train_config().dump(2));
  spit(dir / "one.json", single_device_variant(base_train_config()).dump(2));
  REQUIRE(run_vnt("train --config four.json", dir).exit_code == 0);
  const auto compared =
      run_vnt("train --config one.json --json --compare-against params.json", dir);
  REQUIRE(compared.exit_code == 0);
  const json summary = json::parse(compared.out);
  CHECK(summary["max_divergence"] == 0.0);
  CHECK(summary["bitwise_identical"] == true);
}

TEST_CASE("divergence beyond tolerance exits with code 4") {
  const auto dir = scratch_dir("train_divergence");
  spit(dir / "a.json", base_train_config().dump(2));
  json other = base_train_config();
  other["workload"]["seed"] = 99;
  other["params_out"] = "params_other.json";
  other["metrics_out"] = "metrics_other.jsonl";
  spit(dir / "b.json", other.dump(2));
  REQUIRE(run_vnt("train --config a.json", dir).exit_code == 0);
  const auto result =
      run_vnt("train --config b.json --compare-against params.json", dir);
  CHECK(result.exit_code == 4);
  CHECK(result.err.find("divergence") != std::string::npos);
}

TEST_CASE("schema violations exit with code 2") {
  const auto dir = scratch_dir("train_schema");
  json bad = base_train_config();
  bad["unknown_knob"] = 42;
  spit(dir / "config.json", bad.dump(2));
  const auto result = run_vnt("train --config config.json", dir);
  CHECK(result.exit_code == 2);
  CHECK(result.err.find("unknown_knob") != std::string::npos);

  json missing = base_train_config();
  missing.erase("lr");
  spit(dir / "missing.json", missing.dump(2));
  CHECK(run_vnt("train --config missing.json", dir).exit_code == 2);
}

TEST_CASE("capacity violations exit with code 3 and name the device") {
  const auto dir = scratch_dir("train_capacity");
  json config = base_train_config();
  config["devices"][0]["memory_capacity"] = 2;  // micro-batch is 4
  spit(dir / "config.json", config.dump(2));
  const auto result = run_vnt("train --config config.json", dir);
  CHECK(result.exit_code == 3);
  CHECK(result.err.find("gpu0") != std::string::npos);
}

TEST_CASE("profile writes one identical-grid file per device type") {
  const auto dir = scratch_dir("profile");
  const json config{
      {"workload", {{"layer_widths", {4, 8, 4}},
                    {"activation", "tanh"},
                    {"loss", "mse"},
                    {"seed", 1}}},
      {"max_batch", 64},
      {"device_models",
       json::array({{{"device_type", "A"}, {"fixed_overhead_s", 0.0},
                     {"per_example_cost_s", 0.001}, {"comm_s", 0.005},
                     {"memory_capacity", 64}},
                    {{"device_type", "B"}, {"fixed_overhead_s", 0.0},
                     {"per_example_cost_s", 0.002}, {"comm_s", 0.005},
                     {"memory_capacity", 64}}})},
      {"out_dir", "profiles"}};
  spit(dir / "config.json", config.dump(2));
  const auto first = run_vnt("profile --config config.json --json", dir);
  REQUIRE(first.exit_code == 0);
  const std::string a = slurp(dir / "profiles/A.json");
  const std::string b = slurp(dir / "profiles/B.json");
  const json curve_a = json::parse(a);
  const json curve_b = json::parse(b);
  REQUIRE(curve_a["points"].size() == curve_b["points"].size());
  for (std::size_t i = 0; i < curve_a["points"].size(); ++i) {
    CHECK(curve_a["points"][i]["batch_size"] == curve_b["points"][i]["batch_size"]);
  }
  // Rerun is byte identical.
  REQUIRE(run_vnt("profile --config config.json --json", dir).exit_code == 0);
  CHECK(slurp(dir / "profiles/A.json") == a);
}

TEST_CASE("profile with no feasible batch size is a config error") {
  const auto dir = scratch_dir("profile_empty");
  const json config{
      {"workload", {{"layer_widths", {4, 8, 4}},
                    {"activation", "tanh"},
                    {"loss", "mse"},
                    {"seed", 1}}},
      {"max_batch", 0},
      {"device_models",
       json::array({{{"device_type", "A"}, {"fixed_overhead_s", 0.0},
                     {"per_example_cost_s", 0.001}, {"comm_s", 0.0},
                     {"memory_capacity", 64}}})},
      {"out_dir", "profiles"}};
  spit(dir / "config.json", config.dump(2));
  CHECK(run_vnt("profile --config config.json", dir).exit_code == 2);
}

TEST_CASE("solve explains exactly the oracle's candidate count") {
  const auto dir = scratch_dir("solve_explain");
  // Analytic profiles written directly.
  vnt::hetero::DeviceCostModel a{"A", 0.001, 0.001, 0.002, 8, 1.0};
  vnt::hetero::DeviceCostModel b{"B", 0.001, 0.0005, 0.002, 8, 1.0};
  std::vector<vnt::hetero::ProfileCurve> curves;
  for (const auto& m : {a, b}) {
    vnt::hetero::ProfileCurve curve;
    curve.device_type = m.device_type;
    curve.comm_overhead_s = m.comm_s;
    for (std::size_t size : vnt::hetero::candidate_batch_sizes(8)) {
      curve.points.push_back({size, m.step_time(size, 1, 2)});
    }
    curves.push_back(curve);
    spit(dir / (m.device_type + ".json"),
         vnt::io::profile_curve_to_json(curve).dump(2));
  }
  const json config{{"profiles", {"A.json", "B.json"}},
                    {"pool", {{"A", {{"count", 2}, {"memory_capacity", 8}}},
                              {"B", {{"count", 1}, {"memory_capacity", 8}}}}},
                    {"global_batch", 16}};
  spit(dir / "config.json", config.dump(2));
  const auto result = run_vnt("solve --config config.json --json --explain", dir);
  REQUIRE(result.exit_code == 0);
  const json payload = json::parse(result.out);

  vnt::hetero::DevicePool pool;
  pool.entries["A"] = {2, 8};
  pool.entries["B"] = {1, 8};
  const auto oracle = vnt_test::enumerate_assignments(curves, pool, 16);
  CHECK(payload["candidates"].size() == oracle.feasible_count);
  CHECK(payload["assignment"]["predicted_step_time_s"] == *oracle.best_time);
}

TEST_CASE("infeasible solve exits with code 5 and a constraint report") {
  const auto dir = scratch_dir("solve_infeasible");
  vnt::hetero::ProfileCurve curve;
  curve.device_type = "A";
  curve.comm_overhead_s = 0.0;
  curve.points = {{1, 0.001}, {2, 0.002}};
  spit(dir / "A.json", vnt::io::profile_curve_to_json(curve).dump(2));
  const json config{{"profiles", {"A.json"}},
                    {"pool", {{"A", {{"count", 1}, {"memory_capacity", 2}}}}},
                    {"global_batch", 100000},
                    {"max_virtual_nodes", 2}};
  spit(dir / "config.json", config.dump(2));
  const auto result = run_vnt("solve --config config.json", dir);
  CHECK(result.exit_code == 5);
  CHECK(result.err.find("constraint") != std::string::npos);
}

TEST_CASE("sched emits summary, utilization series and CSV deterministically") {
  const auto dir = scratch_dir("sched");
  const json trace = json::array(
      {{{"job_id", "a"}, {"arrival_s", 0.0}, {"priority", 5.0}, {"demand", 2},
        {"workload", {{"model", {{"layer_widths", {4, 8, 4}},
                                 {"activation", "tanh"},
                                 {"loss", "mse"},
                                 {"seed", 1}}},
                      {"global_batch", 64}}},
        {"steps", 500}},
       {{"job_id", "b"}, {"arrival_s", 5.0}, {"priority", 10.0}, {"demand", 4},
        {"workload", {{"model", {{"layer_widths", {4, 8, 4}},
                                 {"activation", "tanh"},
                                 {"loss", "mse"},
                                 {"seed", 2}}},
                      {"global_batch", 64}}},
        {"steps", 300}}});
  spit(dir / "trace.json", trace.dump(2));
  const json config{
      {"trace", "trace.json"},
      {"policy", "wfs"},
      {"cluster", {{"types", json::array({{{"device_type", "G"},
                                           {"fixed_overhead_s", 0.001},
                                           {"per_example_cost_s", 0.001},
                                           {"comm_s", 0.002},
                                           {"memory_capacity", 64},
                                           {"count", 4}}})}}},
      {"summary_out", "summary.json"},
      {"utilization_out", "util.jsonl"},
      {"jobs_csv_out", "jobs.csv"}};
  spit(dir / "config.json", config.dump(2));

  const auto first = run_vnt("sched --config config.json --json", dir);
  REQUIRE(first.exit_code == 0);
  const std::string summary = slurp(dir / "summary.json");
  const std::string util = slurp(dir / "util.jsonl");
  const std::string csv = slurp(dir / "jobs.csv");
  CHECK(!summary.empty());
  CHECK(!util.empty());
  CHECK(csv.find("job_id,") == 0);

  const auto again = run_vnt("sched --config config.json --json", dir);
  CHECK(again.out == first.out);
  CHECK(slurp(dir / "summary.json") == summary);
  CHECK(slurp(dir / "util.jsonl") == util);
  CHECK(slurp(dir / "jobs.csv") == csv);

  // Policy override from the command line.
  const auto fixed = run_vnt("sched --config config.json --json --policy static", dir);
  REQUIRE(fixed.exit_code == 0);
  CHECK(json::parse(fixed.out)["jobs"].size() == 2);
}

TEST_CASE("empty trace yields a zero-job summary with exit 0") {
  const auto dir = scratch_dir("sched_empty");
  spit(dir / "trace.json", "[]");
  const json config{
      {"trace", "trace.json"},
      {"policy", "wfs"},
      {"cluster", {{"types", json::array({{{"device_type", "G"},
                                           {"fixed_overhead_s", 0.001},
                                           {"per_example_cost_s", 0.001},
                                           {"comm_s", 0.002},
                                           {"memory_capacity", 64},
                                           {"count", 4}}})}}}};
  spit(dir / "config.json", config.dump(2));
  const auto result = run_vnt("sched --config config.json --json", dir);
  REQUIRE(result.exit_code == 0);
  const json summary = json::parse(result.out);
  CHECK(summary["jobs"].empty());
  CHECK(summary["makespan_s"] == 0.0);
}

TEST_CASE("gen-trace is deterministic and respects the seed flag") {
  const auto dir = scratch_dir("gen_trace");
  const json config{{"seed", 3}, {"num_jobs", 5}, {"out", "trace.json"}};
  spit(dir / "config.json", config.dump(2));
  REQUIRE(run_vnt("gen-trace --config config.json", dir).exit_code == 0);
  const std::string a = slurp(dir / "trace.json");
  REQUIRE(run_vnt("gen-trace --config config.json", dir).exit_code == 0);
  CHECK(slurp(dir / "trace.json") == a);
  REQUIRE(run_vnt("gen-trace --config config.json --seed 4", dir).exit_code == 0);
  CHECK(slurp(dir / "trace.json") != a);
}

TEST_CASE("a resize schedule in the train config is transparent") {
  const auto dir = scratch_dir("train_resize");
  json resized = base_train_config();
  json small_devices = json::array();
  for (int i = 0; i < 2; ++i) {
    small_devices.push_back({{"device_id", "gpu" + std::to_string(i)},
                             {"device_type", "V100"},
                             {"memory_capacity", 64}});
  }
  resized["resize_schedule"] = json::array(
      {{{"step", 5}, {"devices", small_devices}},
       {{"step", 12}, {"devices", base_train_config()["devices"]}}});
  resized["params_out"] = "params_resized.json";
  resized["metrics_out"] = "metrics_resized.jsonl";
  spit(dir / "resized.json", resized.dump(2));
  spit(dir / "plain.json", base_train_config().dump(2));
  REQUIRE(run_vnt("train --config plain.json", dir).exit_code == 0);
  const auto result = run_vnt(
      "train --config resized.json --json --compare-against params.json", dir);
  REQUIRE(result.exit_code == 0);
  const json summary = json::parse(result.out);
  CHECK(summary["max_divergence"] == 0.0);
  CHECK(summary["bitwise_identical"] == true);
}
