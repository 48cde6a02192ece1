// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "vnt/elastic.hpp"
#include "vnt/hetero.hpp"
#include "vnt/model.hpp"
#include "vnt/sched.hpp"
#include "vnt/virtual_exec.hpp"

namespace vnt::io {

using json = nlohmann::json;

// Strict object access: every key must be known, every required key present.
class ObjectReader {
 public:
  ObjectReader(const json& value, std::string context);

  const json& require(const std::string& key);
  const json* optional(const std::string& key);
  // Throws ConfigError when unknown keys remain.
  void done() const;

 private:
  const json& value_;
  std::string context_;
  std::set<std::string> visited_;
};

json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

json model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const json& j);

json device_spec_to_json(const DeviceSpec& device);
DeviceSpec device_spec_from_json(const json& j);

json params_to_json(const ParamVector& params);
ParamVector params_from_json(const json& j);

std::string step_metrics_jsonl(const StepMetrics& metrics);

json profile_curve_to_json(const hetero::ProfileCurve& curve);
hetero::ProfileCurve profile_curve_from_json(const json& j);

json assignment_to_json(const hetero::HeteroAssignment& assignment);
hetero::HeteroAssignment assignment_from_json(const json& j);

json cost_model_to_json(const hetero::DeviceCostModel& model);
hetero::DeviceCostModel cost_model_from_json(const json& j);

std::vector<elastic::ResizePoint> resize_schedule_from_json(const json& j);
json resize_schedule_to_json(const std::vector<elastic::ResizePoint>& schedule);
std::string divergence_jsonl(const elastic::DivergenceRecord& record);

json job_to_json(const sched::Job& job);
sched::Job job_from_json(const json& j);
json trace_to_json(const std::vector<sched::Job>& trace);
std::vector<sched::Job> trace_from_json(const json& j);

json cluster_to_json(const sched::Cluster& cluster);
sched::Cluster cluster_from_json(const json& j);

json trace_metrics_summary(const sched::TraceMetrics& metrics);
std::string utilization_jsonl(const sched::TraceMetrics& metrics);
std::string per_job_csv(const sched::TraceMetrics& metrics);

}  // namespace vnt::io
