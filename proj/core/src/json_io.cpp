// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vnt/errors.hpp"

namespace vnt::io {

ObjectReader::ObjectReader(const json& value, std::string context)
    : value_(value), context_(std::move(context)) {
  if (!value_.is_object()) {
    throw ConfigError(context_ + ": expected a JSON object");
  }
}

const json& ObjectReader::require(const std::string& key) {
  const auto it = value_.find(key);
  if (it == value_.end()) {
    throw ConfigError(context_ + ": missing required field '" + key + "'");
  }
  visited_.insert(key);
  return (*it);
}

const json* ObjectReader::optional(const std::string& key) {
  const auto it = value_.find(key);
  if (it == value_.end()) return nullptr;
  visited_.insert(key);
  return &(*it);
}

void ObjectReader::done() const {
  for (const auto& [key, unused] : value_.items()) {
    if (visited_.find(key) == visited_.end()) {
      throw ConfigError(context_ + ": unknown field '" + key + "'");
    }
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json model_spec_to_json(const ModelSpec& spec) {
  return json{{"layer_widths", spec.layer_widths},
              {"activation", to_string(spec.activation)},
              {"loss", to_string(spec.loss)},
              {"seed", spec.seed}};
}

ModelSpec model_spec_from_json(const json& j) {
  ObjectReader reader(j, "workload");
  ModelSpec spec;
  spec.layer_widths = reader.require("layer_widths").get<std::vector<std::size_t>>();
  spec.activation = activation_from_string(reader.require("activation").get<std::string>());
  spec.loss = loss_from_string(reader.require("loss").get<std::string>());
  spec.seed = reader.require("seed").get<std::uint64_t>();
  reader.done();
  spec.validate();
  return spec;
}

json device_spec_to_json(const DeviceSpec& device) {
  return json{{"device_id", device.device_id},
              {"device_type", device.device_type},
              {"memory_capacity", device.memory_capacity}};
}

DeviceSpec device_spec_from_json(const json& j) {
  ObjectReader reader(j, "device");
  DeviceSpec device;
  device.device_id = reader.require("device_id").get<std::string>();
  device.device_type = reader.require("device_type").get<std::string>();
  device.memory_capacity = reader.require("memory_capacity").get<std::size_t>();
  reader.done();
  if (device.device_id.empty()) throw ConfigError("device: empty device_id");
  if (device.memory_capacity == 0) {
    throw ConfigError("device " + device.device_id + ": zero memory_capacity");
  }
  return device;
}

json params_to_json(const ParamVector& params) {
  json layout = json::array();
  for (const LayoutEntry& e : params.layout->entries) {
    layout.push_back(json{{"name", e.name}, {"shape", e.shape}});
  }
  return json{{"layout", layout}, {"values", params.values}};
}

ParamVector params_from_json(const json& j) {
  ObjectReader reader(j, "params");
  const json& layout_json = reader.require("layout");
  auto layout = std::make_shared<Layout>();
  std::size_t offset = 0;
  for (const json& entry : layout_json) {
    ObjectReader er(entry, "params.layout entry");
    LayoutEntry e;
    e.name = er.require("name").get<std::string>();
    e.shape = er.require("shape").get<std::vector<std::size_t>>();
    er.done();
    e.offset = offset;
    e.length = 1;
    for (std::size_t d : e.shape) e.length *= d;
    offset += e.length;
    layout->entries.push_back(std::move(e));
  }
  layout->total = offset;
  ParamVector params;
  params.layout = std::move(layout);
  params.values = reader.require("values").get<std::vector<double>>();
  reader.done();
  if (params.values.size() != params.layout->total) {
    throw ShapeError("params: values length does not match layout");
  }
  return params;
}

std::string step_metrics_jsonl(const StepMetrics& metrics) {
  json per_device = json::array();
  for (const DeviceStepMetrics& d : metrics.per_device) {
    per_device.push_back(json{{"device_id", d.device_id},
                              {"waves", d.waves},
                              {"examples", d.examples},
                              {"peak_resident", d.peak_resident},
                              {"buffer_bytes", d.buffer_bytes}});
  }
  return json{{"step", metrics.step}, {"loss", metrics.loss},
              {"per_device", per_device}}
      .dump();
}

json profile_curve_to_json(const hetero::ProfileCurve& curve) {
  json points = json::array();
  for (const hetero::ProfilePoint& p : curve.points) {
    points.push_back(json{{"batch_size", p.batch_size}, {"step_time_s", p.step_time_s}});
  }
  return json{{"device_type", curve.device_type},
              {"comm_overhead_s", curve.comm_overhead_s},
              {"points", points}};
}

hetero::ProfileCurve profile_curve_from_json(const json& j) {
  ObjectReader reader(j, "profile");
  hetero::ProfileCurve curve;
  curve.device_type = reader.require("device_type").get<std::string>();
  curve.comm_overhead_s = reader.require("comm_overhead_s").get<double>();
  for (const json& point : reader.require("points")) {
    ObjectReader pr(point, "profile point");
    hetero::ProfilePoint p;
    p.batch_size = pr.require("batch_size").get<std::size_t>();
    p.step_time_s = pr.require("step_time_s").get<double>();
    pr.done();
    if (p.batch_size == 0 || !(p.step_time_s > 0)) {
      throw ConfigError("profile point: batch size and step time must be positive");
    }
    curve.points.push_back(p);
  }
  reader.done();
  return curve;
}

json assignment_to_json(const hetero::HeteroAssignment& assignment) {
  json types = json::array();
  for (const hetero::TypeAssignment& t : assignment.types) {
    types.push_back(json{{"device_type", t.device_type},
                         {"count", t.devices_used},
                         {"per_device_batch", t.per_device_batch},
                         {"virtual_nodes", t.virtual_nodes}});
  }
  return json{{"global_batch", assignment.global_batch},
              {"predicted_step_time_s", assignment.predicted_step_time_s},
              {"types", types}};
}

hetero::HeteroAssignment assignment_from_json(const json& j) {
  ObjectReader reader(j, "assignment");
  hetero::HeteroAssignment assignment;
  assignment.global_batch = reader.require("global_batch").get<std::size_t>();
  if (const json* p = reader.optional("predicted_step_time_s")) {
    assignment.predicted_step_time_s = p->get<double>();
  }
  for (const json& t : reader.require("types")) {
    ObjectReader tr(t, "assignment type");
    hetero::TypeAssignment type;
    type.device_type = tr.require("device_type").get<std::string>();
    type.devices_used = tr.require("count").get<std::size_t>();
    type.per_device_batch = tr.require("per_device_batch").get<std::size_t>();
    type.virtual_nodes = tr.require("virtual_nodes").get<std::size_t>();
    tr.done();
    assignment.types.push_back(std::move(type));
  }
  reader.done();
  assignment.validate();
  return assignment;
}

json cost_model_to_json(const hetero::DeviceCostModel& model) {
  return json{{"device_type", model.device_type},
              {"fixed_overhead_s", model.fixed_overhead_s},
              {"per_example_cost_s", model.per_example_cost_s},
              {"comm_s", model.comm_s},
              {"memory_capacity", model.memory_capacity},
              {"first_step_multiplier", model.first_step_multiplier}};
}

hetero::DeviceCostModel cost_model_from_json(const json& j) {
  ObjectReader reader(j, "device model");
  hetero::DeviceCostModel model;
  model.device_type = reader.require("device_type").get<std::string>();
  model.fixed_overhead_s = reader.require("fixed_overhead_s").get<double>();
  model.per_example_cost_s = reader.require("per_example_cost_s").get<double>();
  model.comm_s = reader.require("comm_s").get<double>();
  model.memory_capacity = reader.require("memory_capacity").get<std::size_t>();
  if (const json* m = reader.optional("first_step_multiplier")) {
    model.first_step_multiplier = m->get<double>();
  }
  reader.done();
  model.validate();
  return model;
}

std::vector<elastic::ResizePoint> resize_schedule_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("resize schedule: expected an array");
  std::vector<elastic::ResizePoint> schedule;
  for (const json& entry : j) {
    ObjectReader reader(entry, "resize point");
    elastic::ResizePoint point;
    point.step = reader.require("step").get<std::uint64_t>();
    for (const json& d : reader.require("devices")) {
      point.devices.push_back(device_spec_from_json(d));
    }
    reader.done();
    if (point.devices.empty()) throw ConfigError("resize point: empty device list");
    schedule.push_back(std::move(point));
  }
  return schedule;
}

json resize_schedule_to_json(const std::vector<elastic::ResizePoint>& schedule) {
  json out = json::array();
  for (const elastic::ResizePoint& p : schedule) {
    json devices = json::array();
    for (const DeviceSpec& d : p.devices) devices.push_back(device_spec_to_json(d));
    out.push_back(json{{"step", p.step}, {"devices", devices}});
  }
  return out;
}

std::string divergence_jsonl(const elastic::DivergenceRecord& record) {
  return json{{"step", record.step}, {"max_divergence", record.max_divergence}}.dump();
}

json job_to_json(const sched::Job& job) {
  return json{{"job_id", job.job_id},
              {"arrival_s", job.arrival_s},
              {"priority", job.priority},
              {"demand", job.demand},
              {"workload", json{{"model", model_spec_to_json(job.workload.model)},
                                {"global_batch", job.workload.global_batch}}},
              {"steps", job.workload.total_steps}};
}

sched::Job job_from_json(const json& j) {
  ObjectReader reader(j, "job");
  sched::Job job;
  job.job_id = reader.require("job_id").get<std::string>();
  job.arrival_s = reader.require("arrival_s").get<double>();
  job.priority = reader.require("priority").get<double>();
  job.demand = reader.require("demand").get<std::size_t>();
  ObjectReader wl(reader.require("workload"), "job workload");
  job.workload.model = model_spec_from_json(wl.require("model"));
  job.workload.global_batch = wl.require("global_batch").get<std::size_t>();
  wl.done();
  job.workload.total_steps = reader.require("steps").get<std::size_t>();
  reader.done();
  job.validate();
  return job;
}

json trace_to_json(const std::vector<sched::Job>& trace) {
  json out = json::array();
  for (const sched::Job& job : trace) out.push_back(job_to_json(job));
  return out;
}

std::vector<sched::Job> trace_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("trace: expected an array of jobs");
  std::vector<sched::Job> trace;
  for (const json& job : j) trace.push_back(job_from_json(job));
  return trace;
}

json cluster_to_json(const sched::Cluster& cluster) {
  json types = json::array();
  for (const sched::ClusterType& t : cluster.types) {
    json entry = cost_model_to_json(t.cost);
    entry["count"] = t.count;
    types.push_back(std::move(entry));
  }
  return json{{"types", types}};
}

sched::Cluster cluster_from_json(const json& j) {
  ObjectReader reader(j, "cluster");
  sched::Cluster cluster;
  for (const json& t : reader.require("types")) {
    ObjectReader tr(t, "cluster type");
    sched::ClusterType type;
    type.cost.device_type = tr.require("device_type").get<std::string>();
    type.cost.fixed_overhead_s = tr.require("fixed_overhead_s").get<double>();
    type.cost.per_example_cost_s = tr.require("per_example_cost_s").get<double>();
    type.cost.comm_s = tr.require("comm_s").get<double>();
    type.cost.memory_capacity = tr.require("memory_capacity").get<std::size_t>();
    if (const json* m = tr.optional("first_step_multiplier")) {
      type.cost.first_step_multiplier = m->get<double>();
    }
    type.count = tr.require("count").get<std::size_t>();
    tr.done();
    cluster.types.push_back(std::move(type));
  }
  reader.done();
  cluster.validate();
  return cluster;
}

json trace_metrics_summary(const sched::TraceMetrics& metrics) {
  json jobs = json::array();
  for (const sched::JobMetrics& j : metrics.jobs) {
    jobs.push_back(json{{"job_id", j.job_id},
                        {"priority", j.priority},
                        {"demand", j.demand},
                        {"arrival_s", j.arrival_s},
                        {"first_alloc_s", j.first_alloc_s},
                        {"completion_s", j.completion_s},
                        {"queueing_delay_s", j.queueing_delay()},
                        {"jct_s", j.jct()},
                        {"steps", j.steps_total}});
  }
  return json{{"makespan_s", metrics.makespan},
              {"mean_utilization", metrics.mean_utilization},
              {"median_jct_s", metrics.median_jct()},
              {"median_queueing_delay_s", metrics.median_queueing_delay()},
              {"mixed_allocation_grants", metrics.mixed_allocation_grants},
              {"jobs", jobs}};
}

std::string utilization_jsonl(const sched::TraceMetrics& metrics) {
  std::string out;
  for (const sched::UtilizationSample& s : metrics.utilization) {
    out += json{{"begin_s", s.begin_s},
                {"end_s", s.end_s},
                {"busy_fraction", s.busy_fraction}}
               .dump();
    out += '\n';
  }
  return out;
}

std::string per_job_csv(const sched::TraceMetrics& metrics) {
  std::string out =
      "job_id,priority,demand,arrival_s,first_alloc_s,completion_s,"
      "queueing_delay_s,jct_s,steps\n";
  for (const sched::JobMetrics& j : metrics.jobs) {
    out += j.job_id + ',' + json(j.priority).dump() + ',' +
           std::to_string(j.demand) + ',' + json(j.arrival_s).dump() + ',' +
           json(j.first_alloc_s).dump() + ',' + json(j.completion_s).dump() + ',' +
           json(j.queueing_delay()).dump() + ',' + json(j.jct()).dump() + ',' +
           std::to_string(j.steps_total) + '\n';
  }
  return out;
}

}  // namespace vnt::io
