#include "haocl/scheduler.hpp"

#include <atomic>
#include <limits>

#include "haocl/error.hpp"

namespace haocl {

DeviceState* ClusterState::find(int global_id) {
  for (auto& d : devices)
    if (d.global_id == global_id) return &d;
  return nullptr;
}

const DeviceState* ClusterState::find(int global_id) const {
  for (const auto& d : devices)
    if (d.global_id == global_id) return &d;
  return nullptr;
}

Scheduler::Scheduler(SchedulerOptions options, std::map<std::string, int> kernel_map)
    : options_(options),
      kernel_map_(std::move(kernel_map)),
      round_robin_counter_(std::make_shared<std::atomic<uint64_t>>(0)) {
  register_builtins();
}

void Scheduler::configure(SchedulerOptions options, std::map<std::string, int> kernel_map) {
  std::lock_guard lock(mutex_);
  options_ = options;
  kernel_map_ = std::move(kernel_map);
  policies_.clear();
  round_robin_counter_->store(0);
  register_builtins();
}

double Scheduler::modeled_cost(const DeviceState& device, const std::string& kernel_name,
                               const TaskEstimate& estimate, const SchedulerOptions& options,
                               bool inputs_resident) {
  double rate = device.model.relative_throughput * options.baseline_rate;
  auto it = device.profiled_rate.find(kernel_name);
  if (it != device.profiled_rate.end()) rate = it->second;
  double cost = estimate.work_units / rate;
  if (!inputs_resident)
    cost += static_cast<double>(estimate.in_bytes + estimate.out_bytes) / options.net_bandwidth;
  return cost;
}

void Scheduler::register_builtins() {
  policies_["user_directed"] = [](const KernelTask& task, const ClusterState& state,
                                  const TaskEstimate&) {
    if (task.placement.mode != Placement::Mode::explicit_device)
      fail(ErrorCode::policy, "user_directed requires an explicit device id");
    if (!state.find(task.placement.device_id))
      fail(ErrorCode::unknown_device,
           "device " + std::to_string(task.placement.device_id) + " not in the cluster");
    return task.placement.device_id;
  };

  auto counter = round_robin_counter_;
  policies_["round_robin"] = [counter](const KernelTask&, const ClusterState& state,
                                       const TaskEstimate&) {
    if (state.devices.empty()) fail(ErrorCode::precondition, "no devices");
    uint64_t turn = counter->fetch_add(1);
    return state.devices[turn % state.devices.size()].global_id;
  };

  auto table = kernel_map_;
  policies_["static_map"] = [table](const KernelTask& task, const ClusterState& state,
                                    const TaskEstimate&) {
    auto it = table.find(task.kernel_name);
    if (it == table.end())
      fail(ErrorCode::mapping, "static_map has no entry for kernel '" + task.kernel_name + "'");
    if (!state.find(it->second))
      fail(ErrorCode::unknown_device, "static_map entry for '" + task.kernel_name +
                                          "' names unknown device " + std::to_string(it->second));
    return it->second;
  };

  auto options = options_;
  policies_["cost_model"] = [options](const KernelTask& task, const ClusterState& state,
                                      const TaskEstimate& estimate) {
    if (state.devices.empty()) fail(ErrorCode::precondition, "no devices");
    std::vector<uint64_t> input_buffers;
    for (const auto& arg : task.args)
      if (arg.tag() == wire::TypedValue::Tag::handle) input_buffers.push_back(arg.as_handle());

    int best_id = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& device : state.devices) {
      bool resident = true;
      for (uint64_t id : input_buffers)
        if (!device.resident_buffers.count(id)) {
          resident = false;
          break;
        }
      double cost = modeled_cost(device, task.kernel_name, estimate, options, resident);
      // strict < keeps the smallest global_id on ties (devices are in id order)
      if (cost < best_cost) {
        best_cost = cost;
        best_id = device.global_id;
      }
    }
    return best_id;
  };
}

void Scheduler::register_policy(const std::string& name, PolicyFn policy) {
  std::lock_guard lock(mutex_);
  if (policies_.count(name))
    fail(ErrorCode::registration, "policy '" + name + "' already registered");
  policies_[name] = std::move(policy);
}

bool Scheduler::has_policy(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return policies_.count(name) > 0;
}

int Scheduler::schedule(const KernelTask& task, const TaskEstimate& estimate) {
  std::lock_guard lock(mutex_);
  if (state_.devices.empty()) fail(ErrorCode::precondition, "scheduler has no devices");
  std::string policy_name = task.placement.mode == Placement::Mode::explicit_device
                                ? "user_directed"
                                : task.placement.policy;
  auto it = policies_.find(policy_name);
  if (it == policies_.end()) fail(ErrorCode::policy, "unknown policy '" + policy_name + "'");
  int chosen = it->second(task, state_, estimate);
  if (!state_.find(chosen))
    fail(ErrorCode::internal, "policy '" + policy_name + "' chose device " +
                                  std::to_string(chosen) + " outside the device map");
  return chosen;
}

void Scheduler::record_profile(int global_id, const std::string& kernel_name,
                               double work_units, double observed_seconds) {
  if (!(observed_seconds > 0.0))
    fail(ErrorCode::precondition, "observed_compute_seconds must be > 0");
  std::lock_guard lock(mutex_);
  DeviceState* device = state_.find(global_id);
  if (!device) fail(ErrorCode::unknown_device, "device " + std::to_string(global_id));
  double sample = work_units / observed_seconds;
  auto it = device->profiled_rate.find(kernel_name);
  if (it == device->profiled_rate.end())
    device->profiled_rate[kernel_name] = sample;
  else
    it->second = options_.ema_alpha * sample + (1.0 - options_.ema_alpha) * it->second;
}

void Scheduler::sync_devices(const std::vector<std::pair<int, DeviceModel>>& devices) {
  std::lock_guard lock(mutex_);
  state_.devices.clear();
  for (const auto& [id, model] : devices) {
    DeviceState d;
    d.global_id = id;
    d.model = model;
    state_.devices.push_back(std::move(d));
  }
}

void Scheduler::note_dispatch(int global_id) {
  std::lock_guard lock(mutex_);
  if (DeviceState* d = state_.find(global_id)) d->outstanding_tasks++;
}

void Scheduler::note_complete(int global_id) {
  std::lock_guard lock(mutex_);
  if (DeviceState* d = state_.find(global_id))
    d->outstanding_tasks = std::max(0, d->outstanding_tasks - 1);
}

void Scheduler::note_resident(uint64_t buffer_id, const std::vector<int>& device_ids) {
  std::lock_guard lock(mutex_);
  for (auto& d : state_.devices) d.resident_buffers.erase(buffer_id);
  for (int id : device_ids)
    if (DeviceState* d = state_.find(id)) d->resident_buffers.insert(buffer_id);
}

void Scheduler::drop_resident(uint64_t buffer_id) {
  std::lock_guard lock(mutex_);
  for (auto& d : state_.devices) d.resident_buffers.erase(buffer_id);
}

ClusterState Scheduler::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_;
}

}  // namespace haocl
