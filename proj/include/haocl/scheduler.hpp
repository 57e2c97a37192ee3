#pragma once

// Pluggable task placement. Ships four built-in policies:
//   user_directed : pass-through of the task's explicit device id (default)
//   round_robin   : cyclic over ascending global ids, starting at 0
//   static_map    : config-supplied kernel_name -> global_id table
//   cost_model    : argmin of work/rate + bytes/bandwidth over devices,
//                   rates fed by exponentially averaged runtime profiles

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "haocl/api.hpp"
#include "haocl/config.hpp"

namespace haocl {

struct TaskEstimate {
  double work_units = 1.0;
  uint64_t in_bytes = 0;   // moved only if inputs are not resident on the candidate
  uint64_t out_bytes = 0;
};

struct DeviceState {
  int global_id = 0;
  DeviceModel model;
  int outstanding_tasks = 0;
  std::map<std::string, double> profiled_rate;  // kernel -> EMA work-units/s
  std::set<uint64_t> resident_buffers;
};

struct ClusterState {
  std::vector<DeviceState> devices;

  DeviceState* find(int global_id);
  const DeviceState* find(int global_id) const;
};

struct SchedulerOptions {
  double baseline_rate = kBaselineWorkRate;  // work-units/s at relative_throughput 1.0
  double net_bandwidth = 1e8;                // bytes/s charged for non-resident data
  double ema_alpha = 0.3;
};

class Scheduler {
 public:
  using PolicyFn =
      std::function<int(const KernelTask&, const ClusterState&, const TaskEstimate&)>;

  explicit Scheduler(SchedulerOptions options = {},
                     std::map<std::string, int> kernel_map = {});

  // Resets options, the static_map table, and the policy registry (back to
  // the built-ins). Registered custom policies are dropped.
  void configure(SchedulerOptions options, std::map<std::string, int> kernel_map);

  // Duplicate names (including the built-ins) are a registration error.
  void register_policy(const std::string& name, PolicyFn policy);
  bool has_policy(const std::string& name) const;

  int schedule(const KernelTask& task, const TaskEstimate& estimate);

  // EMA rate update from an observed execution.
  void record_profile(int global_id, const std::string& kernel_name,
                      double work_units, double observed_seconds);

  // Bookkeeping called by the host runtime.
  void sync_devices(const std::vector<std::pair<int, DeviceModel>>& devices);
  void note_dispatch(int global_id);
  void note_complete(int global_id);
  void note_resident(uint64_t buffer_id, const std::vector<int>& device_ids);
  void drop_resident(uint64_t buffer_id);

  ClusterState snapshot() const;
  const SchedulerOptions& options() const { return options_; }

  // The published cost formula, exposed so callers can hand-evaluate it.
  static double modeled_cost(const DeviceState& device, const std::string& kernel_name,
                             const TaskEstimate& estimate, const SchedulerOptions& options,
                             bool inputs_resident);

 private:
  void register_builtins();

  SchedulerOptions options_;
  std::map<std::string, int> kernel_map_;
  std::map<std::string, PolicyFn> policies_;
  std::shared_ptr<std::atomic<uint64_t>> round_robin_counter_;
  mutable std::mutex mutex_;
  ClusterState state_;
};

}  // namespace haocl
