#pragma once

// Host runtime: the OpenCL-like wrapper library. Every forwarded API call
// becomes exactly one ApiCallRequest; bulk buffer content travels as
// chunked DataTransfer frames on the data connection. Buffers are placed
// lazily on the first queue that touches them and migrate host-mediated
// (read from the owner, write to the new node) when another node's queue
// needs them.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "haocl/api.hpp"
#include "haocl/config.hpp"
#include "haocl/net.hpp"
#include "haocl/scheduler.hpp"
#include "haocl/wire.hpp"

namespace haocl {

enum class HandleKind : uint8_t { context, queue, buffer, program, kernel, event };

struct Handle {
  HandleKind kind = HandleKind::event;
  uint64_t id = 0;
  bool operator==(const Handle&) const = default;
};

struct DeviceEntry {
  int global_id = 0;
  std::string node_name;
  Endpoint endpoint;
  uint32_t local_index = 0;
  DeviceModel model;
};

struct GlobalDeviceMap {
  std::vector<DeviceEntry> entries;  // ascending global_id

  const DeviceEntry* find(int global_id) const {
    for (const auto& e : entries)
      if (e.global_id == global_id) return &e;
    return nullptr;
  }
};

// The four measured phases of a run, in milliseconds, plus the modeled
// compute time derived from device throughput parameters.
struct TimingBreakdown {
  double init_ms = 0.0;
  double data_creation_ms = 0.0;
  double transfer_ms = 0.0;
  double compute_ms = 0.0;
  double modeled_compute_ms = 0.0;

  double total() const { return init_ms + data_creation_ms + transfer_ms + compute_ms; }
};

struct TimingFragment {
  double transfer_ms = 0.0;
  double compute_ms = 0.0;   // node-reported kernel wall time
  double modeled_ms = 0.0;   // work_units / (relative_throughput * baseline rate)
};

struct TraceEvent {
  std::string node;
  wire::MsgKind kind = wire::MsgKind::Ping;
  std::string function;     // set for ApiCallRequest
  uint64_t buffer_id = 0;   // set for DataTransfer and buffer-addressed calls
};

class MessageTrace {
 public:
  void record(TraceEvent event);
  std::vector<TraceEvent> events() const;
  size_t count_calls(const std::string& function, const std::string& node = {}) const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::vector<TraceEvent> events_;
};

struct HostOptions {
  net::ConnectOptions connect;
  SchedulerOptions scheduler;
};

class HostContext {
 public:
  // Connects to every configured node, broadcasts DeviceIdRequest, and
  // builds the global device map (config node order, then local device
  // order). No partial context survives a failure.
  static HostContext init(const ClusterConfig& config, const HostOptions& options = {});

  HostContext(HostContext&&) noexcept;
  HostContext& operator=(HostContext&&) noexcept;
  ~HostContext();

  const GlobalDeviceMap& device_map() const;
  std::vector<int> get_device_ids(std::optional<wire::DeviceType> filter = {}) const;

  Handle create_queue(int global_device_id, std::string user_id = "default", bool shared = true);
  Handle create_buffer(uint64_t size);
  Handle create_program(const std::string& bundle);
  Handle create_kernel(Handle program, const std::string& kernel_name);
  void set_kernel_arg(Handle kernel, uint32_t index, wire::TypedValue value);
  void set_kernel_arg(Handle kernel, uint32_t index, Handle buffer);

  Handle enqueue_write_buffer(Handle queue, Handle buffer, std::span<const uint8_t> data);
  std::vector<uint8_t> enqueue_read_buffer(Handle queue, Handle buffer);
  Handle enqueue_ndrange_kernel(Handle queue, Handle kernel,
                                std::array<uint64_t, 3> global_size = {1, 1, 1},
                                uint32_t dims = 1);

  // Auto-placed submission; returns the chosen device for observability.
  std::pair<int, Handle> submit_task(const KernelTask& task);

  // Launches a prebuilt task on an existing queue (the task's user/shared
  // metadata rides along; placement is the queue's device).
  Handle launch_task(Handle queue, const KernelTask& task);

  // Blocks until everything enqueued on the queue has its response (all
  // forwarded calls are synchronous) and drains the queue's accumulated
  // transfer/compute fragment.
  TimingFragment finish(Handle queue);

  void release(Handle handle);

  TimingBreakdown breakdown() const;
  void add_data_creation_ms(double ms);

  MessageTrace& trace();
  Scheduler& scheduler();

  uint64_t buffer_size(Handle buffer) const;

  // Sends Shutdown to every node and closes all channels.
  void shutdown_nodes();

 private:
  HostContext();
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace haocl
