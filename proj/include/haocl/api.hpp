#pragma once

// The forwarded-call contract shared by the host runtime and the node
// daemons: the closed set of forwardable operation names, the KernelTask
// unit, and the marshalling of a launch into an ApiCallRequest.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "haocl/wire.hpp"

namespace haocl {

// Host API operations that are forwarded to node daemons as
// ApiCallRequests. The daemon dispatch table must cover exactly this set.
inline constexpr std::array<std::string_view, 5> kForwardableOps = {
    "alloc_buffer", "read_buffer", "launch_kernel", "release_object", "query_registry",
};

// Work-units/s of a cpu-typed device with relative_throughput 1.0. Used
// for modeled execution times and as the unprofiled cost-model rate.
inline constexpr double kBaselineWorkRate = 1e9;

struct Placement {
  enum class Mode { explicit_device, auto_policy };
  Mode mode = Mode::explicit_device;
  int device_id = 0;       // explicit_device
  std::string policy;      // auto_policy

  static Placement explicit_on(int global_id) {
    return Placement{Mode::explicit_device, global_id, {}};
  }
  static Placement auto_with(std::string policy) {
    return Placement{Mode::auto_policy, -1, std::move(policy)};
  }
};

// One schedulable kernel launch. Buffer arguments are TypedValue handles
// whose ids name buffers in the owning node's store.
struct KernelTask {
  std::string kernel_name;
  std::vector<wire::TypedValue> args;
  std::array<uint64_t, 3> global_size = {1, 1, 1};
  uint32_t dims = 1;
  std::string user_id = "default";
  bool shared_flag = true;
  Placement placement;
};

// ApiCallRequest bodies for each forwarded operation.
wire::ApiCallBody make_alloc_buffer(uint64_t buffer_id, uint64_t size);
wire::ApiCallBody make_read_buffer(uint64_t buffer_id);
wire::ApiCallBody make_release_object(uint64_t object_id);
wire::ApiCallBody make_query_registry(const std::string& bundle);
wire::ApiCallBody make_launch_kernel(const KernelTask& task, uint32_t local_device);

// Daemon-side unmarshalling of a launch_kernel request.
struct LaunchRequest {
  KernelTask task;
  uint32_t local_device = 0;
};
LaunchRequest parse_launch_kernel(const wire::ApiCallBody& body);

// Kernel bundle listing carried in query_registry responses.
struct RegistryEntry {
  std::string name;
  uint32_t arity = 0;
};
wire::ApiResultBody make_registry_reply(const std::vector<RegistryEntry>& entries);
std::vector<RegistryEntry> parse_registry_reply(const wire::ApiResultBody& body);

}  // namespace haocl
