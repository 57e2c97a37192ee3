#include "haocl/daemon.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <ostream>

#include "haocl/api.hpp"
#include "haocl/error.hpp"
#include "haocl/kernels.hpp"

namespace haocl {

using wire::ApiCallBody;
using wire::ApiResultBody;
using wire::TypedValue;

// ---------------------------------------------------------------------------
// BufferStore

std::optional<uint64_t> BufferStore::put_chunk(const wire::DataPackage& pkg) {
  if (pkg.offset + pkg.payload.size() > pkg.total_len)
    fail(ErrorCode::malformed, "chunk exceeds total_len");
  std::lock_guard lock(mutex_);
  Entry& entry = entries_[pkg.buffer_id];
  if (!entry.session_active) {
    entry.session_active = true;
    entry.session_total = pkg.total_len;
    entry.received.clear();
    if (entry.bytes.size() < pkg.total_len) entry.bytes.resize(pkg.total_len, 0);
  }
  if (pkg.total_len != entry.session_total)
    fail(ErrorCode::reassembly_conflict, "total_len changed mid-transfer for buffer " +
                                             std::to_string(pkg.buffer_id));

  uint64_t begin = pkg.offset;
  uint64_t end = pkg.offset + pkg.payload.size();
  for (const auto& [lo, hi] : entry.received) {
    uint64_t olo = std::max(begin, lo);
    uint64_t ohi = std::min(end, hi);
    if (olo < ohi &&
        std::memcmp(entry.bytes.data() + olo, pkg.payload.data() + (olo - begin), ohi - olo) != 0)
      fail(ErrorCode::reassembly_conflict,
           "overlapping chunk with different bytes in buffer " + std::to_string(pkg.buffer_id));
  }
  if (end > begin)
    std::memcpy(entry.bytes.data() + begin, pkg.payload.data(), pkg.payload.size());

  if (end > begin) {
    entry.received.emplace_back(begin, end);
    std::sort(entry.received.begin(), entry.received.end());
    std::vector<std::pair<uint64_t, uint64_t>> merged;
    for (const auto& iv : entry.received) {
      if (!merged.empty() && iv.first <= merged.back().second)
        merged.back().second = std::max(merged.back().second, iv.second);
      else
        merged.push_back(iv);
    }
    entry.received = std::move(merged);
  }

  bool covered = entry.session_total == 0 ||
                 (entry.received.size() == 1 && entry.received[0].first == 0 &&
                  entry.received[0].second == entry.session_total);
  if (!covered) return std::nullopt;
  entry.session_active = false;
  entry.received.clear();
  return entry.session_total;
}

void BufferStore::alloc(uint64_t id, uint64_t size) {
  std::lock_guard lock(mutex_);
  Entry& entry = entries_[id];
  if (entry.bytes.size() < size) entry.bytes.resize(size, 0);
}

bool BufferStore::exists(uint64_t id) const {
  std::lock_guard lock(mutex_);
  return entries_.count(id) > 0;
}

bool BufferStore::complete(uint64_t id) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(id);
  return it != entries_.end() && !it->second.session_active;
}

std::vector<uint8_t> BufferStore::read(uint64_t id) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(id);
  if (it == entries_.end())
    fail(ErrorCode::precondition, "buffer " + std::to_string(id) + " not in store");
  if (it->second.session_active)
    fail(ErrorCode::precondition, "buffer " + std::to_string(id) + " is mid-reassembly");
  return it->second.bytes;
}

void BufferStore::put_complete(uint64_t id, std::vector<uint8_t> bytes) {
  std::lock_guard lock(mutex_);
  Entry& entry = entries_[id];
  entry.bytes = std::move(bytes);
  entry.session_active = false;
  entry.received.clear();
}

void BufferStore::release(uint64_t id) {
  std::lock_guard lock(mutex_);
  entries_.erase(id);
}

size_t BufferStore::count() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// LeaseTable

LeaseTable::LeaseTable(size_t device_count) : leases_(device_count) {}

void LeaseTable::acquire(uint32_t device, const std::string& user, bool shared) {
  std::lock_guard lock(mutex_);
  if (device >= leases_.size()) fail(ErrorCode::unknown_device, "local device " + std::to_string(device));
  Lease& lease = leases_[device];
  if (lease.active == 0) {
    lease = Lease{1, user, shared};
    return;
  }
  if (lease.user == user) {
    lease.active++;
    return;
  }
  if (lease.shared && shared) {
    lease.active++;
    return;
  }
  fail(ErrorCode::busy, "device " + std::to_string(device) + " held by user '" + lease.user + "'");
}

void LeaseTable::release(uint32_t device) {
  std::lock_guard lock(mutex_);
  Lease& lease = leases_[device];
  if (lease.active > 0 && --lease.active == 0) lease = Lease{};
}

// ---------------------------------------------------------------------------
// NodeDaemon

NodeDaemon::NodeDaemon(const Endpoint& endpoint, std::vector<DeviceModel> devices,
                       DaemonOptions options)
    : endpoint_(endpoint),
      devices_(std::move(devices)),
      options_(std::move(options)),
      leases_(devices_.size()) {
  if (devices_.empty()) fail(ErrorCode::config, "daemon needs at least one device");
  for (size_t i = 0; i < devices_.size(); ++i)
    device_mutexes_.push_back(std::make_unique<std::mutex>());

  dispatch_table_["alloc_buffer"] = &NodeDaemon::call_alloc_buffer;
  dispatch_table_["read_buffer"] = &NodeDaemon::call_read_buffer;
  dispatch_table_["release_object"] = &NodeDaemon::call_release_object;
  dispatch_table_["query_registry"] = &NodeDaemon::call_query_registry;
  dispatch_table_["launch_kernel"] = &NodeDaemon::do_launch;

  // Startup self-test: the table must cover exactly the forwardable set.
  for (std::string_view op : kForwardableOps)
    if (!dispatch_table_.count(op))
      fail(ErrorCode::internal, std::string("dispatch table misses '") + std::string(op) + "'");
  if (dispatch_table_.size() != kForwardableOps.size())
    fail(ErrorCode::internal, "dispatch table has extra entries");

  server_ = std::make_unique<net::Server>(endpoint_,
                                          [this](const wire::Message& m) { return handle(m); });
}

NodeDaemon::~NodeDaemon() = default;

void NodeDaemon::request_stop() { server_->request_stop(); }

void NodeDaemon::wait() { server_->wait(); }

void NodeDaemon::log_call(uint64_t call_id, const std::string& function,
                          const std::string& device, const std::string& status,
                          double elapsed_ms) {
  if (!options_.log) return;
  std::lock_guard lock(log_mutex_);
  *options_.log << call_id << " " << function << " " << device << " " << status << " "
                << elapsed_ms << "\n";
  options_.log->flush();
}

std::optional<wire::Message> NodeDaemon::handle(const wire::Message& msg) {
  switch (msg.kind) {
    case wire::MsgKind::DeviceIdRequest: {
      wire::DeviceListBody list;
      for (size_t i = 0; i < devices_.size(); ++i)
        list.devices.push_back({static_cast<uint32_t>(i), devices_[i].type,
                                devices_[i].relative_throughput});
      return wire::Message{wire::kProtocolVersion, wire::MsgKind::DeviceIdResponse, msg.call_id,
                           std::move(list)};
    }
    case wire::MsgKind::DataTransfer: {
      const auto& pkg = std::get<wire::DataPackage>(msg.body);
      auto completed = store_.put_chunk(pkg);
      if (!completed) return std::nullopt;  // ack only the completing chunk
      return wire::Message{wire::kProtocolVersion, wire::MsgKind::DataAck, msg.call_id,
                           wire::DataAckBody{pkg.buffer_id, *completed}};
    }
    case wire::MsgKind::ApiCallRequest: {
      const auto& call = std::get<ApiCallBody>(msg.body);
      auto started = std::chrono::steady_clock::now();
      std::string device = "-";
      try {
        ApiResultBody result = dispatch(call, device);
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - started).count();
        log_call(msg.call_id, call.function_name, device, "ok", ms);
        return wire::Message{wire::kProtocolVersion, wire::MsgKind::ApiCallResponse, msg.call_id,
                             std::move(result)};
      } catch (const Error& e) {
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - started).count();
        log_call(msg.call_id, call.function_name, device, error_code_name(e.code()), ms);
        throw;
      }
    }
    case wire::MsgKind::Shutdown:
      log_call(msg.call_id, "shutdown", "-", "ok", 0.0);
      server_->request_stop();
      return std::nullopt;
    default:
      fail(ErrorCode::malformed, std::string("unexpected message kind ") +
                                     wire::msg_kind_name(msg.kind));
  }
}

wire::ApiResultBody NodeDaemon::dispatch(const ApiCallBody& call, std::string& device_label) {
  auto it = dispatch_table_.find(call.function_name);
  if (it == dispatch_table_.end())
    fail(ErrorCode::unknown_call, "unknown-call '" + call.function_name + "'");
  return (this->*(it->second))(call, device_label);
}

wire::ApiResultBody NodeDaemon::call_alloc_buffer(const ApiCallBody& call, std::string&) {
  if (call.args.size() != 2) fail(ErrorCode::argument, "alloc_buffer expects (id, size)");
  uint64_t id = call.args[0].as_handle();
  int64_t size = call.args[1].as_i64();
  if (size < 0) fail(ErrorCode::argument, "alloc_buffer: negative size");
  store_.alloc(id, static_cast<uint64_t>(size));
  return {};
}

wire::ApiResultBody NodeDaemon::call_read_buffer(const ApiCallBody& call, std::string&) {
  if (call.args.size() != 1) fail(ErrorCode::argument, "read_buffer expects (id)");
  auto bytes = store_.read(call.args[0].as_handle());
  ApiResultBody body;
  body.results.push_back(TypedValue::of_bytes(std::move(bytes)));
  return body;
}

wire::ApiResultBody NodeDaemon::call_release_object(const ApiCallBody& call, std::string&) {
  if (call.args.size() != 1) fail(ErrorCode::argument, "release_object expects (id)");
  store_.release(call.args[0].as_handle());
  return {};
}

wire::ApiResultBody NodeDaemon::call_query_registry(const ApiCallBody& call, std::string&) {
  if (call.args.size() != 1) fail(ErrorCode::argument, "query_registry expects (bundle)");
  const std::string& bundle = call.args[0].as_string();
  if (!kernels::bundle_exists(bundle))
    fail(ErrorCode::name, "unknown bundle '" + bundle + "' (available: core)");
  std::vector<RegistryEntry> entries;
  for (const auto& sig : kernels::core_kernels())
    entries.push_back({sig.name, static_cast<uint32_t>(sig.arity())});
  return make_registry_reply(entries);
}

wire::ApiResultBody NodeDaemon::do_launch(const ApiCallBody& call, std::string& device_label) {
  LaunchRequest req = parse_launch_kernel(call);
  if (req.local_device >= devices_.size())
    fail(ErrorCode::unknown_device, "local device " + std::to_string(req.local_device));
  device_label = std::to_string(req.local_device);

  const auto* sig = kernels::find_kernel(kernels::kCoreBundle, req.task.kernel_name);
  if (!sig) fail(ErrorCode::name, "unknown kernel '" + req.task.kernel_name + "'");
  if (req.task.args.size() != sig->arity())
    fail(ErrorCode::argument, req.task.kernel_name + ": arity mismatch");

  // Copy inputs out of the store so concurrent transfers to other buffers
  // never race with a running kernel.
  std::vector<std::vector<uint8_t>> scratch(sig->arity());
  std::vector<kernels::BoundArg> bound(sig->arity());
  std::vector<std::pair<uint64_t, size_t>> outputs;  // buffer id -> scratch slot
  for (size_t i = 0; i < sig->arity(); ++i) {
    const TypedValue& arg = req.task.args[i];
    switch (sig->args[i]) {
      case kernels::ArgKind::scalar_i64:
        if (arg.tag() == TypedValue::Tag::i64)
          bound[i] = kernels::BoundArg::of_scalar(arg.as_i64());
        else if (arg.tag() == TypedValue::Tag::i32)
          bound[i] = kernels::BoundArg::of_scalar(arg.as_i32());
        else
          fail(ErrorCode::argument, req.task.kernel_name + ": argument " + std::to_string(i) +
                                        " must be an integer scalar");
        break;
      case kernels::ArgKind::buffer_in: {
        if (arg.tag() != TypedValue::Tag::handle)
          fail(ErrorCode::argument, req.task.kernel_name + ": argument " + std::to_string(i) +
                                        " must be a buffer handle");
        uint64_t id = arg.as_handle();
        if (!store_.exists(id) || !store_.complete(id))
          fail(ErrorCode::precondition, "input buffer " + std::to_string(id) + " not complete");
        scratch[i] = store_.read(id);
        bound[i] = kernels::BoundArg::of_buffer(&scratch[i]);
        break;
      }
      case kernels::ArgKind::buffer_out: {
        if (arg.tag() != TypedValue::Tag::handle)
          fail(ErrorCode::argument, req.task.kernel_name + ": argument " + std::to_string(i) +
                                        " must be a buffer handle");
        outputs.emplace_back(arg.as_handle(), i);
        bound[i] = kernels::BoundArg::of_buffer(&scratch[i]);
        break;
      }
    }
  }

  leases_.acquire(req.local_device, req.task.user_id, req.task.shared_flag);
  uint64_t work = 0;
  double compute_seconds = 0.0;
  try {
    std::lock_guard device_lock(*device_mutexes_[req.local_device]);
    auto started = std::chrono::steady_clock::now();
    work = kernels::execute(req.task.kernel_name, bound, options_.threads_per_device);
    compute_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  } catch (...) {
    leases_.release(req.local_device);
    throw;
  }
  leases_.release(req.local_device);

  for (auto& [id, slot] : outputs) store_.put_complete(id, std::move(scratch[slot]));

  double modeled_seconds = static_cast<double>(work) /
                           (devices_[req.local_device].relative_throughput * kBaselineWorkRate);
  ApiResultBody body;
  body.results.push_back(TypedValue::of_f64(compute_seconds));
  body.results.push_back(TypedValue::of_f64(modeled_seconds));
  body.results.push_back(TypedValue::of_i64(static_cast<int64_t>(work)));
  return body;
}

void run_daemon(const Endpoint& endpoint, std::vector<DeviceModel> devices,
                DaemonOptions options) {
  NodeDaemon daemon(endpoint, std::move(devices), std::move(options));
  daemon.wait();
}

}  // namespace haocl
