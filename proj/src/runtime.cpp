#include "haocl/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>

#include "haocl/error.hpp"
#include "haocl/kernels.hpp"

namespace haocl {

using Clock = std::chrono::steady_clock;
using wire::Message;
using wire::MsgKind;
using wire::TypedValue;

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Message api_call(wire::ApiCallBody body) {
  return Message{wire::kProtocolVersion, MsgKind::ApiCallRequest, 0, std::move(body)};
}

}  // namespace

// ---------------------------------------------------------------------------
// MessageTrace

void MessageTrace::record(TraceEvent event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<TraceEvent> MessageTrace::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

size_t MessageTrace::count_calls(const std::string& function, const std::string& node) const {
  std::lock_guard lock(mutex_);
  size_t n = 0;
  for (const auto& e : events_)
    if (e.kind == MsgKind::ApiCallRequest && e.function == function &&
        (node.empty() || e.node == node))
      ++n;
  return n;
}

void MessageTrace::clear() {
  std::lock_guard lock(mutex_);
  events_.clear();
}

// ---------------------------------------------------------------------------
// HostContext internals
//
// Locking: tables_mutex guards the handle tables and is never held across
// channel I/O. Each queue's mutex serializes that queue's operations
// (including its I/O); per-node control channels have their own mutex.
// Concurrent operations on the same buffer from different queues are the
// caller's responsibility, as in the OpenCL model this mirrors.

struct HostContext::Impl {
  struct NodeLink {
    std::string name;
    Endpoint endpoint;
    net::Channel channel;
    std::mutex mutex;
  };

  struct BufferRec {
    uint64_t size = 0;
    std::optional<std::string> owner;
    std::set<std::string> allocated_on;
    bool valid = true;
  };

  struct QueueRec {
    int device_gid = 0;
    std::string node;
    uint32_t local_index = 0;
    std::string user_id;
    bool shared = true;
    net::Channel channel;
    std::mutex mutex;
    double transfer_ms = 0.0;
    double compute_ms = 0.0;
    double modeled_ms = 0.0;
  };

  struct ProgramRec {
    std::string bundle;
    std::vector<RegistryEntry> kernels;
  };

  struct KernelRec {
    uint64_t program_id = 0;
    std::string name;
    uint32_t arity = 0;
    std::map<uint32_t, TypedValue> args;
  };

  ClusterConfig config;
  HostOptions options;
  GlobalDeviceMap device_map;
  std::vector<std::unique_ptr<NodeLink>> nodes;
  Scheduler scheduler;
  MessageTrace trace;

  mutable std::mutex tables_mutex;
  std::map<uint64_t, BufferRec> buffers;
  std::map<uint64_t, std::unique_ptr<QueueRec>> queues;
  std::map<uint64_t, ProgramRec> programs;
  std::map<uint64_t, KernelRec> kernels;
  std::set<uint64_t> events;
  std::map<int, uint64_t> internal_queues;

  std::atomic<uint64_t> next_handle{1};

  mutable std::mutex breakdown_mutex;
  TimingBreakdown timings;

  NodeLink* link(const std::string& name) {
    for (auto& n : nodes)
      if (n->name == name) return n.get();
    return nullptr;
  }

  BufferRec& buffer_rec_locked(Handle h) {
    if (h.kind != HandleKind::buffer) fail(ErrorCode::handle, "not a buffer handle");
    auto it = buffers.find(h.id);
    if (it == buffers.end())
      fail(ErrorCode::handle, "buffer handle " + std::to_string(h.id) + " is released or unknown");
    return it->second;
  }

  QueueRec& queue_rec_locked(Handle h) {
    if (h.kind != HandleKind::queue) fail(ErrorCode::handle, "not a queue handle");
    auto it = queues.find(h.id);
    if (it == queues.end())
      fail(ErrorCode::handle, "queue handle " + std::to_string(h.id) + " is released or unknown");
    return *it->second;
  }

  KernelRec& kernel_rec_locked(Handle h) {
    if (h.kind != HandleKind::kernel) fail(ErrorCode::handle, "not a kernel handle");
    auto it = kernels.find(h.id);
    if (it == kernels.end())
      fail(ErrorCode::handle, "kernel handle " + std::to_string(h.id) + " is released or unknown");
    return it->second;
  }

  QueueRec& get_queue(Handle h) {
    std::lock_guard lock(tables_mutex);
    return queue_rec_locked(h);
  }

  Handle new_event() {
    uint64_t id = next_handle.fetch_add(1);
    std::lock_guard lock(tables_mutex);
    events.insert(id);
    return Handle{HandleKind::event, id};
  }

  void add_transfer_ms(QueueRec& q, double ms) {
    q.transfer_ms += ms;
    std::lock_guard lock(breakdown_mutex);
    timings.transfer_ms += ms;
  }

  void add_compute(QueueRec& q, double compute_ms, double modeled_ms) {
    q.compute_ms += compute_ms;
    q.modeled_ms += modeled_ms;
    std::lock_guard lock(breakdown_mutex);
    timings.compute_ms += compute_ms;
    timings.modeled_compute_ms += modeled_ms;
  }

  void note_residency(uint64_t buffer_id, const std::string& node_name) {
    std::vector<int> ids;
    for (const auto& e : device_map.entries)
      if (e.node_name == node_name) ids.push_back(e.global_id);
    scheduler.note_resident(buffer_id, ids);
  }

  void invalidate_buffer(uint64_t id) {
    std::lock_guard lock(tables_mutex);
    auto it = buffers.find(id);
    if (it != buffers.end()) it->second.valid = false;
  }

  // Control-channel request to a node (init, registry, release, readback of
  // a buffer owned elsewhere).
  Message control_request(NodeLink& node, wire::ApiCallBody body, bool on_data) {
    trace.record({node.name, MsgKind::ApiCallRequest, body.function_name,
                  body.buffer_refs.empty() ? 0 : body.buffer_refs.front().buffer_id});
    Message msg = api_call(std::move(body));
    std::lock_guard lock(node.mutex);
    return on_data ? node.channel.request_on_data(std::move(msg))
                   : node.channel.request(std::move(msg));
  }

  std::vector<uint8_t> remote_read(uint64_t buffer_id, const std::string& owner_node) {
    NodeLink* node = link(owner_node);
    if (!node) fail(ErrorCode::internal, "owner node '" + owner_node + "' vanished");
    Message reply = control_request(*node, make_read_buffer(buffer_id), true);
    const auto& body = std::get<wire::ApiResultBody>(reply.body);
    if (body.results.size() != 1) fail(ErrorCode::protocol, "read_buffer reply shape");
    return body.results[0].as_bytes();
  }

  // Makes the buffer usable by the queue's node: one alloc_buffer per
  // (buffer, node), and for content the node does not own, a host-mediated
  // migration (read from the owner, then write here, in that order).
  // `content_matters` is false when the operation fully overwrites the
  // buffer anyway. Caller holds the queue mutex.
  void stage_buffer(uint64_t id, QueueRec& q, bool content_matters) {
    bool need_alloc;
    uint64_t size;
    std::optional<std::string> owner;
    {
      std::lock_guard lock(tables_mutex);
      BufferRec& rec = buffer_rec_locked(Handle{HandleKind::buffer, id});
      if (!rec.valid) fail(ErrorCode::handle, "buffer was invalidated by a transport failure");
      need_alloc = !rec.allocated_on.count(q.node);
      if (need_alloc) rec.allocated_on.insert(q.node);
      size = rec.size;
      owner = rec.owner;
    }
    if (need_alloc) {
      trace.record({q.node, MsgKind::ApiCallRequest, "alloc_buffer", id});
      q.channel.request(api_call(make_alloc_buffer(id, size)));
    }
    if (content_matters && owner && *owner != q.node) {
      std::vector<uint8_t> content = remote_read(id, *owner);
      auto packages = wire::chunk_buffer(id, content);
      for (const auto& p : packages)
        trace.record({q.node, MsgKind::DataTransfer, {}, p.buffer_id});
      q.channel.send_data(packages);
      {
        std::lock_guard lock(tables_mutex);
        buffers.at(id).owner = q.node;
      }
      note_residency(id, q.node);
    }
  }

  // Shared launch path. The task's args are already validated against the
  // kernel signature.
  Handle launch_on_queue(QueueRec& q, const KernelTask& task) {
    const auto* sig = kernels::find_kernel(kernels::kCoreBundle, task.kernel_name);
    if (!sig) fail(ErrorCode::name, "unknown kernel '" + task.kernel_name + "'");
    for (uint32_t d = 0; d < task.dims && d < 3; ++d)
      if (task.global_size[d] < 1) fail(ErrorCode::argument, "global_size extents must be >= 1");

    std::vector<std::pair<uint64_t, bool>> buffer_args;  // (id, is_output)
    {
      std::lock_guard lock(tables_mutex);
      for (size_t i = 0; i < task.args.size(); ++i) {
        if (task.args[i].tag() != TypedValue::Tag::handle) continue;
        uint64_t id = task.args[i].as_handle();
        BufferRec& rec = buffer_rec_locked(Handle{HandleKind::buffer, id});
        if (!rec.valid) fail(ErrorCode::handle, "buffer was invalidated by a transport failure");
        buffer_args.emplace_back(id, sig->args[i] == kernels::ArgKind::buffer_out);
      }
    }

    std::lock_guard queue_lock(q.mutex);
    auto staging_started = Clock::now();
    for (auto [id, is_output] : buffer_args) stage_buffer(id, q, !is_output);
    add_transfer_ms(q, ms_since(staging_started));

    scheduler.note_dispatch(q.device_gid);
    Message reply;
    try {
      trace.record({q.node, MsgKind::ApiCallRequest, "launch_kernel", 0});
      reply = q.channel.request(api_call(make_launch_kernel(task, q.local_index)));
    } catch (...) {
      scheduler.note_complete(q.device_gid);
      throw;
    }
    scheduler.note_complete(q.device_gid);

    const auto& body = std::get<wire::ApiResultBody>(reply.body);
    if (body.results.size() != 3) fail(ErrorCode::protocol, "launch_kernel reply shape");
    double compute_seconds = body.results[0].as_f64();
    double modeled_seconds = body.results[1].as_f64();
    int64_t work = body.results[2].as_i64();

    add_compute(q, compute_seconds * 1000.0, modeled_seconds * 1000.0);
    if (compute_seconds > 0.0)
      scheduler.record_profile(q.device_gid, task.kernel_name, static_cast<double>(work),
                               compute_seconds);

    {
      std::lock_guard lock(tables_mutex);
      for (auto [id, is_output] : buffer_args)
        if (is_output) {
          auto it = buffers.find(id);
          if (it != buffers.end()) it->second.owner = q.node;
        }
    }
    for (auto [id, is_output] : buffer_args)
      if (is_output) note_residency(id, q.node);
    return new_event();
  }
};

HostContext::HostContext() : impl_(new Impl) {}
HostContext::HostContext(HostContext&&) noexcept = default;
HostContext& HostContext::operator=(HostContext&&) noexcept = default;
HostContext::~HostContext() = default;

HostContext HostContext::init(const ClusterConfig& config, const HostOptions& options) {
  auto started = Clock::now();
  HostContext ctx;
  Impl& impl = *ctx.impl_;
  impl.config = config;
  impl.options = options;
  impl.scheduler.configure(options.scheduler, config.kernel_map);

  for (const auto& node : config.nodes) {
    auto link = std::make_unique<Impl::NodeLink>();
    link->name = node.name;
    link->endpoint = node.endpoint;
    try {
      link->channel = net::Channel::connect(node.endpoint, options.connect);
    } catch (const Error& e) {
      fail(ErrorCode::connect,
           "node '" + node.name + "' (" + node.endpoint.str() + ") unreachable: " + e.what());
    }
    impl.nodes.push_back(std::move(link));
  }

  std::vector<net::Channel*> channels;
  for (auto& n : impl.nodes) channels.push_back(&n->channel);
  auto outcome = net::broadcast(channels, Message::device_id_request(0));
  if (!outcome.ok()) {
    std::string who;
    for (const auto& [ep, reason] : outcome.failures) who += (who.empty() ? "" : ", ") + ep;
    fail(ErrorCode::connect, "device id exchange failed for: " + who);
  }

  // Dense global ids: config node order, then local device order.
  int next_gid = 0;
  for (size_t ni = 0; ni < impl.nodes.size(); ++ni) {
    const auto& spec = config.nodes[ni];
    const auto& list = std::get<wire::DeviceListBody>(outcome.responses[ni]->body);
    if (list.devices.size() != spec.devices.size())
      fail(ErrorCode::config, "node '" + spec.name + "' reports " +
                                  std::to_string(list.devices.size()) + " devices, config lists " +
                                  std::to_string(spec.devices.size()));
    for (size_t di = 0; di < list.devices.size(); ++di) {
      const auto& desc = list.devices[di];
      const auto& model = spec.devices[di];
      if (desc.local_index != di || desc.type != model.type ||
          desc.relative_throughput != model.relative_throughput)
        fail(ErrorCode::config,
             "node '" + spec.name + "' device " + std::to_string(di) + " disagrees with config");
      impl.device_map.entries.push_back(
          {next_gid++, spec.name, spec.endpoint, static_cast<uint32_t>(di), model});
    }
  }

  std::vector<std::pair<int, DeviceModel>> sched_devices;
  for (const auto& e : impl.device_map.entries) sched_devices.emplace_back(e.global_id, e.model);
  impl.scheduler.sync_devices(sched_devices);

  impl.timings.init_ms = ms_since(started);
  return ctx;
}

const GlobalDeviceMap& HostContext::device_map() const { return impl_->device_map; }

std::vector<int> HostContext::get_device_ids(std::optional<wire::DeviceType> filter) const {
  std::vector<int> ids;
  for (const auto& e : impl_->device_map.entries)
    if (!filter || e.model.type == *filter) ids.push_back(e.global_id);
  return ids;
}

Handle HostContext::create_queue(int global_device_id, std::string user_id, bool shared) {
  const DeviceEntry* entry = impl_->device_map.find(global_device_id);
  if (!entry) fail(ErrorCode::unknown_device, "device " + std::to_string(global_device_id));
  auto queue = std::make_unique<Impl::QueueRec>();
  queue->device_gid = global_device_id;
  queue->node = entry->node_name;
  queue->local_index = entry->local_index;
  queue->user_id = std::move(user_id);
  queue->shared = shared;
  queue->channel = net::Channel::connect(entry->endpoint, impl_->options.connect);
  uint64_t id = impl_->next_handle.fetch_add(1);
  std::lock_guard lock(impl_->tables_mutex);
  impl_->queues.emplace(id, std::move(queue));
  return Handle{HandleKind::queue, id};
}

Handle HostContext::create_buffer(uint64_t size) {
  uint64_t id = impl_->next_handle.fetch_add(1);
  std::lock_guard lock(impl_->tables_mutex);
  impl_->buffers.emplace(id, Impl::BufferRec{size, std::nullopt, {}, true});
  return Handle{HandleKind::buffer, id};
}

Handle HostContext::create_program(const std::string& bundle) {
  if (impl_->nodes.empty()) fail(ErrorCode::internal, "no nodes");
  Message reply = impl_->control_request(*impl_->nodes.front(), make_query_registry(bundle), false);
  auto entries = parse_registry_reply(std::get<wire::ApiResultBody>(reply.body));

  uint64_t id = impl_->next_handle.fetch_add(1);
  std::lock_guard lock(impl_->tables_mutex);
  impl_->programs.emplace(id, Impl::ProgramRec{bundle, std::move(entries)});
  return Handle{HandleKind::program, id};
}

Handle HostContext::create_kernel(Handle program, const std::string& kernel_name) {
  std::lock_guard lock(impl_->tables_mutex);
  if (program.kind != HandleKind::program) fail(ErrorCode::handle, "not a program handle");
  auto it = impl_->programs.find(program.id);
  if (it == impl_->programs.end()) fail(ErrorCode::handle, "program handle is released or unknown");
  const auto& entries = it->second.kernels;
  auto entry = std::find_if(entries.begin(), entries.end(),
                            [&](const RegistryEntry& e) { return e.name == kernel_name; });
  if (entry == entries.end()) {
    std::string names;
    for (const auto& e : entries) names += (names.empty() ? "" : ", ") + e.name;
    fail(ErrorCode::name, "unknown kernel '" + kernel_name + "' (available: " + names + ")");
  }
  uint64_t id = impl_->next_handle.fetch_add(1);
  impl_->kernels.emplace(id, Impl::KernelRec{program.id, kernel_name, entry->arity, {}});
  return Handle{HandleKind::kernel, id};
}

void HostContext::set_kernel_arg(Handle kernel, uint32_t index, TypedValue value) {
  std::lock_guard lock(impl_->tables_mutex);
  impl_->kernel_rec_locked(kernel).args[index] = std::move(value);
}

void HostContext::set_kernel_arg(Handle kernel, uint32_t index, Handle buffer) {
  std::lock_guard lock(impl_->tables_mutex);
  if (buffer.kind != HandleKind::buffer) fail(ErrorCode::handle, "argument is not a buffer handle");
  impl_->kernel_rec_locked(kernel).args[index] = TypedValue::of_handle(buffer.id);
}

Handle HostContext::enqueue_write_buffer(Handle queue, Handle buffer,
                                         std::span<const uint8_t> data) {
  Impl::QueueRec& q = impl_->get_queue(queue);
  uint64_t size;
  {
    std::lock_guard lock(impl_->tables_mutex);
    Impl::BufferRec& rec = impl_->buffer_rec_locked(buffer);
    if (!rec.valid) fail(ErrorCode::handle, "buffer was invalidated by a transport failure");
    size = rec.size;
  }
  if (data.size() > size)
    fail(ErrorCode::size, "write of " + std::to_string(data.size()) + " bytes into a " +
                              std::to_string(size) + "-byte buffer");

  std::lock_guard queue_lock(q.mutex);
  auto started = Clock::now();
  try {
    // A full overwrite never needs the previous owner's bytes.
    impl_->stage_buffer(buffer.id, q, /*content_matters=*/data.size() < size);
    auto packages = wire::chunk_buffer(buffer.id, data);
    for (const auto& p : packages)
      impl_->trace.record({q.node, MsgKind::DataTransfer, {}, p.buffer_id});
    q.channel.send_data(packages);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::transport || e.code() == ErrorCode::timeout)
      impl_->invalidate_buffer(buffer.id);
    throw;
  }
  {
    std::lock_guard lock(impl_->tables_mutex);
    impl_->buffers.at(buffer.id).owner = q.node;
  }
  impl_->note_residency(buffer.id, q.node);
  impl_->add_transfer_ms(q, ms_since(started));
  return impl_->new_event();
}

std::vector<uint8_t> HostContext::enqueue_read_buffer(Handle queue, Handle buffer) {
  Impl::QueueRec& q = impl_->get_queue(queue);
  uint64_t size;
  std::optional<std::string> owner;
  {
    std::lock_guard lock(impl_->tables_mutex);
    Impl::BufferRec& rec = impl_->buffer_rec_locked(buffer);
    if (!rec.valid) fail(ErrorCode::handle, "buffer was invalidated by a transport failure");
    size = rec.size;
    owner = rec.owner;
  }
  // Never written and never computed: defined to read back as zeros.
  if (!owner) return std::vector<uint8_t>(size, 0);

  std::lock_guard queue_lock(q.mutex);
  auto started = Clock::now();
  std::vector<uint8_t> bytes;
  if (*owner == q.node) {
    impl_->trace.record({q.node, MsgKind::ApiCallRequest, "read_buffer", buffer.id});
    Message reply = q.channel.request_on_data(api_call(make_read_buffer(buffer.id)));
    const auto& body = std::get<wire::ApiResultBody>(reply.body);
    if (body.results.size() != 1) fail(ErrorCode::protocol, "read_buffer reply shape");
    bytes = body.results[0].as_bytes();
  } else {
    bytes = impl_->remote_read(buffer.id, *owner);
  }
  bytes.resize(size, 0);
  impl_->add_transfer_ms(q, ms_since(started));
  return bytes;
}

Handle HostContext::enqueue_ndrange_kernel(Handle queue, Handle kernel,
                                           std::array<uint64_t, 3> global_size, uint32_t dims) {
  KernelTask task;
  Impl::QueueRec& q = impl_->get_queue(queue);
  {
    std::lock_guard lock(impl_->tables_mutex);
    Impl::KernelRec& krec = impl_->kernel_rec_locked(kernel);
    for (const auto& [index, value] : krec.args)
      if (index >= krec.arity)
        fail(ErrorCode::argument, "argument index " + std::to_string(index) +
                                      " out of range for a " + std::to_string(krec.arity) +
                                      "-arg kernel");
    for (uint32_t i = 0; i < krec.arity; ++i)
      if (!krec.args.count(i))
        fail(ErrorCode::argument, "kernel argument " + std::to_string(i) + " is unbound");
    task.kernel_name = krec.name;
    for (uint32_t i = 0; i < krec.arity; ++i) task.args.push_back(krec.args.at(i));
  }
  task.user_id = q.user_id;
  task.shared_flag = q.shared;
  task.global_size = global_size;
  task.dims = dims;
  task.placement = Placement::explicit_on(q.device_gid);
  return impl_->launch_on_queue(q, task);
}

std::pair<int, Handle> HostContext::submit_task(const KernelTask& task) {
  const auto* sig = kernels::find_kernel(kernels::kCoreBundle, task.kernel_name);
  if (!sig) fail(ErrorCode::name, "unknown kernel '" + task.kernel_name + "'");
  if (task.args.size() != sig->arity())
    fail(ErrorCode::argument, task.kernel_name + ": expected " + std::to_string(sig->arity()) +
                                  " bound arguments");
  if (task.placement.mode == Placement::Mode::auto_policy &&
      !impl_->scheduler.has_policy(task.placement.policy))
    fail(ErrorCode::policy, "unknown policy '" + task.placement.policy + "'");

  TaskEstimate estimate;
  std::vector<int64_t> scalars;
  std::vector<uint64_t> buffer_sizes;
  {
    std::lock_guard lock(impl_->tables_mutex);
    for (size_t i = 0; i < task.args.size(); ++i) {
      const auto& arg = task.args[i];
      if (arg.tag() == TypedValue::Tag::handle) {
        Impl::BufferRec& rec =
            impl_->buffer_rec_locked(Handle{HandleKind::buffer, arg.as_handle()});
        buffer_sizes.push_back(rec.size);
        if (sig->args[i] == kernels::ArgKind::buffer_out)
          estimate.out_bytes += rec.size;
        else
          estimate.in_bytes += rec.size;
      } else if (arg.tag() == TypedValue::Tag::i64) {
        scalars.push_back(arg.as_i64());
      } else if (arg.tag() == TypedValue::Tag::i32) {
        scalars.push_back(arg.as_i32());
      }
    }
  }
  estimate.work_units =
      static_cast<double>(kernels::work_estimate(task.kernel_name, scalars, buffer_sizes));

  int chosen = impl_->scheduler.schedule(task, estimate);

  uint64_t queue_id = 0;
  {
    std::lock_guard lock(impl_->tables_mutex);
    auto it = impl_->internal_queues.find(chosen);
    if (it != impl_->internal_queues.end()) queue_id = it->second;
  }
  if (queue_id == 0) {
    Handle q = create_queue(chosen);
    std::lock_guard lock(impl_->tables_mutex);
    impl_->internal_queues[chosen] = q.id;
    queue_id = q.id;
  }
  Impl::QueueRec& q = impl_->get_queue(Handle{HandleKind::queue, queue_id});
  Handle event = impl_->launch_on_queue(q, task);
  return {chosen, event};
}

Handle HostContext::launch_task(Handle queue, const KernelTask& task) {
  const auto* sig = kernels::find_kernel(kernels::kCoreBundle, task.kernel_name);
  if (!sig) fail(ErrorCode::name, "unknown kernel '" + task.kernel_name + "'");
  if (task.args.size() != sig->arity())
    fail(ErrorCode::argument, task.kernel_name + ": expected " + std::to_string(sig->arity()) +
                                  " bound arguments");
  Impl::QueueRec& q = impl_->get_queue(queue);
  return impl_->launch_on_queue(q, task);
}

TimingFragment HostContext::finish(Handle queue) {
  Impl::QueueRec& q = impl_->get_queue(queue);
  // Every forwarded call on the queue already has its response (the host
  // side is synchronous); drain the accumulated fragment.
  std::lock_guard queue_lock(q.mutex);
  TimingFragment fragment{q.transfer_ms, q.compute_ms, q.modeled_ms};
  q.transfer_ms = 0.0;
  q.compute_ms = 0.0;
  q.modeled_ms = 0.0;
  return fragment;
}

void HostContext::release(Handle handle) {
  switch (handle.kind) {
    case HandleKind::buffer: {
      std::set<std::string> allocated;
      {
        std::lock_guard lock(impl_->tables_mutex);
        Impl::BufferRec& rec = impl_->buffer_rec_locked(handle);
        allocated = rec.allocated_on;
        impl_->buffers.erase(handle.id);
      }
      impl_->scheduler.drop_resident(handle.id);
      for (const auto& name : allocated) {
        Impl::NodeLink* node = impl_->link(name);
        if (!node) continue;
        impl_->control_request(*node, make_release_object(handle.id), false);
      }
      return;
    }
    case HandleKind::queue: {
      std::lock_guard lock(impl_->tables_mutex);
      Impl::QueueRec& q = impl_->queue_rec_locked(handle);
      q.channel.close();
      for (auto it = impl_->internal_queues.begin(); it != impl_->internal_queues.end();)
        it = it->second == handle.id ? impl_->internal_queues.erase(it) : std::next(it);
      impl_->queues.erase(handle.id);
      return;
    }
    case HandleKind::program: {
      std::lock_guard lock(impl_->tables_mutex);
      if (!impl_->programs.erase(handle.id))
        fail(ErrorCode::handle, "program handle is released or unknown");
      return;
    }
    case HandleKind::kernel: {
      std::lock_guard lock(impl_->tables_mutex);
      if (!impl_->kernels.erase(handle.id))
        fail(ErrorCode::handle, "kernel handle is released or unknown");
      return;
    }
    case HandleKind::event: {
      std::lock_guard lock(impl_->tables_mutex);
      if (!impl_->events.erase(handle.id))
        fail(ErrorCode::handle, "event handle is released or unknown");
      return;
    }
    case HandleKind::context:
      fail(ErrorCode::handle, "the context is not a releasable handle");
  }
}

TimingBreakdown HostContext::breakdown() const {
  std::lock_guard lock(impl_->breakdown_mutex);
  return impl_->timings;
}

void HostContext::add_data_creation_ms(double ms) {
  std::lock_guard lock(impl_->breakdown_mutex);
  impl_->timings.data_creation_ms += ms;
}

MessageTrace& HostContext::trace() { return impl_->trace; }
Scheduler& HostContext::scheduler() { return impl_->scheduler; }

uint64_t HostContext::buffer_size(Handle buffer) const {
  std::lock_guard lock(impl_->tables_mutex);
  return impl_->buffer_rec_locked(buffer).size;
}

void HostContext::shutdown_nodes() {
  for (auto& node : impl_->nodes) {
    std::lock_guard lock(node->mutex);
    try {
      if (node->channel.valid()) node->channel.send_oneway(Message::shutdown(0));
    } catch (const Error&) {
      // node already gone
    }
    node->channel.close();
  }
  std::lock_guard lock(impl_->tables_mutex);
  for (auto& [id, q] : impl_->queues) q->channel.close();
}

}  // namespace haocl
