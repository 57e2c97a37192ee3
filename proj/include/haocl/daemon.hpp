#pragma once

// Node management process: serves the message/data listeners, owns the
// local buffer store, dispatches forwarded API calls through a
// function-name table to the kernel engine, and enforces the per-device
// shared-flag lease.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "haocl/config.hpp"
#include "haocl/net.hpp"
#include "haocl/wire.hpp"

namespace haocl {

// Buffer contents keyed by buffer id. A write session is the reassembly of
// one chunked transfer: chunks may arrive out of order, duplicates with
// identical bytes are idempotent, and the session completes (exactly one
// ack) when the received intervals cover [0, total_len).
class BufferStore {
 public:
  // Returns the completed byte count when this chunk finishes its write
  // session, nullopt otherwise. Throws Error(reassembly_conflict) on an
  // overlapping chunk with different bytes.
  std::optional<uint64_t> put_chunk(const wire::DataPackage& pkg);

  // Creates a zero-filled, complete buffer (idempotent for equal sizes).
  void alloc(uint64_t id, uint64_t size);

  bool exists(uint64_t id) const;
  bool complete(uint64_t id) const;

  // Copy of a complete buffer. Throws Error(precondition) when the buffer
  // is absent or mid-reassembly.
  std::vector<uint8_t> read(uint64_t id) const;

  // Stores kernel output as a complete buffer.
  void put_complete(uint64_t id, std::vector<uint8_t> bytes);

  void release(uint64_t id);  // idempotent
  size_t count() const;

 private:
  struct Entry {
    std::vector<uint8_t> bytes;
    bool session_active = false;
    uint64_t session_total = 0;
    std::vector<std::pair<uint64_t, uint64_t>> received;  // disjoint, sorted
  };

  mutable std::mutex mutex_;
  std::map<uint64_t, Entry> entries_;
};

// Admission control for the shared flag. A lease is held while any task of
// the holding stream is queued or executing and is dropped when the last
// one completes.
class LeaseTable {
 public:
  explicit LeaseTable(size_t device_count);

  // Throws Error(busy) when the device is held by another user and either
  // side is non-shared.
  void acquire(uint32_t device, const std::string& user, bool shared);
  void release(uint32_t device);

 private:
  struct Lease {
    int active = 0;
    std::string user;
    bool shared = true;
  };

  std::mutex mutex_;
  std::vector<Lease> leases_;
};

struct DaemonOptions {
  std::string node_name = "node";
  int threads_per_device = 1;  // OpenMP threads per kernel execution
  std::ostream* log = nullptr; // one line per dispatched call when set
};

class NodeDaemon {
 public:
  NodeDaemon(const Endpoint& endpoint, std::vector<DeviceModel> devices,
             DaemonOptions options = {});
  ~NodeDaemon();

  const Endpoint& endpoint() const { return endpoint_; }

  // Initiates the same graceful drain a Shutdown message would.
  void request_stop();

  // Blocks until a Shutdown message (or request_stop) and drains in-flight
  // work before returning.
  void wait();

  BufferStore& store() { return store_; }

 private:
  std::optional<wire::Message> handle(const wire::Message& msg);
  wire::ApiResultBody dispatch(const wire::ApiCallBody& call, std::string& device_label);
  wire::ApiResultBody do_launch(const wire::ApiCallBody& call, std::string& device_label);
  void log_call(uint64_t call_id, const std::string& function, const std::string& device,
                const std::string& status, double elapsed_ms);

  Endpoint endpoint_;
  std::vector<DeviceModel> devices_;
  DaemonOptions options_;
  BufferStore store_;
  LeaseTable leases_;
  std::vector<std::unique_ptr<std::mutex>> device_mutexes_;
  std::mutex log_mutex_;
  std::unique_ptr<net::Server> server_;

  using CallHandler = wire::ApiResultBody (NodeDaemon::*)(const wire::ApiCallBody&, std::string&);
  std::map<std::string, CallHandler, std::less<>> dispatch_table_;

  wire::ApiResultBody call_alloc_buffer(const wire::ApiCallBody&, std::string&);
  wire::ApiResultBody call_read_buffer(const wire::ApiCallBody&, std::string&);
  wire::ApiResultBody call_release_object(const wire::ApiCallBody&, std::string&);
  wire::ApiResultBody call_query_registry(const wire::ApiCallBody&, std::string&);
};

// Runs a daemon until Shutdown: the `haocl node` entry point.
void run_daemon(const Endpoint& endpoint, std::vector<DeviceModel> devices,
                DaemonOptions options = {});

}  // namespace haocl
