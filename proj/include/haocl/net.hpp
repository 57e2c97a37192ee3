#pragma once

// TCP transport between the host runtime and node daemons. A node serves
// two ports (message, data = message + 1); every inbound connection is
// handled in its own thread so one slow handler never blocks another
// client. The host side is strictly synchronous: a Channel allows one
// in-flight request at a time and is not safe for concurrent use.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "haocl/config.hpp"
#include "haocl/wire.hpp"

namespace haocl::net {

int default_request_timeout_ms();  // HAOCL_REQ_TIMEOUT_MS or 60000

struct ConnectOptions {
  int retries = 10;
  int retry_delay_ms = 200;
  int handshake_timeout_ms = 5000;
  int request_timeout_ms = default_request_timeout_ms();
};

// Returning nullopt sends nothing (used for non-final data chunks and
// Shutdown). Ping frames are answered by the server itself.
using Handler = std::function<std::optional<wire::Message>(const wire::Message&)>;

class Server {
 public:
  Server(const Endpoint& endpoint, Handler handler);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  const Endpoint& endpoint() const;

  // Asks the server to stop accepting and unwind; safe to call from a
  // handler thread. Draining happens in wait()/the destructor.
  void request_stop();

  // Blocks until request_stop() (or a Shutdown-initiated stop), then
  // closes connections and joins all threads.
  void wait();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class Channel {
 public:
  Channel();
  ~Channel();
  Channel(Channel&&) noexcept;
  Channel& operator=(Channel&&) noexcept;

  // Opens both connections and performs a Ping/Pong handshake on each.
  static Channel connect(const Endpoint& endpoint, const ConnectOptions& options = {});

  bool valid() const;
  uint64_t session_id() const;
  const Endpoint& peer() const;

  // Sends one request on the message connection and blocks for the
  // correlated response. ErrorReply is surfaced as a thrown Error.
  wire::Message request(wire::Message msg);

  // Same, but on the data connection (bulk readback stays off the
  // message port).
  wire::Message request_on_data(wire::Message msg);

  // Writes the packages in offset order on the data connection and blocks
  // until the DataAck for the completed buffer.
  void send_data(const std::vector<wire::DataPackage>& packages);

  // Fire-and-forget (Shutdown).
  void send_oneway(wire::Message msg);

  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct BroadcastResult {
  std::vector<std::optional<wire::Message>> responses;          // one slot per channel
  std::vector<std::pair<std::string, std::string>> failures;    // (endpoint, reason)

  bool ok() const { return failures.empty(); }
};

// Sends msg to every channel sequentially in channel order (fresh call_id
// per channel) and collects the responses. Failed channels are reported in
// `failures`; successful responses are still returned.
BroadcastResult broadcast(std::span<Channel* const> channels, const wire::Message& msg);

}  // namespace haocl::net
