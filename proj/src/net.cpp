#include "haocl/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <thread>

#include "haocl/error.hpp"

namespace haocl::net {

using Clock = std::chrono::steady_clock;

namespace {

int parse_timeout_env() {
  if (const char* v = std::getenv("HAOCL_REQ_TIMEOUT_MS")) {
    int ms = std::atoi(v);
    if (ms > 0) return ms;
  }
  return 60000;
}

void validate_endpoint(const Endpoint& ep) {
  if (ep.message_port == 0 || ep.data_port == 0 || ep.message_port == ep.data_port)
    fail(ErrorCode::config, "endpoint needs two distinct nonzero ports: " + ep.str());
}

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
};

sockaddr_in resolve(const std::string& host, uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &result) != 0 || !result)
    fail(ErrorCode::connect, "cannot resolve host '" + host + "'");
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(result->ai_addr)->sin_addr;
  freeaddrinfo(result);
  return addr;
}

Socket listen_on(const std::string& host, uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail(ErrorCode::connect, std::string("socket: ") + std::strerror(errno));
  Socket sock(fd);
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(host, port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    fail(ErrorCode::connect,
         "cannot bind " + host + ":" + std::to_string(port) + ": " + std::strerror(errno));
  if (::listen(fd, 64) != 0)
    fail(ErrorCode::connect, "listen on port " + std::to_string(port) + ": " + std::strerror(errno));
  return sock;
}

void send_all(int fd, const uint8_t* data, size_t len) {
  while (len > 0) {
    ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      fail(ErrorCode::transport, std::string("send: ") + (n < 0 ? std::strerror(errno) : "peer closed"));
    }
    data += n;
    len -= static_cast<size_t>(n);
  }
}

void send_frame(int fd, const wire::Message& msg) {
  auto bytes = wire::encode(msg);
  send_all(fd, bytes.data(), bytes.size());
}

// Receives at least one byte, or returns 0 on orderly shutdown. With a
// deadline, throws Error(timeout) once it passes.
size_t recv_some(int fd, uint8_t* buf, size_t cap,
                 std::optional<Clock::time_point> deadline) {
  for (;;) {
    if (deadline) {
      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now());
      if (remaining.count() <= 0) fail(ErrorCode::timeout, "no response before the deadline");
      pollfd pfd{fd, POLLIN, 0};
      int rc = ::poll(&pfd, 1, static_cast<int>(std::min<int64_t>(remaining.count(), 1000)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::transport, std::string("poll: ") + std::strerror(errno));
      }
      if (rc == 0) continue;
    }
    ssize_t n = ::recv(fd, buf, cap, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::transport, std::string("recv: ") + std::strerror(errno));
    }
    return static_cast<size_t>(n);
  }
}

// Reads whole frames from a connection, keeping partial bytes between calls.
class FrameReader {
 public:
  explicit FrameReader(int fd) : fd_(fd) {}

  // Blocks until one frame is available. Returns nullopt on EOF.
  std::optional<wire::Message> next(std::optional<Clock::time_point> deadline) {
    for (;;) {
      if (auto decoded = wire::decode(buffer_)) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<long>(decoded->consumed));
        return std::move(decoded->message);
      }
      uint8_t chunk[64 * 1024];
      size_t n = recv_some(fd_, chunk, sizeof(chunk), deadline);
      if (n == 0) return std::nullopt;
      buffer_.insert(buffer_.end(), chunk, chunk + n);
    }
  }

  void reset() { buffer_.clear(); }

 private:
  int fd_;
  std::vector<uint8_t> buffer_;
};

std::atomic<uint64_t> g_session_counter{0};

}  // namespace

int default_request_timeout_ms() {
  static int value = parse_timeout_env();
  return value;
}

// ---------------------------------------------------------------------------
// Server

struct Server::Impl {
  Endpoint endpoint;
  Handler handler;
  Socket message_listener;
  Socket data_listener;
  std::atomic<bool> stopping{false};
  std::mutex mutex;
  std::condition_variable stop_cv;
  std::vector<std::thread> accept_threads;
  std::vector<std::thread> connection_threads;
  std::vector<int> live_fds;
  bool joined = false;

  void accept_loop(Socket& listener) {
    while (!stopping.load()) {
      pollfd pfd{listener.fd(), POLLIN, 0};
      int rc = ::poll(&pfd, 1, 200);
      if (rc <= 0) continue;
      int fd = ::accept(listener.fd(), nullptr, nullptr);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      std::lock_guard lock(mutex);
      if (stopping.load()) {
        ::close(fd);
        return;
      }
      live_fds.push_back(fd);
      connection_threads.emplace_back([this, fd] { connection_loop(fd); });
    }
  }

  void connection_loop(int fd) {
    FrameReader reader(fd);
    for (;;) {
      std::optional<wire::Message> msg;
      try {
        msg = reader.next(std::nullopt);
      } catch (const Error& e) {
        // Undecodable input: report it, drop buffered bytes, keep serving
        // this connection from the next read.
        if (e.code() == ErrorCode::transport) break;
        try {
          send_frame(fd, wire::Message::error_reply(0, e.code(), e.what()));
        } catch (const Error&) {
          break;
        }
        reader.reset();
        continue;
      }
      if (!msg) break;  // peer closed

      std::optional<wire::Message> reply;
      if (msg->kind == wire::MsgKind::Ping) {
        reply = wire::Message::pong(msg->call_id);
      } else {
        try {
          reply = handler(*msg);
        } catch (const Error& e) {
          reply = wire::Message::error_reply(msg->call_id, e.code(), e.what());
        } catch (const std::exception& e) {
          reply = wire::Message::error_reply(msg->call_id, ErrorCode::internal, e.what());
        }
      }
      if (reply) {
        reply->call_id = msg->call_id;
        try {
          send_frame(fd, *reply);
        } catch (const Error&) {
          break;
        }
      }
      if (stopping.load() && msg->kind == wire::MsgKind::Shutdown) break;
    }
    {
      std::lock_guard lock(mutex);
      std::erase(live_fds, fd);
    }
    ::close(fd);
  }

  void stop_and_join() {
    stopping.store(true);
    stop_cv.notify_all();
    message_listener.close();
    data_listener.close();
    {
      // Break idle reads; a handler mid-execution still writes its reply.
      std::lock_guard lock(mutex);
      for (int fd : live_fds) ::shutdown(fd, SHUT_RD);
    }
    for (auto& t : accept_threads)
      if (t.joinable()) t.join();
    for (size_t i = 0;; ++i) {
      std::thread t;
      {
        std::lock_guard lock(mutex);
        if (i >= connection_threads.size()) break;
        t = std::move(connection_threads[i]);
      }
      if (t.joinable()) t.join();
    }
  }
};

Server::Server(const Endpoint& endpoint, Handler handler) : impl_(new Impl) {
  validate_endpoint(endpoint);
  impl_->endpoint = endpoint;
  impl_->handler = std::move(handler);
  impl_->message_listener = listen_on(endpoint.host, endpoint.message_port);
  impl_->data_listener = listen_on(endpoint.host, endpoint.data_port);
  impl_->accept_threads.emplace_back([impl = impl_.get()] { impl->accept_loop(impl->message_listener); });
  impl_->accept_threads.emplace_back([impl = impl_.get()] { impl->accept_loop(impl->data_listener); });
}

Server::~Server() {
  if (impl_ && !impl_->joined) {
    impl_->stop_and_join();
    impl_->joined = true;
  }
}

const Endpoint& Server::endpoint() const { return impl_->endpoint; }

void Server::request_stop() {
  impl_->stopping.store(true);
  impl_->stop_cv.notify_all();
}

void Server::wait() {
  {
    std::unique_lock lock(impl_->mutex);
    impl_->stop_cv.wait(lock, [&] { return impl_->stopping.load(); });
  }
  if (!impl_->joined) {
    impl_->stop_and_join();
    impl_->joined = true;
  }
}

// ---------------------------------------------------------------------------
// Channel

struct Channel::Impl {
  Endpoint peer;
  ConnectOptions options;
  uint64_t session_id = 0;
  std::atomic<uint64_t> next_call_id{0};
  Socket message_sock;
  Socket data_sock;
  std::unique_ptr<FrameReader> message_reader;
  std::unique_ptr<FrameReader> data_reader;

  wire::Message exchange(Socket& sock, FrameReader& reader, wire::Message msg) {
    if (!sock.valid()) fail(ErrorCode::transport, "channel to " + peer.str() + " is closed");
    msg.call_id = next_call_id.fetch_add(1);
    auto expected = wire::response_kind_for(msg.kind);
    if (!expected) fail(ErrorCode::argument, "message kind has no response");
    send_frame(sock.fd(), msg);
    auto deadline = Clock::now() + std::chrono::milliseconds(options.request_timeout_ms);
    return await(sock, reader, msg.call_id, *expected, deadline);
  }

  wire::Message await(Socket& sock, FrameReader& reader, uint64_t call_id,
                      wire::MsgKind expected, Clock::time_point deadline) {
    std::optional<wire::Message> reply;
    try {
      reply = reader.next(deadline);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::timeout) throw;
      sock.close();
      throw;
    }
    if (!reply) {
      sock.close();
      fail(ErrorCode::transport, "connection to " + peer.str() + " closed");
    }
    if (reply->kind == wire::MsgKind::ErrorReply) {
      const auto& err = std::get<wire::ErrorBody>(reply->body);
      throw Error(static_cast<ErrorCode>(err.code), "remote " + peer.str() + ": " + err.message);
    }
    if (reply->call_id != call_id) {
      sock.close();
      fail(ErrorCode::protocol, "response call_id " + std::to_string(reply->call_id) +
                                    " does not match request " + std::to_string(call_id));
    }
    if (reply->kind != expected) {
      sock.close();
      fail(ErrorCode::protocol, std::string("expected ") + wire::msg_kind_name(expected) +
                                    ", got " + wire::msg_kind_name(reply->kind));
    }
    return std::move(*reply);
  }
};

Channel::Channel() = default;
Channel::~Channel() = default;
Channel::Channel(Channel&&) noexcept = default;
Channel& Channel::operator=(Channel&&) noexcept = default;

bool Channel::valid() const { return impl_ && impl_->message_sock.valid(); }
uint64_t Channel::session_id() const { return impl_ ? impl_->session_id : 0; }
const Endpoint& Channel::peer() const { return impl_->peer; }

void Channel::close() {
  if (impl_) {
    impl_->message_sock.close();
    impl_->data_sock.close();
  }
}

namespace {

Socket connect_with_retries(const Endpoint& ep, uint16_t port, const ConnectOptions& options) {
  sockaddr_in addr = resolve(ep.host, port);
  for (int attempt = 0;; ++attempt) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail(ErrorCode::connect, std::string("socket: ") + std::strerror(errno));
    Socket sock(fd);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return sock;
    }
    if (attempt + 1 >= options.retries)
      fail(ErrorCode::connect, "cannot connect to " + ep.host + ":" + std::to_string(port) +
                                   " after " + std::to_string(attempt + 1) +
                                   " attempts: " + std::strerror(errno));
    std::this_thread::sleep_for(std::chrono::milliseconds(options.retry_delay_ms));
  }
}

}  // namespace

Channel Channel::connect(const Endpoint& endpoint, const ConnectOptions& options) {
  validate_endpoint(endpoint);
  Channel chan;
  chan.impl_.reset(new Impl);
  chan.impl_->peer = endpoint;
  chan.impl_->options = options;
  chan.impl_->session_id = g_session_counter.fetch_add(1);
  chan.impl_->message_sock = connect_with_retries(endpoint, endpoint.message_port, options);
  chan.impl_->data_sock = connect_with_retries(endpoint, endpoint.data_port, options);
  chan.impl_->message_reader = std::make_unique<FrameReader>(chan.impl_->message_sock.fd());
  chan.impl_->data_reader = std::make_unique<FrameReader>(chan.impl_->data_sock.fd());

  // Ping/Pong on both connections before the channel is considered up.
  auto deadline = Clock::now() + std::chrono::milliseconds(options.handshake_timeout_ms);
  try {
    uint64_t id = chan.impl_->next_call_id.fetch_add(1);
    send_frame(chan.impl_->message_sock.fd(), wire::Message::ping(id));
    chan.impl_->await(chan.impl_->message_sock, *chan.impl_->message_reader, id,
                      wire::MsgKind::Pong, deadline);
    id = chan.impl_->next_call_id.fetch_add(1);
    send_frame(chan.impl_->data_sock.fd(), wire::Message::ping(id));
    chan.impl_->await(chan.impl_->data_sock, *chan.impl_->data_reader, id, wire::MsgKind::Pong,
                      deadline);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::timeout)
      fail(ErrorCode::timeout, "handshake with " + endpoint.str() + " timed out");
    throw;
  }
  return chan;
}

wire::Message Channel::request(wire::Message msg) {
  if (!impl_) fail(ErrorCode::transport, "channel not connected");
  return impl_->exchange(impl_->message_sock, *impl_->message_reader, std::move(msg));
}

wire::Message Channel::request_on_data(wire::Message msg) {
  if (!impl_) fail(ErrorCode::transport, "channel not connected");
  return impl_->exchange(impl_->data_sock, *impl_->data_reader, std::move(msg));
}

void Channel::send_data(const std::vector<wire::DataPackage>& packages) {
  if (!impl_ || !impl_->data_sock.valid()) fail(ErrorCode::transport, "channel not connected");
  if (packages.empty()) fail(ErrorCode::argument, "send_data needs at least one package");
  uint64_t last_id = 0;
  for (const auto& pkg : packages) {
    wire::Message msg{wire::kProtocolVersion, wire::MsgKind::DataTransfer, 0, pkg};
    msg.call_id = last_id = impl_->next_call_id.fetch_add(1);
    send_frame(impl_->data_sock.fd(), msg);
  }
  auto deadline = Clock::now() + std::chrono::milliseconds(impl_->options.request_timeout_ms);
  auto reply = impl_->await(impl_->data_sock, *impl_->data_reader, last_id,
                            wire::MsgKind::DataAck, deadline);
  const auto& ack = std::get<wire::DataAckBody>(reply.body);
  if (ack.buffer_id != packages.front().buffer_id)
    fail(ErrorCode::protocol, "DataAck names buffer " + std::to_string(ack.buffer_id));
}

void Channel::send_oneway(wire::Message msg) {
  if (!impl_ || !impl_->message_sock.valid()) fail(ErrorCode::transport, "channel not connected");
  msg.call_id = impl_->next_call_id.fetch_add(1);
  send_frame(impl_->message_sock.fd(), msg);
}

BroadcastResult broadcast(std::span<Channel* const> channels, const wire::Message& msg) {
  BroadcastResult result;
  result.responses.resize(channels.size());
  for (size_t i = 0; i < channels.size(); ++i) {
    try {
      result.responses[i] = channels[i]->request(msg);
    } catch (const Error& e) {
      result.failures.emplace_back(channels[i]->peer().str(), e.what());
    }
  }
  return result;
}

}  // namespace haocl::net
