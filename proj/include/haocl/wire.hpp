#pragma once

// Wire protocol: canonical binary encoding of every message exchanged
// between the host runtime and node daemons.
//
// Frame layout (all integers big-endian):
//   magic   4 bytes  "HCL1"
//   version 1 byte
//   kind    1 byte
//   call_id 8 bytes
//   len     4 bytes  (body length)
//   body    len bytes (kind-specific)

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "haocl/error.hpp"

namespace haocl::wire {

inline constexpr uint8_t kProtocolVersion = 1;
inline constexpr uint8_t kMagic[4] = {'H', 'C', 'L', '1'};
inline constexpr size_t kHeaderSize = 18;
inline constexpr size_t kDefaultChunkSize = 1u << 20;  // 1 MiB data packages

enum class MsgKind : uint8_t {
  ApiCallRequest = 1,
  ApiCallResponse = 2,
  DeviceIdRequest = 3,
  DeviceIdResponse = 4,
  DataTransfer = 5,
  DataAck = 6,
  ErrorReply = 7,
  Ping = 8,
  Pong = 9,
  Shutdown = 10,
};

const char* msg_kind_name(MsgKind kind);

// Device types as they appear in DeviceIdResponse descriptors.
enum class DeviceType : uint8_t { cpu = 0, gpu = 1, fpga = 2 };

const char* device_type_name(DeviceType type);
std::optional<DeviceType> parse_device_type(const std::string& word);

// A scalar or opaque argument carried inside an ApiCall. The canonical
// encoding is one tag byte followed by the value bytes: fixed-width
// big-endian two's-complement integers, IEEE-754 big-endian floats, and
// length-prefixed byte strings.
class TypedValue {
 public:
  enum class Tag : uint8_t {
    i32 = 1,
    i64 = 2,
    f32 = 3,
    f64 = 4,
    bytes = 5,
    string = 6,
    handle = 7,
  };

  using Storage = std::variant<int32_t, int64_t, float, double,
                               std::vector<uint8_t>, std::string, uint64_t>;

  TypedValue() : value_(int32_t{0}) {}

  static TypedValue of_i32(int32_t v) { return TypedValue(Storage(v)); }
  static TypedValue of_i64(int64_t v) { return TypedValue(Storage(v)); }
  static TypedValue of_f32(float v) { return TypedValue(Storage(v)); }
  static TypedValue of_f64(double v) { return TypedValue(Storage(v)); }
  static TypedValue of_bytes(std::vector<uint8_t> v) { return TypedValue(Storage(std::move(v))); }
  static TypedValue of_string(std::string v) { return TypedValue(Storage(std::move(v))); }
  static TypedValue of_handle(uint64_t v) { return TypedValue(Storage(v)); }

  Tag tag() const { return static_cast<Tag>(value_.index() + 1); }

  int32_t as_i32() const { return get<int32_t>("i32"); }
  int64_t as_i64() const { return get<int64_t>("i64"); }
  float as_f32() const { return get<float>("f32"); }
  double as_f64() const { return get<double>("f64"); }
  const std::vector<uint8_t>& as_bytes() const { return get<std::vector<uint8_t>>("bytes"); }
  const std::string& as_string() const { return get<std::string>("string"); }
  uint64_t as_handle() const { return get<uint64_t>("handle"); }

  const Storage& storage() const { return value_; }

  bool operator==(const TypedValue&) const = default;

 private:
  explicit TypedValue(Storage v) : value_(std::move(v)) {}

  template <typename T>
  const T& get(const char* want) const {
    if (!std::holds_alternative<T>(value_))
      fail(ErrorCode::argument, std::string("typed value is not ") + want);
    return std::get<T>(value_);
  }

  Storage value_;
};

enum class Direction : uint8_t { in = 0, out = 1, inout = 2 };

struct BufferRef {
  uint64_t buffer_id = 0;
  Direction dir = Direction::in;
  bool operator==(const BufferRef&) const = default;
};

struct ApiCallBody {
  std::string function_name;
  std::vector<TypedValue> args;
  std::vector<BufferRef> buffer_refs;
  bool operator==(const ApiCallBody&) const = default;
};

struct ApiResultBody {
  std::vector<TypedValue> results;
  bool operator==(const ApiResultBody&) const = default;
};

struct DeviceDescriptor {
  uint32_t local_index = 0;
  DeviceType type = DeviceType::cpu;
  double relative_throughput = 1.0;
  bool operator==(const DeviceDescriptor&) const = default;
};

struct DeviceListBody {
  std::vector<DeviceDescriptor> devices;
  bool operator==(const DeviceListBody&) const = default;
};

// One chunk of a bulk buffer transfer.
struct DataPackage {
  uint64_t buffer_id = 0;
  uint64_t offset = 0;
  uint64_t total_len = 0;
  std::vector<uint8_t> payload;
  bool operator==(const DataPackage&) const = default;
};

struct DataAckBody {
  uint64_t buffer_id = 0;
  uint64_t received_len = 0;  // total bytes of the completed buffer
  bool operator==(const DataAckBody&) const = default;
};

struct ErrorBody {
  uint16_t code = 0;  // ErrorCode value, kept raw so unknown codes survive
  std::string message;
  bool operator==(const ErrorBody&) const = default;
};

using Body = std::variant<std::monostate, ApiCallBody, ApiResultBody,
                          DeviceListBody, DataPackage, DataAckBody, ErrorBody>;

struct Message {
  uint8_t version = kProtocolVersion;
  MsgKind kind = MsgKind::Ping;
  uint64_t call_id = 0;
  Body body;

  bool operator==(const Message&) const = default;

  static Message ping(uint64_t call_id) { return Message{kProtocolVersion, MsgKind::Ping, call_id, {}}; }
  static Message pong(uint64_t call_id) { return Message{kProtocolVersion, MsgKind::Pong, call_id, {}}; }
  static Message shutdown(uint64_t call_id) { return Message{kProtocolVersion, MsgKind::Shutdown, call_id, {}}; }
  static Message device_id_request(uint64_t call_id) {
    return Message{kProtocolVersion, MsgKind::DeviceIdRequest, call_id, {}};
  }
  static Message error_reply(uint64_t call_id, ErrorCode code, std::string msg) {
    return Message{kProtocolVersion, MsgKind::ErrorReply, call_id,
                   ErrorBody{static_cast<uint16_t>(code), std::move(msg)}};
  }
};

// The one legal response kind for each request kind (ErrorReply is legal
// for every request).
std::optional<MsgKind> response_kind_for(MsgKind request);

// Serializes one frame. Throws Error(encoding) if the body does not fit
// the 4-byte length field, Error(malformed) if kind and body disagree.
std::vector<uint8_t> encode(const Message& msg);

struct Decoded {
  Message message;
  size_t consumed = 0;
};

// Decodes one frame from the front of `bytes`. Returns nullopt when the
// buffer holds only a partial frame (caller retries with more bytes).
// Throws Error(protocol|version|malformed) on unrecoverable input.
std::optional<Decoded> decode(std::span<const uint8_t> bytes);

// Splits `data` into DataPackages of `chunk_size` bytes (the last one may
// be shorter). Empty data yields a single empty package with total_len 0.
std::vector<DataPackage> chunk_buffer(uint64_t buffer_id,
                                      std::span<const uint8_t> data,
                                      size_t chunk_size = kDefaultChunkSize);

}  // namespace haocl::wire
