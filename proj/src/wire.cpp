#include "haocl/wire.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace haocl::wire {

namespace {

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<uint8_t>(v >> shift));
}

void put_blob(std::vector<uint8_t>& out, const uint8_t* data, size_t len) {
  if (len > std::numeric_limits<uint32_t>::max())
    fail(ErrorCode::encoding, "blob exceeds 32-bit length prefix");
  put_u32(out, static_cast<uint32_t>(len));
  out.insert(out.end(), data, data + len);
}

void put_string(std::vector<uint8_t>& out, const std::string& s) {
  put_blob(out, reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

// Bounds-checked big-endian reader over one frame body.
class Reader {
 public:
  Reader(const uint8_t* data, size_t len) : data_(data), len_(len) {}

  uint8_t u8() { return take(1)[0]; }

  uint16_t u16() {
    const uint8_t* p = take(2);
    return static_cast<uint16_t>((p[0] << 8) | p[1]);
  }

  uint32_t u32() {
    const uint8_t* p = take(4);
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
  }

  uint64_t u64() {
    const uint8_t* p = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
  }

  std::vector<uint8_t> blob() {
    uint32_t n = u32();
    const uint8_t* p = take(n);
    return std::vector<uint8_t>(p, p + n);
  }

  std::string str() {
    uint32_t n = u32();
    const uint8_t* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  std::vector<uint8_t> rest() {
    std::vector<uint8_t> v(data_ + pos_, data_ + len_);
    pos_ = len_;
    return v;
  }

  bool done() const { return pos_ == len_; }

 private:
  const uint8_t* take(size_t n) {
    if (pos_ + n > len_) fail(ErrorCode::malformed, "body truncated");
    const uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  const uint8_t* data_;
  size_t len_;
  size_t pos_ = 0;
};

void encode_typed_value(std::vector<uint8_t>& out, const TypedValue& v) {
  put_u8(out, static_cast<uint8_t>(v.tag()));
  switch (v.tag()) {
    case TypedValue::Tag::i32:
      put_u32(out, static_cast<uint32_t>(v.as_i32()));
      break;
    case TypedValue::Tag::i64:
      put_u64(out, static_cast<uint64_t>(v.as_i64()));
      break;
    case TypedValue::Tag::f32:
      put_u32(out, std::bit_cast<uint32_t>(v.as_f32()));
      break;
    case TypedValue::Tag::f64:
      put_u64(out, std::bit_cast<uint64_t>(v.as_f64()));
      break;
    case TypedValue::Tag::bytes:
      put_blob(out, v.as_bytes().data(), v.as_bytes().size());
      break;
    case TypedValue::Tag::string:
      put_string(out, v.as_string());
      break;
    case TypedValue::Tag::handle:
      put_u64(out, v.as_handle());
      break;
  }
}

TypedValue decode_typed_value(Reader& r) {
  uint8_t tag = r.u8();
  switch (static_cast<TypedValue::Tag>(tag)) {
    case TypedValue::Tag::i32:
      return TypedValue::of_i32(static_cast<int32_t>(r.u32()));
    case TypedValue::Tag::i64:
      return TypedValue::of_i64(static_cast<int64_t>(r.u64()));
    case TypedValue::Tag::f32:
      return TypedValue::of_f32(std::bit_cast<float>(r.u32()));
    case TypedValue::Tag::f64:
      return TypedValue::of_f64(std::bit_cast<double>(r.u64()));
    case TypedValue::Tag::bytes:
      return TypedValue::of_bytes(r.blob());
    case TypedValue::Tag::string:
      return TypedValue::of_string(r.str());
    case TypedValue::Tag::handle:
      return TypedValue::of_handle(r.u64());
  }
  fail(ErrorCode::malformed, "unknown value tag " + std::to_string(tag));
}

void encode_body(std::vector<uint8_t>& out, const Message& msg) {
  switch (msg.kind) {
    case MsgKind::Ping:
    case MsgKind::Pong:
    case MsgKind::Shutdown:
    case MsgKind::DeviceIdRequest:
      if (!std::holds_alternative<std::monostate>(msg.body))
        fail(ErrorCode::malformed, "message kind carries no body");
      return;
    case MsgKind::ApiCallRequest: {
      const auto* call = std::get_if<ApiCallBody>(&msg.body);
      if (!call) fail(ErrorCode::malformed, "ApiCallRequest requires an ApiCallBody");
      put_string(out, call->function_name);
      put_u32(out, static_cast<uint32_t>(call->args.size()));
      for (const auto& arg : call->args) encode_typed_value(out, arg);
      put_u32(out, static_cast<uint32_t>(call->buffer_refs.size()));
      for (const auto& ref : call->buffer_refs) {
        put_u64(out, ref.buffer_id);
        put_u8(out, static_cast<uint8_t>(ref.dir));
      }
      return;
    }
    case MsgKind::ApiCallResponse: {
      const auto* result = std::get_if<ApiResultBody>(&msg.body);
      if (!result) fail(ErrorCode::malformed, "ApiCallResponse requires an ApiResultBody");
      put_u32(out, static_cast<uint32_t>(result->results.size()));
      for (const auto& v : result->results) encode_typed_value(out, v);
      return;
    }
    case MsgKind::DeviceIdResponse: {
      const auto* list = std::get_if<DeviceListBody>(&msg.body);
      if (!list) fail(ErrorCode::malformed, "DeviceIdResponse requires a DeviceListBody");
      put_u32(out, static_cast<uint32_t>(list->devices.size()));
      for (const auto& d : list->devices) {
        put_u32(out, d.local_index);
        put_u8(out, static_cast<uint8_t>(d.type));
        put_u64(out, std::bit_cast<uint64_t>(d.relative_throughput));
      }
      return;
    }
    case MsgKind::DataTransfer: {
      const auto* pkg = std::get_if<DataPackage>(&msg.body);
      if (!pkg) fail(ErrorCode::malformed, "DataTransfer requires a DataPackage");
      if (pkg->offset + pkg->payload.size() > pkg->total_len)
        fail(ErrorCode::malformed, "data package exceeds total_len");
      put_u64(out, pkg->buffer_id);
      put_u64(out, pkg->offset);
      put_u64(out, pkg->total_len);
      out.insert(out.end(), pkg->payload.begin(), pkg->payload.end());
      return;
    }
    case MsgKind::DataAck: {
      const auto* ack = std::get_if<DataAckBody>(&msg.body);
      if (!ack) fail(ErrorCode::malformed, "DataAck requires a DataAckBody");
      put_u64(out, ack->buffer_id);
      put_u64(out, ack->received_len);
      return;
    }
    case MsgKind::ErrorReply: {
      const auto* err = std::get_if<ErrorBody>(&msg.body);
      if (!err) fail(ErrorCode::malformed, "ErrorReply requires an ErrorBody");
      put_u16(out, err->code);
      put_string(out, err->message);
      return;
    }
  }
  fail(ErrorCode::malformed, "unknown message kind");
}

Body decode_body(MsgKind kind, Reader& r) {
  switch (kind) {
    case MsgKind::Ping:
    case MsgKind::Pong:
    case MsgKind::Shutdown:
    case MsgKind::DeviceIdRequest:
      if (!r.done()) fail(ErrorCode::malformed, "unexpected body bytes");
      return std::monostate{};
    case MsgKind::ApiCallRequest: {
      ApiCallBody call;
      call.function_name = r.str();
      uint32_t nargs = r.u32();
      call.args.reserve(nargs);
      for (uint32_t i = 0; i < nargs; ++i) call.args.push_back(decode_typed_value(r));
      uint32_t nrefs = r.u32();
      call.buffer_refs.reserve(nrefs);
      for (uint32_t i = 0; i < nrefs; ++i) {
        BufferRef ref;
        ref.buffer_id = r.u64();
        uint8_t dir = r.u8();
        if (dir > 2) fail(ErrorCode::malformed, "bad buffer direction");
        ref.dir = static_cast<Direction>(dir);
        call.buffer_refs.push_back(ref);
      }
      return call;
    }
    case MsgKind::ApiCallResponse: {
      ApiResultBody result;
      uint32_t n = r.u32();
      result.results.reserve(n);
      for (uint32_t i = 0; i < n; ++i) result.results.push_back(decode_typed_value(r));
      return result;
    }
    case MsgKind::DeviceIdResponse: {
      DeviceListBody list;
      uint32_t n = r.u32();
      list.devices.reserve(n);
      for (uint32_t i = 0; i < n; ++i) {
        DeviceDescriptor d;
        d.local_index = r.u32();
        uint8_t type = r.u8();
        if (type > 2) fail(ErrorCode::malformed, "bad device type");
        d.type = static_cast<DeviceType>(type);
        d.relative_throughput = std::bit_cast<double>(r.u64());
        list.devices.push_back(d);
      }
      return list;
    }
    case MsgKind::DataTransfer: {
      DataPackage pkg;
      pkg.buffer_id = r.u64();
      pkg.offset = r.u64();
      pkg.total_len = r.u64();
      pkg.payload = r.rest();
      if (pkg.offset + pkg.payload.size() > pkg.total_len)
        fail(ErrorCode::malformed, "data package exceeds total_len");
      return pkg;
    }
    case MsgKind::DataAck: {
      DataAckBody ack;
      ack.buffer_id = r.u64();
      ack.received_len = r.u64();
      return ack;
    }
    case MsgKind::ErrorReply: {
      ErrorBody err;
      err.code = r.u16();
      err.message = r.str();
      return err;
    }
  }
  fail(ErrorCode::malformed, "unreached");
}

}  // namespace

const char* msg_kind_name(MsgKind kind) {
  switch (kind) {
    case MsgKind::ApiCallRequest: return "ApiCallRequest";
    case MsgKind::ApiCallResponse: return "ApiCallResponse";
    case MsgKind::DeviceIdRequest: return "DeviceIdRequest";
    case MsgKind::DeviceIdResponse: return "DeviceIdResponse";
    case MsgKind::DataTransfer: return "DataTransfer";
    case MsgKind::DataAck: return "DataAck";
    case MsgKind::ErrorReply: return "ErrorReply";
    case MsgKind::Ping: return "Ping";
    case MsgKind::Pong: return "Pong";
    case MsgKind::Shutdown: return "Shutdown";
  }
  return "?";
}

const char* device_type_name(DeviceType type) {
  switch (type) {
    case DeviceType::cpu: return "cpu";
    case DeviceType::gpu: return "gpu";
    case DeviceType::fpga: return "fpga";
  }
  return "?";
}

std::optional<DeviceType> parse_device_type(const std::string& word) {
  if (word == "cpu") return DeviceType::cpu;
  if (word == "gpu") return DeviceType::gpu;
  if (word == "fpga") return DeviceType::fpga;
  return std::nullopt;
}

std::optional<MsgKind> response_kind_for(MsgKind request) {
  switch (request) {
    case MsgKind::ApiCallRequest: return MsgKind::ApiCallResponse;
    case MsgKind::DeviceIdRequest: return MsgKind::DeviceIdResponse;
    case MsgKind::DataTransfer: return MsgKind::DataAck;
    case MsgKind::Ping: return MsgKind::Pong;
    default: return std::nullopt;
  }
}

std::vector<uint8_t> encode(const Message& msg) {
  std::vector<uint8_t> body;
  encode_body(body, msg);
  if (body.size() > std::numeric_limits<uint32_t>::max())
    fail(ErrorCode::encoding, "body exceeds the 4-byte length field");

  std::vector<uint8_t> frame;
  frame.reserve(kHeaderSize + body.size());
  frame.insert(frame.end(), kMagic, kMagic + 4);
  put_u8(frame, msg.version);
  put_u8(frame, static_cast<uint8_t>(msg.kind));
  put_u64(frame, msg.call_id);
  put_u32(frame, static_cast<uint32_t>(body.size()));
  frame.insert(frame.end(), body.begin(), body.end());
  return frame;
}

std::optional<Decoded> decode(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    // Reject a bad magic as soon as the prefix shows it, even on a short read.
    for (size_t i = 0; i < bytes.size() && i < 4; ++i)
      if (bytes[i] != kMagic[i]) fail(ErrorCode::protocol, "bad magic");
    return std::nullopt;
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    fail(ErrorCode::protocol, "bad magic");
  uint8_t version = bytes[4];
  if (version != kProtocolVersion)
    fail(ErrorCode::version, "unsupported protocol version " + std::to_string(version));
  uint8_t kind_byte = bytes[5];
  if (kind_byte < 1 || kind_byte > 10)
    fail(ErrorCode::malformed, "unknown message kind " + std::to_string(kind_byte));

  uint64_t call_id = 0;
  for (int i = 0; i < 8; ++i) call_id = (call_id << 8) | bytes[6 + i];
  uint32_t body_len = (static_cast<uint32_t>(bytes[14]) << 24) |
                      (static_cast<uint32_t>(bytes[15]) << 16) |
                      (static_cast<uint32_t>(bytes[16]) << 8) |
                      static_cast<uint32_t>(bytes[17]);
  if (bytes.size() < kHeaderSize + body_len) return std::nullopt;

  Reader r(bytes.data() + kHeaderSize, body_len);
  Message msg;
  msg.version = version;
  msg.kind = static_cast<MsgKind>(kind_byte);
  msg.call_id = call_id;
  msg.body = decode_body(msg.kind, r);
  if (!r.done()) fail(ErrorCode::malformed, "trailing bytes in body");
  return Decoded{std::move(msg), kHeaderSize + body_len};
}

std::vector<DataPackage> chunk_buffer(uint64_t buffer_id,
                                      std::span<const uint8_t> data,
                                      size_t chunk_size) {
  if (chunk_size < 1) fail(ErrorCode::argument, "chunk_size must be >= 1");
  std::vector<DataPackage> packages;
  if (data.empty()) {
    packages.push_back(DataPackage{buffer_id, 0, 0, {}});
    return packages;
  }
  for (size_t off = 0; off < data.size(); off += chunk_size) {
    size_t len = std::min(chunk_size, data.size() - off);
    packages.push_back(DataPackage{buffer_id, off, data.size(),
                                   std::vector<uint8_t>(data.begin() + off, data.begin() + off + len)});
  }
  return packages;
}

}  // namespace haocl::wire
