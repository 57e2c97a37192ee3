#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace haocl {

// Error categories used across the runtime. The numeric values of codes
// that travel inside ErrorReply frames are part of the wire contract.
enum class ErrorCode : uint16_t {
  internal = 0,
  protocol = 1,            // bad magic
  version = 2,             // unsupported protocol version
  malformed = 3,           // unknown kind / undecodable body
  encoding = 4,            // body exceeds the frame length field
  unknown_call = 5,        // function_name not in the dispatch table
  busy = 6,                // non-shared device held by another user
  precondition = 7,        // missing input buffer, bad scalar, ...
  reassembly_conflict = 8, // overlapping chunk with different bytes
  argument = 9,            // kernel argument/size violation
  name = 10,               // unknown bundle/kernel name
  config = 11,
  connect = 12,
  timeout = 13,
  transport = 14,
  remote = 15,             // remote ErrorReply with an unrecognized code
  handle = 16,             // released or unknown handle
  policy = 17,
  size = 18,
  mapping = 19,            // static_map has no entry for the kernel
  unknown_device = 20,
  registration = 21,
  contract = 22,           // caller violated a documented contract
  parse = 23,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace haocl
