#include "haocl/error.hpp"

namespace haocl {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::internal: return "internal";
    case ErrorCode::protocol: return "protocol-mismatch";
    case ErrorCode::version: return "version";
    case ErrorCode::malformed: return "malformed-message";
    case ErrorCode::encoding: return "encoding-overflow";
    case ErrorCode::unknown_call: return "unknown-call";
    case ErrorCode::busy: return "busy";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::reassembly_conflict: return "reassembly-conflict";
    case ErrorCode::argument: return "argument";
    case ErrorCode::name: return "name";
    case ErrorCode::config: return "config";
    case ErrorCode::connect: return "connect";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::transport: return "transport";
    case ErrorCode::remote: return "remote";
    case ErrorCode::handle: return "released-handle";
    case ErrorCode::policy: return "policy";
    case ErrorCode::size: return "size";
    case ErrorCode::mapping: return "mapping";
    case ErrorCode::unknown_device: return "unknown-device";
    case ErrorCode::registration: return "registration";
    case ErrorCode::contract: return "contract";
    case ErrorCode::parse: return "parse";
  }
  return "error";
}

}  // namespace haocl
