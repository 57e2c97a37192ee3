#include "haocl/api.hpp"

#include "haocl/error.hpp"
#include "haocl/kernels.hpp"

namespace haocl {

using wire::ApiCallBody;
using wire::ApiResultBody;
using wire::TypedValue;

ApiCallBody make_alloc_buffer(uint64_t buffer_id, uint64_t size) {
  ApiCallBody body;
  body.function_name = "alloc_buffer";
  body.args = {TypedValue::of_handle(buffer_id), TypedValue::of_i64(static_cast<int64_t>(size))};
  body.buffer_refs = {{buffer_id, wire::Direction::out}};
  return body;
}

ApiCallBody make_read_buffer(uint64_t buffer_id) {
  ApiCallBody body;
  body.function_name = "read_buffer";
  body.args = {TypedValue::of_handle(buffer_id)};
  body.buffer_refs = {{buffer_id, wire::Direction::in}};
  return body;
}

ApiCallBody make_release_object(uint64_t object_id) {
  ApiCallBody body;
  body.function_name = "release_object";
  body.args = {TypedValue::of_handle(object_id)};
  return body;
}

ApiCallBody make_query_registry(const std::string& bundle) {
  ApiCallBody body;
  body.function_name = "query_registry";
  body.args = {TypedValue::of_string(bundle)};
  return body;
}

ApiCallBody make_launch_kernel(const KernelTask& task, uint32_t local_device) {
  const auto* sig = kernels::find_kernel(kernels::kCoreBundle, task.kernel_name);
  if (!sig) fail(ErrorCode::name, "unknown kernel '" + task.kernel_name + "'");
  if (task.args.size() != sig->arity())
    fail(ErrorCode::argument, task.kernel_name + ": expected " + std::to_string(sig->arity()) +
                                  " bound arguments");

  ApiCallBody body;
  body.function_name = "launch_kernel";
  body.args.push_back(TypedValue::of_string(task.kernel_name));
  body.args.push_back(TypedValue::of_string(task.user_id));
  body.args.push_back(TypedValue::of_i32(task.shared_flag ? 1 : 0));
  body.args.push_back(TypedValue::of_i32(static_cast<int32_t>(local_device)));
  body.args.push_back(TypedValue::of_i32(static_cast<int32_t>(task.dims)));
  for (uint64_t extent : task.global_size)
    body.args.push_back(TypedValue::of_i64(static_cast<int64_t>(extent)));
  body.args.push_back(TypedValue::of_i32(static_cast<int32_t>(task.args.size())));
  for (size_t i = 0; i < task.args.size(); ++i) {
    body.args.push_back(task.args[i]);
    if (task.args[i].tag() == TypedValue::Tag::handle) {
      wire::Direction dir = sig->args[i] == kernels::ArgKind::buffer_out
                                ? wire::Direction::out
                                : wire::Direction::in;
      body.buffer_refs.push_back({task.args[i].as_handle(), dir});
    }
  }
  return body;
}

LaunchRequest parse_launch_kernel(const ApiCallBody& body) {
  if (body.function_name != "launch_kernel")
    fail(ErrorCode::argument, "not a launch_kernel body");
  if (body.args.size() < 9) fail(ErrorCode::malformed, "launch_kernel: short argument list");

  LaunchRequest req;
  size_t at = 0;
  req.task.kernel_name = body.args[at++].as_string();
  req.task.user_id = body.args[at++].as_string();
  req.task.shared_flag = body.args[at++].as_i32() != 0;
  req.local_device = static_cast<uint32_t>(body.args[at++].as_i32());
  req.task.dims = static_cast<uint32_t>(body.args[at++].as_i32());
  for (int i = 0; i < 3; ++i)
    req.task.global_size[i] = static_cast<uint64_t>(body.args[at++].as_i64());
  int32_t nargs = body.args[at++].as_i32();
  if (nargs < 0 || body.args.size() != at + static_cast<size_t>(nargs))
    fail(ErrorCode::malformed, "launch_kernel: argument count mismatch");
  req.task.args.assign(body.args.begin() + at, body.args.end());
  req.task.placement = Placement::explicit_on(-1);  // placement was resolved host-side
  return req;
}

ApiResultBody make_registry_reply(const std::vector<RegistryEntry>& entries) {
  ApiResultBody body;
  body.results.push_back(TypedValue::of_i32(static_cast<int32_t>(entries.size())));
  for (const auto& entry : entries) {
    body.results.push_back(TypedValue::of_string(entry.name));
    body.results.push_back(TypedValue::of_i32(static_cast<int32_t>(entry.arity)));
  }
  return body;
}

std::vector<RegistryEntry> parse_registry_reply(const ApiResultBody& body) {
  if (body.results.empty()) fail(ErrorCode::malformed, "registry reply: empty");
  int32_t count = body.results[0].as_i32();
  if (count < 0 || body.results.size() != 1 + 2 * static_cast<size_t>(count))
    fail(ErrorCode::malformed, "registry reply: shape mismatch");
  std::vector<RegistryEntry> entries;
  entries.reserve(count);
  for (int32_t i = 0; i < count; ++i) {
    RegistryEntry entry;
    entry.name = body.results[1 + 2 * i].as_string();
    entry.arity = static_cast<uint32_t>(body.results[2 + 2 * i].as_i32());
    entries.push_back(entry);
  }
  return entries;
}

}  // namespace haocl
