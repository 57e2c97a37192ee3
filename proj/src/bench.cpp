#include "haocl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "haocl/datagen.hpp"
#include "haocl/error.hpp"
#include "haocl/kernels.hpp"
#include "haocl/reference.hpp"

namespace haocl::bench {

using Clock = std::chrono::steady_clock;
using json = nlohmann::ordered_json;
using wire::TypedValue;

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::pair<int64_t, int64_t> block_range(int64_t total, int parts, int index) {
  return {total * index / parts, total * (index + 1) / parts};
}

uint64_t fnv1a(std::span<const uint8_t> bytes, uint64_t h = 0xcbf29ce484222325ULL) {
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Handle buffer_of(HostContext& ctx, std::span<const uint8_t> bytes) {
  return ctx.create_buffer(bytes.size());
}

TaskEstimate make_estimate(HostContext& ctx, const KernelTask& task) {
  const auto* sig = kernels::find_kernel(kernels::kCoreBundle, task.kernel_name);
  TaskEstimate estimate;
  std::vector<int64_t> scalars;
  std::vector<uint64_t> sizes;
  for (size_t i = 0; i < task.args.size(); ++i) {
    const auto& arg = task.args[i];
    if (arg.tag() == TypedValue::Tag::handle) {
      uint64_t size = ctx.buffer_size(Handle{HandleKind::buffer, arg.as_handle()});
      sizes.push_back(size);
      if (sig->args[i] == kernels::ArgKind::buffer_out)
        estimate.out_bytes += size;
      else
        estimate.in_bytes += size;
    } else if (arg.tag() == TypedValue::Tag::i64) {
      scalars.push_back(arg.as_i64());
    }
  }
  estimate.work_units =
      static_cast<double>(kernels::work_estimate(task.kernel_name, scalars, sizes));
  return estimate;
}

// One partitioned stage: a task per part, each on its policy-chosen device.
struct StageUnit {
  KernelTask task;
  std::string label;
  int device = -1;
  Handle queue;
};

// Placement: the default user_directed policy spreads part i onto device
// ids[i mod N]; any other policy is consulted per task.
void resolve_placement(HostContext& ctx, const std::string& policy,
                       std::vector<StageUnit>& units) {
  auto ids = ctx.get_device_ids();
  for (size_t i = 0; i < units.size(); ++i) {
    if (policy == "user_directed") {
      units[i].device = ids[i % ids.size()];
      units[i].task.placement = Placement::explicit_on(units[i].device);
    } else {
      units[i].task.placement = Placement::auto_with(policy);
      units[i].device = ctx.scheduler().schedule(units[i].task, make_estimate(ctx, units[i].task));
    }
    units[i].queue = ctx.create_queue(units[i].device);
  }
}

struct StageTiming {
  double compute_interval_ms = 0.0;
  double modeled_ms = 0.0;  // max over parallel workers
};

// Launches every unit in parallel (one worker per unit) and joins.
StageTiming launch_stage(HostContext& ctx, std::vector<StageUnit>& units) {
  auto started = Clock::now();
  if (units.size() == 1) {
    ctx.launch_task(units[0].queue, units[0].task);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(units.size());
    for (size_t i = 0; i < units.size(); ++i)
      workers.emplace_back([&, i] {
        try {
          ctx.launch_task(units[i].queue, units[i].task);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    for (auto& w : workers) w.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  StageTiming timing;
  timing.compute_interval_ms = ms_since(started);
  for (auto& unit : units) {
    TimingFragment fragment = ctx.finish(unit.queue);
    timing.modeled_ms = std::max(timing.modeled_ms, fragment.modeled_ms);
  }
  return timing;
}

void cleanup_stage(HostContext& ctx, std::vector<StageUnit>& units,
                   const std::vector<Handle>& buffers) {
  for (auto& unit : units) ctx.release(unit.queue);
  for (const auto& buffer : buffers) ctx.release(buffer);
}

void log_placement(RunReport& report, const std::vector<StageUnit>& units) {
  for (const auto& unit : units) report.placement.push_back({unit.label, unit.device});
}

// --- per-benchmark runners ---------------------------------------------

void run_matmul(HostContext& ctx, const BenchParams& p, RunReport& report) {
  auto t = Clock::now();
  std::vector<double> a = gen_doubles(static_cast<size_t>(p.m * p.k), p.seed);
  std::vector<double> b = gen_doubles(static_cast<size_t>(p.k * p.n), p.seed + 1);
  report.timing.data_creation_ms += ms_since(t);

  auto a_bytes = to_bytes(std::span<const double>(a));
  auto b_bytes = to_bytes(std::span<const double>(b));

  std::vector<StageUnit> units;
  std::vector<Handle> buffers;
  std::vector<std::array<Handle, 3>> part_buffers;
  for (int i = 0; i < p.partition; ++i) {
    auto [lo, hi] = block_range(p.m, p.partition, i);
    Handle ba = ctx.create_buffer(static_cast<uint64_t>((hi - lo) * p.k) * 8);
    Handle bb = buffer_of(ctx, b_bytes);
    Handle bc = ctx.create_buffer(static_cast<uint64_t>((hi - lo) * p.n) * 8);
    part_buffers.push_back({ba, bb, bc});
    buffers.insert(buffers.end(), {ba, bb, bc});
    StageUnit unit;
    unit.label = "matmul[" + std::to_string(i) + "]";
    unit.task.kernel_name = "matmul";
    unit.task.args = {TypedValue::of_handle(ba.id), TypedValue::of_handle(bb.id),
                      TypedValue::of_handle(bc.id), TypedValue::of_i64(hi - lo),
                      TypedValue::of_i64(p.k), TypedValue::of_i64(p.n)};
    unit.task.global_size = {static_cast<uint64_t>(hi - lo), static_cast<uint64_t>(p.n), 1};
    unit.task.dims = 2;
    units.push_back(std::move(unit));
  }
  resolve_placement(ctx, p.policy, units);
  log_placement(report, units);

  t = Clock::now();
  for (int i = 0; i < p.partition; ++i) {
    auto [lo, hi] = block_range(p.m, p.partition, i);
    std::span<const uint8_t> a_block(a_bytes.data() + lo * p.k * 8,
                                     static_cast<size_t>((hi - lo) * p.k) * 8);
    ctx.enqueue_write_buffer(units[i].queue, part_buffers[i][0], a_block);
    ctx.enqueue_write_buffer(units[i].queue, part_buffers[i][1], b_bytes);
  }
  report.timing.transfer_ms += ms_since(t);

  StageTiming stage = launch_stage(ctx, units);
  report.timing.compute_ms += stage.compute_interval_ms;
  report.timing.modeled_compute_ms += stage.modeled_ms;

  t = Clock::now();
  std::vector<uint8_t> c_bytes(static_cast<size_t>(p.m * p.n) * 8);
  for (int i = 0; i < p.partition; ++i) {
    auto [lo, hi] = block_range(p.m, p.partition, i);
    auto part = ctx.enqueue_read_buffer(units[i].queue, part_buffers[i][2]);
    std::copy(part.begin(), part.end(), c_bytes.begin() + lo * p.n * 8);
  }
  report.timing.transfer_ms += ms_since(t);

  cleanup_stage(ctx, units, buffers);

  std::vector<double> expected(static_cast<size_t>(p.m * p.n));
  ref::matmul(a.data(), b.data(), expected.data(), p.m, p.k, p.n);
  report.verify_pass = to_bytes(std::span<const double>(expected)) == c_bytes;
  report.result_digest = hex64(fnv1a(c_bytes));
}

void run_spmv(HostContext& ctx, const BenchParams& p, RunReport& report) {
  auto t = Clock::now();
  Csr csr = gen_csr(p.rows, p.cols, p.density, p.seed);
  std::vector<double> x = gen_doubles(static_cast<size_t>(p.cols), p.seed + 1);
  report.timing.data_creation_ms += ms_since(t);

  // Stage 1: nnz-balancing row partition.
  auto hdr_bytes = to_bytes(std::span<const int64_t>(csr.header()));
  auto row_ptr_bytes = to_bytes(std::span<const int64_t>(csr.row_ptr));
  Handle b_hdr = buffer_of(ctx, hdr_bytes);
  Handle b_row_ptr = buffer_of(ctx, row_ptr_bytes);
  Handle b_ranges = ctx.create_buffer(static_cast<uint64_t>(p.partition + 1) * 8);

  std::vector<StageUnit> part_units(1);
  part_units[0].label = "spmv_partition";
  part_units[0].task.kernel_name = "spmv_partition";
  part_units[0].task.args = {TypedValue::of_handle(b_hdr.id), TypedValue::of_handle(b_row_ptr.id),
                             TypedValue::of_i64(p.partition), TypedValue::of_handle(b_ranges.id)};
  resolve_placement(ctx, p.policy, part_units);
  log_placement(report, part_units);

  t = Clock::now();
  ctx.enqueue_write_buffer(part_units[0].queue, b_hdr, hdr_bytes);
  ctx.enqueue_write_buffer(part_units[0].queue, b_row_ptr, row_ptr_bytes);
  report.timing.transfer_ms += ms_since(t);

  StageTiming stage1 = launch_stage(ctx, part_units);
  report.timing.compute_ms += stage1.compute_interval_ms;
  report.timing.modeled_compute_ms += stage1.modeled_ms;

  t = Clock::now();
  auto ranges = i64_from_bytes(ctx.enqueue_read_buffer(part_units[0].queue, b_ranges));
  report.timing.transfer_ms += ms_since(t);
  cleanup_stage(ctx, part_units, {b_hdr, b_row_ptr, b_ranges});

  // Stage 2: each part gets its row slice of the matrix, rebased to row 0.
  auto x_bytes = to_bytes(std::span<const double>(x));
  std::vector<StageUnit> units;
  std::vector<Handle> buffers;
  struct PartData {
    std::vector<uint8_t> hdr, row_ptr, col_idx, values;
    std::array<Handle, 6> handles;  // hdr, row_ptr, col_idx, values, x, y
    int64_t lo = 0, hi = 0;
  };
  std::vector<PartData> parts(p.partition);
  for (int i = 0; i < p.partition; ++i) {
    PartData& part = parts[i];
    part.lo = ranges[i];
    part.hi = ranges[i + 1];
    int64_t rows_i = part.hi - part.lo;
    int64_t first = csr.row_ptr[part.lo];
    int64_t last = csr.row_ptr[part.hi];
    std::vector<int64_t> hdr_i = {rows_i, p.cols};
    std::vector<int64_t> rp_i(rows_i + 1);
    for (int64_t r = 0; r <= rows_i; ++r) rp_i[r] = csr.row_ptr[part.lo + r] - first;
    part.hdr = to_bytes(std::span<const int64_t>(hdr_i));
    part.row_ptr = to_bytes(std::span<const int64_t>(rp_i));
    part.col_idx = to_bytes(std::span<const int64_t>(csr.col_idx).subspan(first, last - first));
    part.values = to_bytes(std::span<const double>(csr.values).subspan(first, last - first));
    part.handles = {buffer_of(ctx, part.hdr),    buffer_of(ctx, part.row_ptr),
                    buffer_of(ctx, part.col_idx), buffer_of(ctx, part.values),
                    buffer_of(ctx, x_bytes),
                    ctx.create_buffer(static_cast<uint64_t>(rows_i) * 8)};
    for (const auto& h : part.handles) buffers.push_back(h);

    StageUnit unit;
    unit.label = "spmv_compute[" + std::to_string(i) + "]";
    unit.task.kernel_name = "spmv_compute";
    unit.task.args = {TypedValue::of_handle(part.handles[0].id),
                      TypedValue::of_handle(part.handles[1].id),
                      TypedValue::of_handle(part.handles[2].id),
                      TypedValue::of_handle(part.handles[3].id),
                      TypedValue::of_handle(part.handles[4].id),
                      TypedValue::of_i64(0),
                      TypedValue::of_i64(rows_i),
                      TypedValue::of_handle(part.handles[5].id)};
    units.push_back(std::move(unit));
  }
  resolve_placement(ctx, p.policy, units);
  log_placement(report, units);

  t = Clock::now();
  for (int i = 0; i < p.partition; ++i) {
    PartData& part = parts[i];
    ctx.enqueue_write_buffer(units[i].queue, part.handles[0], part.hdr);
    ctx.enqueue_write_buffer(units[i].queue, part.handles[1], part.row_ptr);
    ctx.enqueue_write_buffer(units[i].queue, part.handles[2], part.col_idx);
    ctx.enqueue_write_buffer(units[i].queue, part.handles[3], part.values);
    ctx.enqueue_write_buffer(units[i].queue, part.handles[4], x_bytes);
  }
  report.timing.transfer_ms += ms_since(t);

  StageTiming stage2 = launch_stage(ctx, units);
  report.timing.compute_ms += stage2.compute_interval_ms;
  report.timing.modeled_compute_ms += stage2.modeled_ms;

  t = Clock::now();
  std::vector<uint8_t> y_bytes(static_cast<size_t>(p.rows) * 8);
  for (int i = 0; i < p.partition; ++i) {
    auto slice = ctx.enqueue_read_buffer(units[i].queue, parts[i].handles[5]);
    std::copy(slice.begin(), slice.end(), y_bytes.begin() + parts[i].lo * 8);
  }
  report.timing.transfer_ms += ms_since(t);

  cleanup_stage(ctx, units, buffers);

  std::vector<double> expected(static_cast<size_t>(p.rows));
  ref::spmv(csr.row_ptr.data(), csr.col_idx.data(), csr.values.data(), x.data(), 0, p.rows,
            expected.data());
  report.verify_pass = to_bytes(std::span<const double>(expected)) == y_bytes;
  report.result_digest = hex64(fnv1a(y_bytes));
}

void run_bfs(HostContext& ctx, const BenchParams& p, RunReport& report) {
  auto t = Clock::now();
  Csr adj = gen_graph(p.vertices, p.edges, p.seed);
  int64_t source = 0;
  report.timing.data_creation_ms += ms_since(t);

  auto hdr_bytes = to_bytes(std::span<const int64_t>(adj.header()));
  auto row_ptr_bytes = to_bytes(std::span<const int64_t>(adj.row_ptr));
  auto col_idx_bytes = to_bytes(std::span<const int64_t>(adj.col_idx));
  Handle b_hdr = buffer_of(ctx, hdr_bytes);
  Handle b_row_ptr = buffer_of(ctx, row_ptr_bytes);
  Handle b_col_idx = buffer_of(ctx, col_idx_bytes);
  Handle b_levels = ctx.create_buffer(static_cast<uint64_t>(p.vertices) * 4);

  std::vector<StageUnit> units(1);
  units[0].label = "bfs";
  units[0].task.kernel_name = "bfs";
  units[0].task.args = {TypedValue::of_handle(b_hdr.id), TypedValue::of_handle(b_row_ptr.id),
                        TypedValue::of_handle(b_col_idx.id), TypedValue::of_i64(source),
                        TypedValue::of_handle(b_levels.id)};
  resolve_placement(ctx, p.policy, units);
  log_placement(report, units);

  t = Clock::now();
  ctx.enqueue_write_buffer(units[0].queue, b_hdr, hdr_bytes);
  ctx.enqueue_write_buffer(units[0].queue, b_row_ptr, row_ptr_bytes);
  ctx.enqueue_write_buffer(units[0].queue, b_col_idx, col_idx_bytes);
  report.timing.transfer_ms += ms_since(t);

  StageTiming stage = launch_stage(ctx, units);
  report.timing.compute_ms += stage.compute_interval_ms;
  report.timing.modeled_compute_ms += stage.modeled_ms;

  t = Clock::now();
  auto levels_bytes = ctx.enqueue_read_buffer(units[0].queue, b_levels);
  report.timing.transfer_ms += ms_since(t);

  cleanup_stage(ctx, units, {b_hdr, b_row_ptr, b_col_idx, b_levels});

  auto expected = ref::bfs(p.vertices, adj.row_ptr.data(), adj.col_idx.data(), source);
  report.verify_pass = to_bytes(std::span<const int32_t>(expected)) == levels_bytes;
  report.result_digest = hex64(fnv1a(levels_bytes));
}

void run_knn(HostContext& ctx, const BenchParams& p, RunReport& report) {
  auto t = Clock::now();
  std::vector<double> ref_pts = gen_doubles(static_cast<size_t>(p.knn_r * p.knn_d), p.seed);
  std::vector<double> query_pts = gen_doubles(static_cast<size_t>(p.knn_q * p.knn_d), p.seed + 1);
  report.timing.data_creation_ms += ms_since(t);

  auto query_bytes = to_bytes(std::span<const double>(query_pts));
  auto ref_bytes = to_bytes(std::span<const double>(ref_pts));

  std::vector<StageUnit> units;
  std::vector<Handle> buffers;
  struct PartData {
    int64_t lo = 0, hi = 0, k = 0;
    std::array<Handle, 4> handles;  // ref, query, idx, dist
  };
  std::vector<PartData> parts(p.partition);
  for (int i = 0; i < p.partition; ++i) {
    PartData& part = parts[i];
    std::tie(part.lo, part.hi) = block_range(p.knn_r, p.partition, i);
    int64_t r_i = part.hi - part.lo;
    part.k = std::min<int64_t>(p.knn_k, r_i);
    part.handles = {ctx.create_buffer(static_cast<uint64_t>(r_i * p.knn_d) * 8),
                    buffer_of(ctx, query_bytes),
                    ctx.create_buffer(static_cast<uint64_t>(p.knn_q * part.k) * 4),
                    ctx.create_buffer(static_cast<uint64_t>(p.knn_q * part.k) * 8)};
    for (const auto& h : part.handles) buffers.push_back(h);

    StageUnit unit;
    unit.label = "knn[" + std::to_string(i) + "]";
    unit.task.kernel_name = "knn";
    unit.task.args = {TypedValue::of_handle(part.handles[0].id),
                      TypedValue::of_handle(part.handles[1].id),
                      TypedValue::of_i64(r_i),
                      TypedValue::of_i64(p.knn_q),
                      TypedValue::of_i64(p.knn_d),
                      TypedValue::of_i64(part.k),
                      TypedValue::of_handle(part.handles[2].id),
                      TypedValue::of_handle(part.handles[3].id)};
    units.push_back(std::move(unit));
  }
  resolve_placement(ctx, p.policy, units);
  log_placement(report, units);

  t = Clock::now();
  for (int i = 0; i < p.partition; ++i) {
    std::span<const uint8_t> ref_block(ref_bytes.data() + parts[i].lo * p.knn_d * 8,
                                       static_cast<size_t>((parts[i].hi - parts[i].lo) * p.knn_d) * 8);
    ctx.enqueue_write_buffer(units[i].queue, parts[i].handles[0], ref_block);
    ctx.enqueue_write_buffer(units[i].queue, parts[i].handles[1], query_bytes);
  }
  report.timing.transfer_ms += ms_since(t);

  StageTiming stage = launch_stage(ctx, units);
  report.timing.compute_ms += stage.compute_interval_ms;
  report.timing.modeled_compute_ms += stage.modeled_ms;

  t = Clock::now();
  std::vector<kernels::KnnPartial> partials(p.partition);
  for (int i = 0; i < p.partition; ++i) {
    partials[i].k = parts[i].k;
    partials[i].idx = i32_from_bytes(ctx.enqueue_read_buffer(units[i].queue, parts[i].handles[2]));
    partials[i].dist =
        doubles_from_bytes(ctx.enqueue_read_buffer(units[i].queue, parts[i].handles[3]));
    // globalize the block-local reference indices
    for (auto& idx : partials[i].idx) idx += static_cast<int32_t>(parts[i].lo);
  }
  report.timing.transfer_ms += ms_since(t);

  cleanup_stage(ctx, units, buffers);

  auto merged = kernels::merge_topk(partials, p.knn_q, p.knn_k);

  std::vector<int32_t> expected_idx(static_cast<size_t>(p.knn_q * p.knn_k));
  std::vector<double> expected_dist(static_cast<size_t>(p.knn_q * p.knn_k));
  ref::knn(ref_pts.data(), query_pts.data(), p.knn_r, p.knn_q, p.knn_d, p.knn_k,
           expected_idx.data(), expected_dist.data());
  report.verify_pass = merged.idx == expected_idx && merged.dist == expected_dist;
  auto idx_bytes = to_bytes(std::span<const int32_t>(merged.idx));
  auto dist_bytes = to_bytes(std::span<const double>(merged.dist));
  report.result_digest = hex64(fnv1a(dist_bytes, fnv1a(idx_bytes)));
}

void run_vecadd(HostContext& ctx, const BenchParams& p, RunReport& report) {
  auto t = Clock::now();
  std::vector<double> a = gen_doubles(static_cast<size_t>(p.length), p.seed);
  std::vector<double> b = gen_doubles(static_cast<size_t>(p.length), p.seed + 1);
  report.timing.data_creation_ms += ms_since(t);

  auto a_bytes = to_bytes(std::span<const double>(a));
  auto b_bytes = to_bytes(std::span<const double>(b));

  std::vector<StageUnit> units;
  std::vector<Handle> buffers;
  std::vector<std::array<Handle, 3>> part_buffers;
  for (int i = 0; i < p.partition; ++i) {
    auto [lo, hi] = block_range(p.length, p.partition, i);
    Handle ba = ctx.create_buffer(static_cast<uint64_t>(hi - lo) * 8);
    Handle bb = ctx.create_buffer(static_cast<uint64_t>(hi - lo) * 8);
    Handle bc = ctx.create_buffer(static_cast<uint64_t>(hi - lo) * 8);
    part_buffers.push_back({ba, bb, bc});
    buffers.insert(buffers.end(), {ba, bb, bc});
    StageUnit unit;
    unit.label = "vecadd[" + std::to_string(i) + "]";
    unit.task.kernel_name = "vecadd";
    unit.task.args = {TypedValue::of_handle(ba.id), TypedValue::of_handle(bb.id),
                      TypedValue::of_handle(bc.id), TypedValue::of_i64(hi - lo)};
    units.push_back(std::move(unit));
  }
  resolve_placement(ctx, p.policy, units);
  log_placement(report, units);

  t = Clock::now();
  for (int i = 0; i < p.partition; ++i) {
    auto [lo, hi] = block_range(p.length, p.partition, i);
    ctx.enqueue_write_buffer(units[i].queue, part_buffers[i][0],
                             std::span<const uint8_t>(a_bytes.data() + lo * 8,
                                                      static_cast<size_t>(hi - lo) * 8));
    ctx.enqueue_write_buffer(units[i].queue, part_buffers[i][1],
                             std::span<const uint8_t>(b_bytes.data() + lo * 8,
                                                      static_cast<size_t>(hi - lo) * 8));
  }
  report.timing.transfer_ms += ms_since(t);

  StageTiming stage = launch_stage(ctx, units);
  report.timing.compute_ms += stage.compute_interval_ms;
  report.timing.modeled_compute_ms += stage.modeled_ms;

  t = Clock::now();
  std::vector<uint8_t> c_bytes(static_cast<size_t>(p.length) * 8);
  for (int i = 0; i < p.partition; ++i) {
    auto [lo, hi] = block_range(p.length, p.partition, i);
    auto part = ctx.enqueue_read_buffer(units[i].queue, part_buffers[i][2]);
    std::copy(part.begin(), part.end(), c_bytes.begin() + lo * 8);
  }
  report.timing.transfer_ms += ms_since(t);

  cleanup_stage(ctx, units, buffers);

  std::vector<double> expected(static_cast<size_t>(p.length));
  ref::vecadd(a.data(), b.data(), expected.data(), p.length);
  report.verify_pass = to_bytes(std::span<const double>(expected)) == c_bytes;
  report.result_digest = hex64(fnv1a(c_bytes));
}

}  // namespace

std::string BenchParams::size_key() const {
  std::ostringstream out;
  if (benchmark == "matmul") {
    out << m << "x" << k << "x" << n;
  } else if (benchmark == "spmv") {
    out << rows << "x" << cols << "@" << density;
  } else if (benchmark == "bfs") {
    out << vertices << "v" << edges << "e";
  } else if (benchmark == "knn") {
    out << knn_r << "x" << knn_q << "x" << knn_d << "k" << knn_k;
  } else {
    out << length;
  }
  return out.str();
}

RunReport run_benchmark(HostContext& ctx, const BenchParams& params) {
  static const std::vector<std::string> kBenchmarks = {"matmul", "spmv", "bfs", "knn", "vecadd"};
  if (std::find(kBenchmarks.begin(), kBenchmarks.end(), params.benchmark) == kBenchmarks.end())
    fail(ErrorCode::argument,
         "unknown benchmark '" + params.benchmark + "' (matmul|spmv|bfs|knn|vecadd)");
  size_t devices = ctx.get_device_ids().size();
  if (params.partition < 1) fail(ErrorCode::argument, "partition must be >= 1");
  if (static_cast<size_t>(params.partition) > devices)
    fail(ErrorCode::argument, "partition " + std::to_string(params.partition) + " exceeds the " +
                                  std::to_string(devices) + "-device cluster");
  if (params.benchmark == "bfs" && params.partition != 1)
    fail(ErrorCode::argument, "bfs runs whole on one device (use --partition 1)");
  if (!ctx.scheduler().has_policy(params.policy))
    fail(ErrorCode::policy, "unknown policy '" + params.policy + "'");

  RunReport report;
  report.benchmark = params.benchmark;
  report.size = params.size_key();
  report.seed = params.seed;
  report.partition = params.partition;
  for (const auto& entry : ctx.device_map().entries)
    report.devices.push_back(std::to_string(entry.global_id) + ":" + entry.node_name + ":" +
                             wire::device_type_name(entry.model.type));
  report.timing.init_ms = ctx.breakdown().init_ms;

  auto run_started = Clock::now();
  if (params.benchmark == "matmul")
    run_matmul(ctx, params, report);
  else if (params.benchmark == "spmv")
    run_spmv(ctx, params, report);
  else if (params.benchmark == "bfs")
    run_bfs(ctx, params, report);
  else if (params.benchmark == "knn")
    run_knn(ctx, params, report);
  else
    run_vecadd(ctx, params, report);
  report.total_ms = report.timing.init_ms + ms_since(run_started);
  return report;
}

std::string RunReport::to_json() const {
  json j;
  j["benchmark"] = benchmark;
  j["size"] = size;
  j["seed"] = seed;
  j["partition"] = partition;
  j["devices"] = devices;
  j["placement"] = json::array();
  for (const auto& entry : placement)
    j["placement"].push_back({{"task", entry.task}, {"device", entry.device}});
  j["timing"] = {{"init_ms", timing.init_ms},
                 {"data_creation_ms", timing.data_creation_ms},
                 {"transfer_ms", timing.transfer_ms},
                 {"compute_ms", timing.compute_ms},
                 {"modeled_compute_ms", timing.modeled_compute_ms},
                 {"total_ms", total_ms}};
  j["verify"] = verify_pass ? "pass" : "fail";
  if (speedup) j["speedup"] = *speedup;
  if (!note.empty()) j["note"] = note;
  j["result_digest"] = result_digest;
  return j.dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::parse, std::string("bad report JSON: ") + e.what());
  }
  try {
    RunReport r;
    r.benchmark = j.at("benchmark").get<std::string>();
    r.size = j.value("size", std::string{});
    r.seed = j.value("seed", uint64_t{0});
    r.partition = j.value("partition", 1);
    for (const auto& d : j.value("devices", json::array())) r.devices.push_back(d.get<std::string>());
    for (const auto& entry : j.value("placement", json::array()))
      r.placement.push_back({entry.at("task").get<std::string>(), entry.at("device").get<int>()});
    const auto& t = j.at("timing");
    r.timing.init_ms = t.at("init_ms").get<double>();
    r.timing.data_creation_ms = t.at("data_creation_ms").get<double>();
    r.timing.transfer_ms = t.at("transfer_ms").get<double>();
    r.timing.compute_ms = t.at("compute_ms").get<double>();
    r.timing.modeled_compute_ms = t.value("modeled_compute_ms", 0.0);
    r.total_ms = t.value("total_ms", r.timing.total());
    r.verify_pass = j.at("verify").get<std::string>() == "pass";
    if (j.contains("speedup")) r.speedup = j.at("speedup").get<double>();
    r.note = j.value("note", std::string{});
    r.result_digest = j.value("result_digest", std::string{});
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse, std::string("report JSON missing fields: ") + e.what());
  }
}

void write_baseline(const std::string& path, const RunReport& report) {
  json j = json::object();
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      j = json::parse(in);
    } catch (const std::exception&) {
      j = json::object();
    }
  }
  std::string key = report.benchmark + "|" + report.size + "|" + std::to_string(report.seed);
  j[key] = {{"total_ms", report.total_ms},
            {"compute_ms", report.timing.compute_ms},
            {"transfer_ms", report.timing.transfer_ms}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::parse, "cannot write baseline file '" + path + "'");
  out << j.dump(2) << "\n";
}

std::optional<double> lookup_baseline(const std::string& path, const std::string& benchmark,
                                      const std::string& size, uint64_t seed, std::string& note) {
  if (!std::filesystem::exists(path)) {
    note = "no baseline file '" + path + "'; record one with the baseline command";
    return std::nullopt;
  }
  std::ifstream in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    fail(ErrorCode::parse, "baseline file '" + path + "': " + e.what());
  }
  std::string key = benchmark + "|" + size + "|" + std::to_string(seed);
  if (!j.contains(key)) {
    for (const auto& [other, value] : j.items())
      if (other.rfind(benchmark + "|", 0) == 0) {
        note = "baseline for " + benchmark + " was recorded at different size/seed (" + other +
               "); speedup omitted";
        return std::nullopt;
      }
    note = "no baseline recorded for " + benchmark;
    return std::nullopt;
  }
  return j.at(key).at("total_ms").get<double>();
}

std::string breakdown_table(const std::vector<std::string>& report_files) {
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof(line), "%-28s %-8s %2s  %12s %12s %12s %12s  %8s %s\n", "report",
                "bench", "P", "init_ms", "creation_ms", "transfer_ms", "compute_ms", "init%",
                "flags");
  out << line;
  for (const auto& file : report_files) {
    std::ifstream in(file);
    if (!in) fail(ErrorCode::parse, "cannot open report file '" + file + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    RunReport report;
    try {
      report = RunReport::from_json(buf.str());
    } catch (const Error& e) {
      fail(ErrorCode::parse, "report file '" + file + "': " + e.what());
    }
    const TimingBreakdown& t = report.timing;
    double sum = t.total();
    double init_pct = sum > 0 ? 100.0 * t.init_ms / sum : 0.0;
    std::snprintf(line, sizeof(line), "%-28s %-8s %2d  %12.3f %12.3f %12.3f %12.3f  %7.2f%% %s\n",
                  file.c_str(), report.benchmark.c_str(), report.partition, t.init_ms,
                  t.data_creation_ms, t.transfer_ms, t.compute_ms, init_pct,
                  init_pct > 5.0 ? "INIT>5%" : "");
    out << line;
    double pct[4] = {init_pct, sum > 0 ? 100.0 * t.data_creation_ms / sum : 0.0,
                     sum > 0 ? 100.0 * t.transfer_ms / sum : 0.0,
                     sum > 0 ? 100.0 * t.compute_ms / sum : 0.0};
    std::snprintf(line, sizeof(line), "%-28s %-8s %2s  %11.2f%% %11.2f%% %11.2f%% %11.2f%%\n", "",
                  "", "", pct[0], pct[1], pct[2], pct[3]);
    out << line;
  }
  return out.str();
}

}  // namespace haocl::bench
