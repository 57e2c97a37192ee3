#include "haocl/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>

#include "haocl/error.hpp"

namespace haocl::kernels {

namespace {

const std::vector<KernelSignature>& registry() {
  static const std::vector<KernelSignature> kernels = {
      {"matmul",
       {ArgKind::buffer_in, ArgKind::buffer_in, ArgKind::buffer_out,
        ArgKind::scalar_i64, ArgKind::scalar_i64, ArgKind::scalar_i64}},
      {"spmv_partition",
       {ArgKind::buffer_in, ArgKind::buffer_in, ArgKind::scalar_i64, ArgKind::buffer_out}},
      {"spmv_compute",
       {ArgKind::buffer_in, ArgKind::buffer_in, ArgKind::buffer_in, ArgKind::buffer_in,
        ArgKind::buffer_in, ArgKind::scalar_i64, ArgKind::scalar_i64, ArgKind::buffer_out}},
      {"bfs",
       {ArgKind::buffer_in, ArgKind::buffer_in, ArgKind::buffer_in,
        ArgKind::scalar_i64, ArgKind::buffer_out}},
      {"knn",
       {ArgKind::buffer_in, ArgKind::buffer_in, ArgKind::scalar_i64, ArgKind::scalar_i64,
        ArgKind::scalar_i64, ArgKind::scalar_i64, ArgKind::buffer_out, ArgKind::buffer_out}},
      {"vecadd",
       {ArgKind::buffer_in, ArgKind::buffer_in, ArgKind::buffer_out, ArgKind::scalar_i64}},
  };
  return kernels;
}

template <typename T>
std::span<const T> in_view(const BoundArg& arg, const char* what) {
  if (!arg.buffer) fail(ErrorCode::argument, std::string(what) + ": expected a buffer argument");
  if (arg.buffer->size() % sizeof(T) != 0)
    fail(ErrorCode::argument, std::string(what) + ": buffer length not a multiple of the element size");
  return {reinterpret_cast<const T*>(arg.buffer->data()), arg.buffer->size() / sizeof(T)};
}

template <typename T>
std::span<T> out_view(BoundArg& arg, size_t count, const char* what) {
  if (!arg.buffer) fail(ErrorCode::argument, std::string(what) + ": expected a buffer argument");
  arg.buffer->assign(count * sizeof(T), 0);
  return {reinterpret_cast<T*>(arg.buffer->data()), count};
}

int64_t scalar(const BoundArg& arg, const char* what) {
  if (arg.buffer) fail(ErrorCode::argument, std::string(what) + ": expected a scalar argument");
  return arg.scalar;
}

struct CsrView {
  int64_t rows = 0;
  int64_t cols = 0;
  std::span<const int64_t> row_ptr;
  std::span<const int64_t> col_idx;
  std::span<const double> values;
};

// Validates header + row_ptr (+ optional col_idx/values) against the CSR
// invariants before any indexed access.
CsrView csr_view(const BoundArg* hdr, const BoundArg* row_ptr, const BoundArg* col_idx,
                 const BoundArg* values, const char* what) {
  CsrView csr;
  auto header = in_view<int64_t>(*hdr, what);
  if (header.size() != 2) fail(ErrorCode::argument, std::string(what) + ": header must hold [rows, cols]");
  csr.rows = header[0];
  csr.cols = header[1];
  if (csr.rows < 0 || csr.cols < 0) fail(ErrorCode::argument, std::string(what) + ": negative dimension");
  csr.row_ptr = in_view<int64_t>(*row_ptr, what);
  if (csr.row_ptr.size() != static_cast<size_t>(csr.rows) + 1)
    fail(ErrorCode::argument, std::string(what) + ": row_ptr must hold rows+1 entries");
  if (csr.row_ptr[0] != 0) fail(ErrorCode::argument, std::string(what) + ": row_ptr[0] != 0");
  for (int64_t i = 0; i < csr.rows; ++i)
    if (csr.row_ptr[i + 1] < csr.row_ptr[i])
      fail(ErrorCode::argument, std::string(what) + ": row_ptr not nondecreasing");
  int64_t nnz = csr.row_ptr[csr.rows];
  if (col_idx) {
    csr.col_idx = in_view<int64_t>(*col_idx, what);
    if (csr.col_idx.size() != static_cast<size_t>(nnz))
      fail(ErrorCode::argument, std::string(what) + ": col_idx size != nnz");
    for (int64_t v : csr.col_idx)
      if (v < 0 || v >= csr.cols) fail(ErrorCode::argument, std::string(what) + ": col_idx out of range");
  }
  if (values) {
    csr.values = in_view<double>(*values, what);
    if (csr.values.size() != static_cast<size_t>(nnz))
      fail(ErrorCode::argument, std::string(what) + ": values size != nnz");
  }
  return csr;
}

uint64_t run_matmul(std::span<BoundArg> args, int threads) {
  int64_t m = scalar(args[3], "matmul M");
  int64_t k = scalar(args[4], "matmul K");
  int64_t n = scalar(args[5], "matmul N");
  if (m < 1 || k < 1 || n < 1) fail(ErrorCode::argument, "matmul: dimensions must be >= 1");
  auto a = in_view<double>(args[0], "matmul A");
  auto b = in_view<double>(args[1], "matmul B");
  if (a.size() != static_cast<size_t>(m * k)) fail(ErrorCode::argument, "matmul: A size != M*K");
  if (b.size() != static_cast<size_t>(k * n)) fail(ErrorCode::argument, "matmul: B size != K*N");
  auto c = out_view<double>(args[2], static_cast<size_t>(m * n), "matmul C");

  // i-k-j loop with a row accumulator: per element the additions still run
  // in ascending-k order, so results match the naive reference bit-exactly.
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    double* crow = c.data() + i * n;
    for (int64_t p = 0; p < k; ++p) {
      double aik = a[i * k + p];
      const double* brow = b.data() + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return static_cast<uint64_t>(2) * m * n * k;
}

uint64_t run_spmv_partition(std::span<BoundArg> args, int /*threads*/) {
  CsrView csr = csr_view(&args[0], &args[1], nullptr, nullptr, "spmv_partition");
  int64_t parts = scalar(args[2], "spmv_partition P");
  if (parts < 1) fail(ErrorCode::argument, "spmv_partition: P must be >= 1");
  if (parts > csr.rows) fail(ErrorCode::argument, "spmv_partition: P exceeds row count");
  auto ranges = spmv_partition_ranges(csr.rows, csr.row_ptr.data(), parts);
  auto out = out_view<int64_t>(args[3], ranges.size(), "spmv_partition ranges");
  std::copy(ranges.begin(), ranges.end(), out.begin());
  return static_cast<uint64_t>(csr.rows);
}

uint64_t run_spmv_compute(std::span<BoundArg> args, int threads) {
  CsrView csr = csr_view(&args[0], &args[1], &args[2], &args[3], "spmv_compute");
  auto x = in_view<double>(args[4], "spmv_compute x");
  if (x.size() != static_cast<size_t>(csr.cols)) fail(ErrorCode::argument, "spmv_compute: x size != cols");
  int64_t lo = scalar(args[5], "spmv_compute lo");
  int64_t hi = scalar(args[6], "spmv_compute hi");
  if (lo < 0 || hi < lo || hi > csr.rows) fail(ErrorCode::argument, "spmv_compute: bad row range");
  auto y = out_view<double>(args[7], static_cast<size_t>(hi - lo), "spmv_compute y");

  const int64_t* row_ptr = csr.row_ptr.data();
  const int64_t* col_idx = csr.col_idx.data();
  const double* values = csr.values.data();
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int64_t i = lo; i < hi; ++i) {
    double sum = 0.0;
    for (int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      sum += values[p] * x[col_idx[p]];
    y[i - lo] = sum;
  }
  return static_cast<uint64_t>(2) * static_cast<uint64_t>(row_ptr[hi] - row_ptr[lo]);
}

uint64_t run_bfs(std::span<BoundArg> args, int threads) {
  CsrView csr = csr_view(&args[0], &args[1], &args[2], nullptr, "bfs");
  int64_t vertices = csr.rows;
  int64_t source = scalar(args[3], "bfs source");
  if (source < 0 || source >= vertices) fail(ErrorCode::argument, "bfs: source out of range");
  auto levels = out_view<int32_t>(args[4], static_cast<size_t>(vertices), "bfs levels");
  std::fill(levels.begin(), levels.end(), -1);
  levels[source] = 0;

  const int64_t* row_ptr = csr.row_ptr.data();
  const int64_t* col_idx = csr.col_idx.data();
  std::vector<int64_t> frontier{source};
  std::vector<int64_t> next;
  int32_t level = 0;
  while (!frontier.empty()) {
    next.clear();
    ++level;
    // Every discovered vertex is claimed exactly once via CAS, so levels
    // (and the merged frontier set) are deterministic under any schedule.
#pragma omp parallel num_threads(threads)
    {
      std::vector<int64_t> local;
#pragma omp for nowait schedule(static)
      for (int64_t f = 0; f < static_cast<int64_t>(frontier.size()); ++f) {
        int64_t u = frontier[f];
        for (int64_t p = row_ptr[u]; p < row_ptr[u + 1]; ++p) {
          int64_t v = col_idx[p];
          int32_t unseen = -1;
          if (std::atomic_ref<int32_t>(levels[v]).compare_exchange_strong(
                  unseen, level, std::memory_order_relaxed))
            local.push_back(v);
        }
      }
#pragma omp critical
      next.insert(next.end(), local.begin(), local.end());
    }
    frontier.swap(next);
  }
  return static_cast<uint64_t>(csr.col_idx.size());
}

uint64_t run_knn(std::span<BoundArg> args, int threads) {
  int64_t r = scalar(args[2], "knn R");
  int64_t q = scalar(args[3], "knn Q");
  int64_t d = scalar(args[4], "knn D");
  int64_t k = scalar(args[5], "knn k");
  if (r < 1 || q < 1 || d < 1) fail(ErrorCode::argument, "knn: R, Q, D must be >= 1");
  if (k < 1 || k > r) fail(ErrorCode::argument, "knn: need 1 <= k <= R");
  auto ref_pts = in_view<double>(args[0], "knn ref");
  auto query_pts = in_view<double>(args[1], "knn query");
  if (ref_pts.size() != static_cast<size_t>(r * d)) fail(ErrorCode::argument, "knn: ref size != R*D");
  if (query_pts.size() != static_cast<size_t>(q * d)) fail(ErrorCode::argument, "knn: query size != Q*D");
  auto idx = out_view<int32_t>(args[6], static_cast<size_t>(q * k), "knn idx");
  auto dist = out_view<double>(args[7], static_cast<size_t>(q * k), "knn dist");

#pragma omp parallel num_threads(threads)
  {
    std::vector<std::pair<double, int32_t>> cand(static_cast<size_t>(r));
#pragma omp for schedule(static)
    for (int64_t qi = 0; qi < q; ++qi) {
      const double* query = query_pts.data() + qi * d;
      for (int64_t ri = 0; ri < r; ++ri) {
        const double* point = ref_pts.data() + ri * d;
        double sum = 0.0;
        for (int64_t di = 0; di < d; ++di) {
          double diff = point[di] - query[di];
          sum += diff * diff;
        }
        cand[ri] = {sum, static_cast<int32_t>(ri)};
      }
      // pair ordering = (distance, index): the mandated tie rule
      std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
      for (int64_t ki = 0; ki < k; ++ki) {
        idx[qi * k + ki] = cand[ki].second;
        dist[qi * k + ki] = cand[ki].first;
      }
    }
  }
  return static_cast<uint64_t>(d) * static_cast<uint64_t>(r) * static_cast<uint64_t>(q);
}

uint64_t run_vecadd(std::span<BoundArg> args, int threads) {
  int64_t n = scalar(args[3], "vecadd n");
  if (n < 0) fail(ErrorCode::argument, "vecadd: n must be >= 0");
  auto a = in_view<double>(args[0], "vecadd a");
  auto b = in_view<double>(args[1], "vecadd b");
  if (a.size() != static_cast<size_t>(n) || b.size() != static_cast<size_t>(n))
    fail(ErrorCode::argument, "vecadd: input length mismatch");
  auto c = out_view<double>(args[2], static_cast<size_t>(n), "vecadd c");
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int64_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
  return static_cast<uint64_t>(n);
}

}  // namespace

const std::vector<KernelSignature>& core_kernels() { return registry(); }

bool bundle_exists(const std::string& bundle) { return bundle == kCoreBundle; }

const KernelSignature* find_kernel(const std::string& bundle, const std::string& kernel) {
  if (!bundle_exists(bundle)) return nullptr;
  for (const auto& sig : registry())
    if (sig.name == kernel) return &sig;
  return nullptr;
}

std::vector<std::string> kernel_names(const std::string& bundle) {
  std::vector<std::string> names;
  if (!bundle_exists(bundle)) return names;
  for (const auto& sig : registry()) names.push_back(sig.name);
  return names;
}

uint64_t execute(const std::string& kernel, std::span<BoundArg> args, int threads) {
  const KernelSignature* sig = find_kernel(kCoreBundle, kernel);
  if (!sig) fail(ErrorCode::name, "unknown kernel '" + kernel + "'");
  if (args.size() != sig->arity())
    fail(ErrorCode::argument, kernel + ": expected " + std::to_string(sig->arity()) +
                                  " arguments, got " + std::to_string(args.size()));
  if (threads < 1) threads = 1;

  if (kernel == "matmul") return run_matmul(args, threads);
  if (kernel == "spmv_partition") return run_spmv_partition(args, threads);
  if (kernel == "spmv_compute") return run_spmv_compute(args, threads);
  if (kernel == "bfs") return run_bfs(args, threads);
  if (kernel == "knn") return run_knn(args, threads);
  if (kernel == "vecadd") return run_vecadd(args, threads);
  fail(ErrorCode::name, "unknown kernel '" + kernel + "'");
}

uint64_t work_estimate(const std::string& kernel, std::span<const int64_t> scalars,
                       std::span<const uint64_t> buffer_sizes) {
  auto scalar_at = [&](size_t i) -> int64_t { return i < scalars.size() ? scalars[i] : 0; };
  auto buffer_at = [&](size_t i) -> uint64_t { return i < buffer_sizes.size() ? buffer_sizes[i] : 0; };
  if (kernel == "matmul")
    return static_cast<uint64_t>(2) * scalar_at(0) * scalar_at(1) * scalar_at(2);
  if (kernel == "spmv_partition") return buffer_at(1) / 8 > 0 ? buffer_at(1) / 8 - 1 : 1;
  if (kernel == "spmv_compute") return 2 * (buffer_at(3) / 8);  // 2*nnz from the values buffer
  if (kernel == "bfs") return buffer_at(2) / 8;                 // |E| from col_idx
  if (kernel == "knn")
    return static_cast<uint64_t>(scalar_at(2)) * scalar_at(0) * scalar_at(1);  // D*R*Q
  if (kernel == "vecadd") return static_cast<uint64_t>(scalar_at(0));
  fail(ErrorCode::name, "unknown kernel '" + kernel + "'");
}

std::vector<int64_t> spmv_partition_ranges(int64_t rows, const int64_t* row_ptr,
                                           int64_t parts) {
  if (parts < 1 || parts > rows) fail(ErrorCode::argument, "partition count out of range");
  int64_t nnz_total = row_ptr[rows];
  int64_t target = (nnz_total + parts - 1) / parts;  // ceil(nnz/P)
  std::vector<int64_t> ranges(static_cast<size_t>(parts) + 1);
  ranges[0] = 0;
  int64_t row = 0;
  for (int64_t p = 0; p + 1 < parts; ++p) {
    int64_t max_end = rows - (parts - 1 - p);  // leave >= 1 row per later part
    int64_t end = row;
    int64_t acc = 0;
    do {
      acc += row_ptr[end + 1] - row_ptr[end];
      ++end;
    } while (end < max_end && acc < target);
    ranges[p + 1] = end;
    row = end;
  }
  ranges[parts] = rows;
  return ranges;
}

KnnPartial merge_topk(const std::vector<KnnPartial>& partials, int64_t queries,
                      int64_t k) {
  if (k < 1) fail(ErrorCode::argument, "merge_topk: k must be >= 1");
  for (const auto& part : partials) {
    if (part.idx.size() != part.dist.size() ||
        part.idx.size() != static_cast<size_t>(part.k * queries))
      fail(ErrorCode::contract, "merge_topk: partial has inconsistent shape");
    for (int64_t qi = 0; qi < queries; ++qi) {
      for (int64_t i = 1; i < part.k; ++i) {
        size_t at = static_cast<size_t>(qi * part.k + i);
        auto prev = std::pair(part.dist[at - 1], part.idx[at - 1]);
        auto cur = std::pair(part.dist[at], part.idx[at]);
        if (cur < prev) fail(ErrorCode::contract, "merge_topk: partial not sorted");
      }
    }
  }

  KnnPartial merged;
  merged.k = k;
  merged.idx.resize(static_cast<size_t>(queries * k));
  merged.dist.resize(static_cast<size_t>(queries * k));
  std::vector<std::pair<double, int32_t>> pool;
  for (int64_t qi = 0; qi < queries; ++qi) {
    pool.clear();
    for (const auto& part : partials)
      for (int64_t i = 0; i < part.k; ++i) {
        size_t at = static_cast<size_t>(qi * part.k + i);
        pool.emplace_back(part.dist[at], part.idx[at]);
      }
    if (pool.size() < static_cast<size_t>(k))
      fail(ErrorCode::contract, "merge_topk: fewer than k candidates for a query");
    std::partial_sort(pool.begin(), pool.begin() + k, pool.end());
    for (int64_t i = 0; i < k; ++i) {
      merged.dist[qi * k + i] = pool[i].first;
      merged.idx[qi * k + i] = pool[i].second;
    }
  }
  return merged;
}

}  // namespace haocl::kernels
