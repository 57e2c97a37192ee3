#pragma once

// Built-in kernel registry and the OpenMP execution engine.
//
// Buffer encodings (little-endian native, as stored in node buffer stores):
//   dense matrices/vectors : row-major float64
//   CSR matrix             : four buffers in field order —
//                            header [rows, cols] int64, row_ptr (rows+1) int64,
//                            col_idx (nnz) int64, values (nnz) float64
//   BFS graph              : header + row_ptr + col_idx (unweighted CSR adjacency)
//   levels / knn idx       : int32
//
// Every kernel is a pure function of its input buffers; per-element
// floating-point summation order is fixed (ascending) so that partitioned
// and sequential executions agree bit-exactly with the serial references.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace haocl::kernels {

enum class ArgKind : uint8_t { scalar_i64, buffer_in, buffer_out };

struct KernelSignature {
  std::string name;
  std::vector<ArgKind> args;

  size_t arity() const { return args.size(); }
};

inline constexpr const char* kCoreBundle = "core";

// The registry is immutable after startup: one bundle "core" holding the
// built-in kernels.
const std::vector<KernelSignature>& core_kernels();
const KernelSignature* find_kernel(const std::string& bundle, const std::string& kernel);
std::vector<std::string> kernel_names(const std::string& bundle);
bool bundle_exists(const std::string& bundle);

// One bound kernel argument: a scalar or a byte buffer from the store.
// Output buffers are resized and written by the kernel.
struct BoundArg {
  int64_t scalar = 0;
  std::vector<uint8_t>* buffer = nullptr;

  static BoundArg of_scalar(int64_t v) { return BoundArg{v, nullptr}; }
  static BoundArg of_buffer(std::vector<uint8_t>* b) { return BoundArg{0, b}; }
};

// Executes a core kernel with `threads` OpenMP threads. Returns the
// work-unit count of the execution (matmul 2MNK, spmv 2*nnz, bfs |E|,
// knn D*R*Q, vecadd n). Throws Error(argument) on any size or
// precondition violation, Error(name) for an unknown kernel.
uint64_t execute(const std::string& kernel, std::span<BoundArg> args, int threads = 1);

// Work-unit estimate for scheduling, from the same formulas, without
// executing. Buffer sizes are taken from the provided byte lengths.
uint64_t work_estimate(const std::string& kernel, std::span<const int64_t> scalars,
                       std::span<const uint64_t> buffer_sizes);

// Row ranges balancing nnz for a P-way split (greedy sweep toward
// ceil(nnz/P) per part, each part gets at least one row).
std::vector<int64_t> spmv_partition_ranges(int64_t rows, const int64_t* row_ptr,
                                           int64_t parts);

// Host-side merge for partitioned kNN. Each partial holds per-query rows
// of globally indexed (idx, dist) pairs sorted by (dist, idx). The merge
// preserves the same ordering and tie rules as an unpartitioned knn.
struct KnnPartial {
  int64_t k = 0;  // entries per query
  std::vector<int32_t> idx;
  std::vector<double> dist;
};

KnnPartial merge_topk(const std::vector<KnnPartial>& partials, int64_t queries,
                      int64_t k);

}  // namespace haocl::kernels
