#pragma once

// Serial reference implementations of the built-in kernels. These are the
// plain, loop-order-mandated versions: the parallel engine in kernels.hpp
// must match them bit-exactly, and benchmark runs verify remote results
// against them in-process.

#include <cstdint>
#include <vector>

namespace haocl::ref {

// c = a*b, row-major, k-ascending accumulation per output element.
void matmul(const double* a, const double* b, double* c,
            int64_t m, int64_t k, int64_t n);

// y[i-lo] = (A*x)[i] for i in [lo, hi), ascending storage order per row.
void spmv(const int64_t* row_ptr, const int64_t* col_idx, const double* values,
          const double* x, int64_t lo, int64_t hi, double* y);

// Queue-based BFS; unreached vertices get -1.
std::vector<int32_t> bfs(int64_t vertices, const int64_t* row_ptr,
                         const int64_t* col_idx, int64_t source);

// Full-sort k nearest neighbors: squared Euclidean distance, ascending,
// ties broken by smaller reference index.
void knn(const double* ref_pts, const double* query_pts, int64_t r, int64_t q,
         int64_t d, int64_t k, int32_t* idx, double* dist);

void vecadd(const double* a, const double* b, double* c, int64_t n);

}  // namespace haocl::ref
