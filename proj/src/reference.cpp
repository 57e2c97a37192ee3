#include "haocl/reference.hpp"

#include <algorithm>
#include <queue>

namespace haocl::ref {

void matmul(const double* a, const double* b, double* c,
            int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int64_t p = 0; p < k; ++p) sum += a[i * k + p] * b[p * n + j];
      c[i * n + j] = sum;
    }
  }
}

void spmv(const int64_t* row_ptr, const int64_t* col_idx, const double* values,
          const double* x, int64_t lo, int64_t hi, double* y) {
  for (int64_t i = lo; i < hi; ++i) {
    double sum = 0.0;
    for (int64_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
      sum += values[p] * x[col_idx[p]];
    y[i - lo] = sum;
  }
}

std::vector<int32_t> bfs(int64_t vertices, const int64_t* row_ptr,
                         const int64_t* col_idx, int64_t source) {
  std::vector<int32_t> levels(static_cast<size_t>(vertices), -1);
  levels[source] = 0;
  std::queue<int64_t> queue;
  queue.push(source);
  while (!queue.empty()) {
    int64_t u = queue.front();
    queue.pop();
    for (int64_t p = row_ptr[u]; p < row_ptr[u + 1]; ++p) {
      int64_t v = col_idx[p];
      if (levels[v] == -1) {
        levels[v] = levels[u] + 1;
        queue.push(v);
      }
    }
  }
  return levels;
}

void knn(const double* ref_pts, const double* query_pts, int64_t r, int64_t q,
         int64_t d, int64_t k, int32_t* idx, double* dist) {
  std::vector<std::pair<double, int32_t>> cand(static_cast<size_t>(r));
  for (int64_t qi = 0; qi < q; ++qi) {
    const double* query = query_pts + qi * d;
    for (int64_t ri = 0; ri < r; ++ri) {
      const double* point = ref_pts + ri * d;
      double sum = 0.0;
      for (int64_t di = 0; di < d; ++di) {
        double diff = point[di] - query[di];
        sum += diff * diff;
      }
      cand[ri] = {sum, static_cast<int32_t>(ri)};
    }
    std::sort(cand.begin(), cand.end());
    for (int64_t ki = 0; ki < k; ++ki) {
      idx[qi * k + ki] = cand[ki].second;
      dist[qi * k + ki] = cand[ki].first;
    }
  }
}

void vecadd(const double* a, const double* b, double* c, int64_t n) {
  for (int64_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

}  // namespace haocl::ref
