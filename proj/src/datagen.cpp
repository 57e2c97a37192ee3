#include "haocl/datagen.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include "haocl/error.hpp"

namespace haocl {

std::vector<double> gen_doubles(size_t count, uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(count);
  for (auto& x : v) x = rng.next_double() * 2.0 - 1.0;
  return v;
}

Csr gen_csr(int64_t rows, int64_t cols, double density, uint64_t seed) {
  if (rows < 1 || cols < 1) fail(ErrorCode::argument, "gen_csr: rows and cols must be >= 1");
  if (density < 0.0 || density > 1.0) fail(ErrorCode::argument, "gen_csr: density must be in [0, 1]");
  SplitMix64 rng(seed);
  Csr csr;
  csr.rows = rows;
  csr.cols = cols;
  csr.row_ptr.resize(rows + 1, 0);
  int64_t per_row = density > 0.0 ? std::max<int64_t>(1, static_cast<int64_t>(density * cols + 0.5)) : 0;
  per_row = std::min(per_row, cols);
  std::set<int64_t> row_cols;
  for (int64_t i = 0; i < rows; ++i) {
    row_cols.clear();
    while (static_cast<int64_t>(row_cols.size()) < per_row)
      row_cols.insert(static_cast<int64_t>(rng.next_below(cols)));
    for (int64_t c : row_cols) {
      csr.col_idx.push_back(c);
      csr.values.push_back(rng.next_double() * 2.0 - 1.0);
    }
    csr.row_ptr[i + 1] = static_cast<int64_t>(csr.col_idx.size());
  }
  return csr;
}

Csr gen_graph(int64_t vertices, int64_t edges, uint64_t seed) {
  if (vertices < 1) fail(ErrorCode::argument, "gen_graph: need at least one vertex");
  SplitMix64 rng(seed);
  std::vector<std::pair<int64_t, int64_t>> arcs;
  arcs.reserve(edges * 2);
  for (int64_t e = 0; e < edges; ++e) {
    int64_t u = static_cast<int64_t>(rng.next_below(vertices));
    int64_t v = static_cast<int64_t>(rng.next_below(vertices));
    if (u == v) continue;
    arcs.emplace_back(u, v);
    arcs.emplace_back(v, u);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  Csr adj;
  adj.rows = vertices;
  adj.cols = vertices;
  adj.row_ptr.resize(vertices + 1, 0);
  adj.col_idx.reserve(arcs.size());
  for (const auto& [u, v] : arcs) {
    adj.row_ptr[u + 1]++;
    adj.col_idx.push_back(v);
  }
  for (int64_t i = 0; i < vertices; ++i) adj.row_ptr[i + 1] += adj.row_ptr[i];
  return adj;
}

namespace {

template <typename T>
std::vector<uint8_t> pack(std::span<const T> v) {
  std::vector<uint8_t> bytes(v.size() * sizeof(T));
  std::memcpy(bytes.data(), v.data(), bytes.size());
  return bytes;
}

template <typename T>
std::vector<T> unpack(std::span<const uint8_t> bytes) {
  if (bytes.size() % sizeof(T) != 0)
    fail(ErrorCode::argument, "byte buffer is not a whole number of elements");
  std::vector<T> v(bytes.size() / sizeof(T));
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

}  // namespace

std::vector<uint8_t> to_bytes(std::span<const double> v) { return pack(v); }
std::vector<uint8_t> to_bytes(std::span<const int64_t> v) { return pack(v); }
std::vector<uint8_t> to_bytes(std::span<const int32_t> v) { return pack(v); }
std::vector<double> doubles_from_bytes(std::span<const uint8_t> bytes) { return unpack<double>(bytes); }
std::vector<int64_t> i64_from_bytes(std::span<const uint8_t> bytes) { return unpack<int64_t>(bytes); }
std::vector<int32_t> i32_from_bytes(std::span<const uint8_t> bytes) { return unpack<int32_t>(bytes); }

}  // namespace haocl
