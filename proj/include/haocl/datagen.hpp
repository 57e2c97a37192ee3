#pragma once

// Seeded pseudorandom workload generators. A fixed seed fully determines
// every generated input independent of platform or partitioning, which is
// what makes benchmark runs reproducible and bit-comparable.

#include <cstdint>
#include <span>
#include <vector>

namespace haocl {

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  uint64_t next_below(uint64_t bound) { return bound ? next() % bound : 0; }

 private:
  uint64_t state_;
};

struct Csr {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<int64_t> row_ptr;
  std::vector<int64_t> col_idx;
  std::vector<double> values;

  int64_t nnz() const { return static_cast<int64_t>(col_idx.size()); }
  std::vector<int64_t> header() const { return {rows, cols}; }
};

std::vector<double> gen_doubles(size_t count, uint64_t seed);

// Random sparse matrix: per row, round(density*cols) distinct sorted
// column indices (at least one when density > 0).
Csr gen_csr(int64_t rows, int64_t cols, double density, uint64_t seed);

// Undirected random graph G(n, m) as a CSR adjacency structure (each edge
// stored in both directions, duplicates and self-loops removed).
Csr gen_graph(int64_t vertices, int64_t edges, uint64_t seed);

// Bit-copy helpers between typed vectors and store byte buffers.
std::vector<uint8_t> to_bytes(std::span<const double> v);
std::vector<uint8_t> to_bytes(std::span<const int64_t> v);
std::vector<uint8_t> to_bytes(std::span<const int32_t> v);
std::vector<double> doubles_from_bytes(std::span<const uint8_t> bytes);
std::vector<int64_t> i64_from_bytes(std::span<const uint8_t> bytes);
std::vector<int32_t> i32_from_bytes(std::span<const uint8_t> bytes);

}  // namespace haocl
