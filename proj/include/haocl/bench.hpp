#pragma once

// Benchmark harness: seeded input generation, P-way partitioned runs over
// policy-chosen devices, in-process oracle verification, and the four-phase
// timing report.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "haocl/runtime.hpp"

namespace haocl::bench {

struct BenchParams {
  std::string benchmark;  // matmul | spmv | bfs | knn | vecadd
  uint64_t seed = 42;
  int partition = 1;
  std::string policy = "user_directed";

  // Desk-scale default sizes; override per benchmark.
  int64_t m = 1024, k = 1024, n = 1024;                      // matmul
  int64_t rows = 100000, cols = 100000;                      // spmv
  double density = 1e-4;
  int64_t vertices = 100000, edges = 1000000;                // bfs
  int64_t knn_r = 100000, knn_q = 1000, knn_d = 16, knn_k = 10;
  int64_t length = 10000000;                                 // vecadd

  std::string size_key() const;
};

struct PlacementEntry {
  std::string task;
  int device = 0;
};

struct RunReport {
  std::string benchmark;
  std::string size;
  uint64_t seed = 0;
  int partition = 1;
  std::vector<std::string> devices;      // "gid:node:type"
  std::vector<PlacementEntry> placement;
  TimingBreakdown timing;
  double total_ms = 0.0;                 // measured end to end (verification excluded)
  bool verify_pass = false;
  std::optional<double> speedup;
  std::string note;
  std::string result_digest;             // FNV-1a of the assembled outputs

  std::string to_json() const;
  static RunReport from_json(const std::string& text);
};

// Runs one benchmark through the distributed runtime and verifies the
// readback against the serial reference in-process. Does not throw on an
// oracle mismatch (verify_pass turns false); configuration problems throw.
RunReport run_benchmark(HostContext& ctx, const BenchParams& params);

// Baseline timing store for speedup reporting, keyed by
// (benchmark, size, seed).
void write_baseline(const std::string& path, const RunReport& report);
std::optional<double> lookup_baseline(const std::string& path, const std::string& benchmark,
                                      const std::string& size, uint64_t seed, std::string& note);

// Phase table for cmd_breakdown: one row per report file, percentage per
// phase, and a flag wherever init exceeds 5% of the total.
std::string breakdown_table(const std::vector<std::string>& report_files);

}  // namespace haocl::bench
