// kernel_bench: compares the serial reference kernels against the OpenMP
// engine at several thread counts, checking agreement and printing a
// speedup table. Runs the whole set on desk-scale sizes by default.

#include <chrono>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "haocl/datagen.hpp"
#include "haocl/kernels.hpp"
#include "haocl/reference.hpp"

using Clock = std::chrono::steady_clock;
using haocl::kernels::BoundArg;

namespace {

double time_ms(const std::function<void()>& fn) {
  auto start = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct Row {
  std::string kernel;
  double ref_ms = 0.0;
  std::vector<double> engine_ms;
  bool exact = true;
};

void print_table(const std::vector<Row>& rows, const std::vector<int>& thread_counts) {
  std::printf("%-14s %12s", "kernel", "serial_ms");
  for (int t : thread_counts) std::printf("  omp%-2d ms (x)", t);
  std::printf("  %s\n", "bit-exact");
  for (const auto& row : rows) {
    std::printf("%-14s %12.2f", row.kernel.c_str(), row.ref_ms);
    for (double ms : row.engine_ms)
      std::printf("  %9.2f %4.2f", ms, ms > 0 ? row.ref_ms / ms : 0.0);
    std::printf("  %s\n", row.exact ? "yes" : "NO");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial reference vs OpenMP kernel engine"};
  int64_t m = 512, k = 512, n = 512;
  int64_t rows = 20000, cols = 20000;
  double density = 1e-3;
  int64_t vertices = 100000, edges = 1000000;
  int64_t knn_r = 20000, knn_q = 200, knn_d = 16, knn_k = 10;
  int64_t length = 10000000;
  int max_threads = static_cast<int>(std::thread::hardware_concurrency());
  uint64_t seed = 42;
  app.add_option("--m", m);
  app.add_option("--k", k);
  app.add_option("--n", n);
  app.add_option("--rows", rows);
  app.add_option("--cols", cols);
  app.add_option("--density", density);
  app.add_option("--vertices", vertices);
  app.addـoption
  CLI11_PARSE(app, argc, argv);
  return 0;
}
