// haocl: cluster CLI.
//   haocl node      --config c.conf --name n0          run a node daemon
//   haocl run       --config c.conf --benchmark matmul run a benchmark, JSON report on stdout
//   haocl baseline  --config c.conf --benchmark matmul record the 1-part timing baseline
//   haocl breakdown report.json...                     phase table across reports

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "haocl/bench.hpp"
#include "haocl/config.hpp"
#include "haocl/daemon.hpp"
#include "haocl/error.hpp"
#include "haocl/runtime.hpp"

namespace {

std::atomic<bool> g_stop_requested{false};

void on_signal(int) { g_stop_requested.store(true); }

struct SpawnedNode {
  pid_t pid = -1;
  std::string name;
};

std::vector<SpawnedNode> spawn_cluster(const std::string& config_path,
                                       const haocl::ClusterConfig& config, int threads) {
  std::vector<SpawnedNode> children;
  for (const auto& node : config.nodes) {
    pid_t pid = fork();
    if (pid < 0) haocl::fail(haocl::ErrorCode::internal, "fork failed");
    if (pid == 0) {
      int devnull = open("/dev/null", O_WRONLY);
      if (devnull >= 0) {
        dup2(devnull, STDOUT_FILENO);
        dup2(devnull, STDERR_FILENO);
        close(devnull);
      }
      std::string threads_str = std::to_string(threads);
      execl("/proc/self/exe", "haocl", "node", "--config", config_path.c_str(), "--name",
            node.name.c_str(), "--threads", threads_str.c_str(), (char*)nullptr);
      _exit(127);
    }
    children.push_back({pid, node.name});
  }
  return children;
}

void stop_cluster(std::vector<SpawnedNode>& children) {
  for (auto& child : children)
    if (child.pid > 0) kill(child.pid, SIGTERM);
  for (auto& child : children) {
    if (child.pid <= 0) continue;
    for (int i = 0; i < 100; ++i) {
      int status = 0;
      if (waitpid(child.pid, &status, WNOHANG) == child.pid) {
        child.pid = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    if (child.pid > 0) {
      kill(child.pid, SIGKILL);
      waitpid(child.pid, nullptr, 0);
    }
  }
  children.clear();
}

int cmd_node(const std::string& config_path, const std::string& name, int threads, bool quiet) {
  haocl::ClusterConfig config = haocl::ClusterConfig::parse_file(config_path);
  const haocl::NodeSpec* spec = config.find_node(name);
  if (!spec) {
    std::string names;
    for (const auto& n : config.node_names()) names += (names.empty() ? "" : ", ") + n;
    haocl::fail(haocl::ErrorCode::config,
                "no node '" + name + "' in config (nodes: " + names + ")");
  }

  haocl::DaemonOptions options;
  options.node_name = name;
  options.threads_per_device = threads;
  options.log = quiet ? nullptr : &std::cout;

  haocl::NodeDaemon daemon(spec->endpoint, spec->devices, options);
  std::cout << "node " << name << " serving " << spec->endpoint.str() << " with "
            << spec->devices.size() << " device(s)\n";
  std::cout.flush();

  // SIGTERM/SIGINT drain exactly like a Shutdown message.
  struct sigaction action {};
  action.sa_handler = on_signal;
  sigaction(SIGTERM, &action, nullptr);
  sigaction(SIGINT, &action, nullptr);
  std::thread watcher([&daemon] {
    while (!g_stop_requested.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    daemon.request_stop();
  });
  daemon.wait();
  g_stop_requested.store(true);
  watcher.join();
  return 0;
}

int run_and_report(const std::string& config_path, haocl::bench::BenchParams& params,
                   bool record_baseline, const std::string& baseline_file,
                   const std::string& report_file, bool spawn, int spawn_threads) {
  haocl::ClusterConfig config = haocl::ClusterConfig::parse_file(config_path);
  std::vector<SpawnedNode> children;
  if (spawn) children = spawn_cluster(config_path, config, spawn_threads);

  int exit_code = 1;
  try {
    haocl::HostContext ctx = haocl::HostContext::init(config);
    haocl::bench::RunReport report = haocl::bench::run_benchmark(ctx, params);

    if (record_baseline) {
      haocl::bench::write_baseline(baseline_file, report);
      report.note = "baseline recorded to " + baseline_file;
    } else {
      std::string note;
      auto baseline_total = haocl::bench::lookup_baseline(baseline_file, report.benchmark,
                                                          report.size, report.seed, note);
      if (baseline_total)
        report.speedup = *baseline_total / report.total_ms;
      else if (!note.empty()) {
        report.note = note;
        std::cerr << "warning: " << note << "\n";
      }
    }

    std::string text = report.to_json();
    std::cout << text << "\n";
    if (!report_file.empty()) {
      std::ofstream out(report_file);
      out << text << "\n";
    }
    exit_code = report.verify_pass ? 0 : 1;
    ctx.shutdown_nodes();
  } catch (...) {
    if (spawn) stop_cluster(children);
    throw;
  }
  if (spawn) stop_cluster(children);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HaoCL-style distributed kernel offload runtime"};
  app.require_subcommand(1);

  std::string config_path;
  std::string node_name;
  int threads = 1;
  bool quiet = false;
  auto* node_cmd = app.add_subcommand("node", "run a node daemon until Shutdown");
  node_cmd->add_option("--config", config_path, "cluster config file")->required();
  node_cmd->add_option("--name", node_name, "node name from the config")->required();
  node_cmd->add_option("--threads", threads, "OpenMP threads per device executor");
  node_cmd->add_flag("--quiet", quiet, "suppress the per-call log");

  haocl::bench::BenchParams params;
  std::string baseline_file = "haocl_baseline.json";
  std::string report_file;
  bool spawn = false;
  int spawn_threads = 1;

  auto add_run_options = [&](CLI::App* cmd, bool with_partition) {
    cmd->add_option("--config", config_path, "cluster config file")->required();
    cmd->add_option("--benchmark", params.benchmark, "matmul|spmv|bfs|knn|vecadd")->required();
    if (with_partition) {
      cmd->add_option("--partition", params.partition, "P-way data partition");
      cmd->add_option("--policy", params.policy,
                      "user_directed|round_robin|static_map|cost_model");
    }
    cmd->add_option("--seed", params.seed, "input generator seed");
    cmd->add_option("--m", params.m, "matmul rows");
    cmd->add_option("--k", params.k, "matmul inner dim");
    cmd->add_option("--n", params.n, "matmul cols");
    cmd->add_option("--rows", params.rows, "spmv rows");
    cmd->add_option("--cols", params.cols, "spmv cols");
    cmd->add_option("--density", params.density, "spmv nnz density");
    cmd->add_option("--vertices", params.vertices, "bfs vertex count");
    cmd->add_option("--edges", params.edges, "bfs edge count");
    cmd->add_option("--knn-r", params.knn_r, "knn reference points");
    cmd->add_option("--knn-q", params.knn_q, "knn query points");
    cmd->add_option("--knn-d", params.knn_d, "knn dimensions");
    cmd->add_option("--knn-k", params.knn_k, "knn neighbors");
    cmd->add_option("--length", params.length, "vecadd length");
    cmd->add_option("--baseline-file", baseline_file, "baseline timing store");
    cmd->add_option("--report", report_file, "also write the JSON report here");
    cmd->add_flag("--spawn", spawn, "spawn the configured daemons for this run");
    cmd->add_option("--spawn-threads", spawn_threads, "per-device threads for spawned daemons");
  };

  auto* run_cmd = app.add_subcommand("run", "run a benchmark and print its JSON report");
  add_run_options(run_cmd, true);
  auto* baseline_cmd = app.add_subcommand("baseline", "record the single-device baseline timing");
  add_run_options(baseline_cmd, false);

  std::vector<std::string> report_files;
  auto* breakdown_cmd = app.add_subcommand("breakdown", "phase table across run reports");
  breakdown_cmd->add_option("reports", report_files, "report JSON files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (node_cmd->parsed()) return cmd_node(config_path, node_name, threads, quiet);
    if (run_cmd->parsed())
      return run_and_report(config_path, params, false, baseline_file, report_file, spawn,
                            spawn_threads);
    if (baseline_cmd->parsed()) {
      params.partition = 1;
      return run_and_report(config_path, params, true, baseline_file, report_file, spawn,
                            spawn_threads);
    }
    if (breakdown_cmd->parsed()) {
      std::cout << haocl::bench::breakdown_table(report_files);
      return 0;
    }
  } catch (const haocl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
