#pragma once

// Cluster configuration file, line-oriented:
//   host <ip>:<port>                                     exactly one line
//   node <name> <ip>:<message_port> <cpu|gpu|fpga> <relative_throughput>
//   map <kernel_name> <global_id>                        optional, static_map table
// Repeated node names append devices to that node. Lines starting with '#'
// and blank lines are ignored. The data port of every endpoint is the
// message port + 1.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "haocl/wire.hpp"

namespace haocl {

struct Endpoint {
  std::string host;
  uint16_t message_port = 0;
  uint16_t data_port = 0;

  static Endpoint at(std::string host, uint16_t message_port) {
    return Endpoint{std::move(host), message_port, static_cast<uint16_t>(message_port + 1)};
  }

  std::string str() const { return host + ":" + std::to_string(message_port); }

  bool operator==(const Endpoint&) const = default;
};

struct DeviceModel {
  wire::DeviceType type = wire::DeviceType::cpu;
  double relative_throughput = 1.0;  // work-units/s relative to a cpu baseline of 1.0

  bool operator==(const DeviceModel&) const = default;
};

struct NodeSpec {
  std::string name;
  Endpoint endpoint;
  std::vector<DeviceModel> devices;
};

struct ClusterConfig {
  Endpoint host_endpoint;
  std::vector<NodeSpec> nodes;
  std::map<std::string, int> kernel_map;  // static_map policy table

  const NodeSpec* find_node(const std::string& name) const;
  std::vector<std::string> node_names() const;

  static ClusterConfig parse(const std::string& text);
  static ClusterConfig parse_file(const std::string& path);
  std::string to_text() const;
};

}  // namespace haocl
