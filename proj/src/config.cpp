#include "haocl/config.hpp"

#include <fstream>
#include <sstream>

#include "haocl/error.hpp"

namespace haocl {

namespace {

Endpoint parse_endpoint(const std::string& word, int line_no) {
  auto colon = word.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == word.size())
    fail(ErrorCode::config, "line " + std::to_string(line_no) + ": expected <ip>:<port>, got '" + word + "'");
  std::string host = word.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(word.substr(colon + 1));
  } catch (const std::exception&) {
    fail(ErrorCode::config, "line " + std::to_string(line_no) + ": bad port in '" + word + "'");
  }
  // data port = message port + 1, so the message port must leave room for it
  if (port < 1 || port > 65534)
    fail(ErrorCode::config, "line " + std::to_string(line_no) + ": port out of range in '" + word + "'");
  return Endpoint::at(host, static_cast<uint16_t>(port));
}

}  // namespace

const NodeSpec* ClusterConfig::find_node(const std::string& name) const {
  for (const auto& node : nodes)
    if (node.name == name) return &node;
  return nullptr;
}

std::vector<std::string> ClusterConfig::node_names() const {
  std::vector<std::string> names;
  names.reserve(nodes.size());
  for (const auto& node : nodes) names.push_back(node.name);
  return names;
}

ClusterConfig ClusterConfig::parse(const std::string& text) {
  ClusterConfig config;
  bool saw_host = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string keyword;
    if (!(fields >> keyword) || keyword[0] == '#') continue;

    if (keyword == "host") {
      if (saw_host) fail(ErrorCode::config, "line " + std::to_string(line_no) + ": duplicate host line");
      std::string ep;
      if (!(fields >> ep)) fail(ErrorCode::config, "line " + std::to_string(line_no) + ": host needs <ip>:<port>");
      config.host_endpoint = parse_endpoint(ep, line_no);
      saw_host = true;
    } else if (keyword == "node") {
      std::string name, ep, type_word;
      double throughput = 0.0;
      if (!(fields >> name >> ep >> type_word >> throughput))
        fail(ErrorCode::config, "line " + std::to_string(line_no) +
                                    ": node needs <name> <ip>:<port> <cpu|gpu|fpga> <relative_throughput>");
      auto type = wire::parse_device_type(type_word);
      if (!type)
        fail(ErrorCode::config, "line " + std::to_string(line_no) + ": unknown device type '" + type_word + "'");
      if (!(throughput > 0.0))
        fail(ErrorCode::config, "line " + std::to_string(line_no) + ": relative_throughput must be > 0");
      Endpoint endpoint = parse_endpoint(ep, line_no);

      NodeSpec* node = nullptr;
      for (auto& n : config.nodes)
        if (n.name == name) node = &n;
      if (node) {
        if (node->endpoint != endpoint)
          fail(ErrorCode::config,
               "line " + std::to_string(line_no) + ": node '" + name + "' listed with two different endpoints");
        node->devices.push_back(DeviceModel{*type, throughput});
      } else {
        config.nodes.push_back(NodeSpec{name, endpoint, {DeviceModel{*type, throughput}}});
      }
    } else if (keyword == "map") {
      std::string kernel;
      int global_id = -1;
      if (!(fields >> kernel >> global_id) || global_id < 0)
        fail(ErrorCode::config, "line " + std::to_string(line_no) + ": map needs <kernel_name> <global_id>");
      config.kernel_map[kernel] = global_id;
    } else {
      fail(ErrorCode::config, "line " + std::to_string(line_no) + ": unknown keyword '" + keyword + "'");
    }
  }

  if (!saw_host) fail(ErrorCode::config, "missing host line");
  if (config.nodes.empty()) fail(ErrorCode::config, "at least one node required");
  for (const auto& a : config.nodes) {
    if (a.devices.empty()) fail(ErrorCode::config, "node '" + a.name + "' has no devices");
    for (const auto& b : config.nodes) {
      if (&a != &b && a.endpoint == b.endpoint)
        fail(ErrorCode::config, "nodes '" + a.name + "' and '" + b.name + "' share endpoint " + a.endpoint.str());
    }
  }
  return config;
}

ClusterConfig ClusterConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ClusterConfig::to_text() const {
  std::ostringstream out;
  out << "host " << host_endpoint.str() << "\n";
  for (const auto& node : nodes)
    for (const auto& dev : node.devices)
      out << "node " << node.name << " " << node.endpoint.str() << " "
          << wire::device_type_name(dev.type) << " " << dev.relative_throughput << "\n";
  for (const auto& [kernel, gid] : kernel_map) out << "map " << kernel << " " << gid << "\n";
  return out.str();
}

}  // namespace haocl
