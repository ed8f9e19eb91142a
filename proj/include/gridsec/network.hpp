#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridsec {

using NodeId = int;
using EdgeId = int;
using Complex = std::complex<double>;

enum class NodeKind { OS, MSR };

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::MSR;
  double u_nom = 0.0;
  Complex load{};  // MSR only; ignored for OS nodes
  double u_min = 0.0;
  double u_max = 0.0;

  bool is_os() const { return kind == NodeKind::OS; }
};

/// A cable. Endpoints are stored normalized so that n < m.
struct Edge {
  EdgeId id = 0;
  NodeId n = 0;
  NodeId m = 0;
  Complex z{};
  double i_max = 0.0;
  bool initially_active = false;

  bool touches(NodeId v) const { return n == v || m == v; }
  NodeId other(NodeId v) const { return v == n ? m : n; }
};

/// Sorted, duplicate-free set of edge ids.
class EdgeSet {
 public:
  EdgeSet() = default;
  EdgeSet(std::initializer_list<EdgeId> ids);
  explicit EdgeSet(std::vector<EdgeId> ids);

  bool contains(EdgeId id) const;
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  const std::vector<EdgeId>& ids() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  EdgeSet with(EdgeId id) const;
  EdgeSet without(EdgeId id) const;
  EdgeSet set_union(const EdgeSet& other) const;
  EdgeSet set_difference(const EdgeSet& other) const;
  EdgeSet set_intersection(const EdgeSet& other) const;
  EdgeSet symmetric_difference(const EdgeSet& other) const;

  friend bool operator==(const EdgeSet&, const EdgeSet&) = default;
  friend auto operator<=>(const EdgeSet& a, const EdgeSet& b) { return a.ids_ <=> b.ids_; }

 private:
  std::vector<EdgeId> ids_;
};

/// The set of active edges; the unit the searches operate on.
using Configuration = EdgeSet;

struct Switchover {
  EdgeSet activate;
  EdgeSet deactivate;

  std::size_t k() const { return activate.size(); }
  Switchover inverse() const { return {deactivate, activate}; }
  friend bool operator==(const Switchover&, const Switchover&) = default;
  friend auto operator<=>(const Switchover&, const Switchover&) = default;
};

/// Immutable grid graph. Construction validates every node/edge invariant and
/// that the initially active edges form a spanning tree.
class Network {
 public:
  Network(std::vector<Node> nodes, std::vector<Edge> edges);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const;
  const Edge& edge(EdgeId id) const;
  bool has_node(NodeId id) const { return node_index_.contains(id); }
  bool has_edge(EdgeId id) const { return edge_index_.contains(id); }
  std::size_t node_index(NodeId id) const;

  /// Edge ids incident to `v`, ascending.
  const std::vector<EdgeId>& incident(NodeId v) const;

  Configuration initial_configuration() const;
  std::vector<EdgeId> active_edges() const;
  std::vector<EdgeId> inactive_edges() const;
  std::vector<NodeId> os_nodes() const;
  std::vector<NodeId> msr_nodes() const;

  /// Finds the edge joining two nodes (lowest id if parallel); throws ArgumentError.
  EdgeId edge_between(NodeId a, NodeId b) const;

  /// Resolves "7", "3-6" or "3,6" to an edge id.
  EdgeId resolve_edge(std::string_view ref) const;

  /// Same network with one edge dropped; the remaining active set must still span.
  Network without_edge(EdgeId id) const;
  /// Same network with altered attributes of one edge.
  Network with_edge(const Edge& replacement) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<NodeId, std::size_t> node_index_;
  std::unordered_map<EdgeId, std::size_t> edge_index_;
  std::vector<std::vector<EdgeId>> incident_;
};

std::string edge_label(const Edge& e);

Network parse_network(std::string_view text);
Network load_network(const std::string& path);
std::string serialize_network(const Network& net);

bool is_spanning_tree(const Network& net, const Configuration& cfg);

/// Connected components of the graph (V, cfg), each sorted ascending.
std::vector<std::vector<NodeId>> connected_components(const Network& net, const Configuration& cfg);

struct FundamentalCycle {
  EdgeId inactive = 0;
  EdgeSet path;  // active edges on the tree path between the inactive edge's endpoints
};

std::vector<FundamentalCycle> fundamental_cycles(const Network& net, const Configuration& cfg);

Configuration apply_switchover(const Configuration& cfg, const Switchover& s);

/// Depth of every node when the tree `cfg` is rooted at `root`.
std::unordered_map<NodeId, int> tree_depths(const Network& net, const Configuration& cfg, NodeId root);

}  // namespace gridsec
