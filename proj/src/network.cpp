#include "gridsec/network.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "gridsec/error.hpp"

namespace gridsec {

using nlohmann::json;

// ---------------------------------------------------------------------------
// EdgeSet

EdgeSet::EdgeSet(std::initializer_list<EdgeId> ids) : EdgeSet(std::vector<EdgeId>(ids)) {}

EdgeSet::EdgeSet(std::vector<EdgeId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool EdgeSet::contains(EdgeId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

EdgeSet EdgeSet::with(EdgeId id) const {
  auto ids = ids_;
  ids.push_back(id);
  return EdgeSet(std::move(ids));
}

EdgeSet EdgeSet::without(EdgeId id) const {
  EdgeSet out;
  out.ids_.reserve(ids_.size());
  for (EdgeId e : ids_)
    if (e != id) out.ids_.push_back(e);
  return out;
}

EdgeSet EdgeSet::set_union(const EdgeSet& other) const {
  EdgeSet out;
  std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(), std::back_inserter(out.ids_));
  return out;
}

EdgeSet EdgeSet::set_difference(const EdgeSet& other) const {
  EdgeSet out;
  std::set_difference(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                      std::back_inserter(out.ids_));
  return out;
}

EdgeSet EdgeSet::set_intersection(const EdgeSet& other) const {
  EdgeSet out;
  std::set_intersection(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                        std::back_inserter(out.ids_));
  return out;
}

EdgeSet EdgeSet::symmetric_difference(const EdgeSet& other) const {
  EdgeSet out;
  std::set_symmetric_difference(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                                std::back_inserter(out.ids_));
  return out;
}

// ---------------------------------------------------------------------------
// Union-find over node indices

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns false if a and b were already joined.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

std::string describe_components(const std::vector<std::vector<NodeId>>& comps) {
  std::ostringstream os;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    os << (c ? " | " : "") << "{";
    for (std::size_t i = 0; i < comps[c].size(); ++i) os << (i ? "," : "") << comps[c][i];
    os << "}";
  }
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Network

std::string edge_label(const Edge& e) { return "{" + std::to_string(e.n) + "," + std::to_string(e.m) + "}"; }

Network::Network(std::vector<Node> nodes, std::vector<Edge> edges) : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  std::sort(nodes_.begin(), nodes_.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });

  if (nodes_.empty()) throw ValidationError("network has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& v = nodes_[i];
    if (!node_index_.emplace(v.id, i).second) throw ValidationError("duplicate node id " + std::to_string(v.id));
    if (!(v.u_min > 0.0)) throw ValidationError("node " + std::to_string(v.id) + ": u_min must be > 0");
    if (!(v.u_max >= v.u_min)) throw ValidationError("node " + std::to_string(v.id) + ": u_max < u_min");
    if (!(v.u_nom > 0.0)) throw ValidationError("node " + std::to_string(v.id) + ": u_nom must be > 0");
    if (v.is_os() && (v.u_min != v.u_nom || v.u_max != v.u_nom))
      throw ValidationError("OS node " + std::to_string(v.id) + " must have u_min = u_max = u_nom");
  }
  if (os_nodes().empty()) throw ValidationError("network has no OS node");

  incident_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    Edge& e = edges_[i];
    if (!edge_index_.emplace(e.id, i).second) throw ValidationError("duplicate edge id " + std::to_string(e.id));
    if (e.n == e.m) throw ValidationError("edge " + std::to_string(e.id) + " is a self-loop");
    if (e.n > e.m) std::swap(e.n, e.m);
    if (!has_node(e.n) || !has_node(e.m))
      throw ValidationError("edge " + std::to_string(e.id) + " references an unknown node");
    if (e.z == Complex{}) throw ValidationError("edge " + std::to_string(e.id) + ": impedance must be nonzero");
    if (!(e.i_max >= 0.0)) throw ValidationError("edge " + std::to_string(e.id) + ": i_max must be >= 0");
    incident_[node_index_.at(e.n)].push_back(e.id);
    incident_[node_index_.at(e.m)].push_back(e.id);
  }

  const Configuration active = initial_configuration();
  if (active.size() + 1 != nodes_.size() || !is_spanning_tree(*this, active)) {
    auto comps = connected_components(*this, active);
    if (comps.size() > 1)
      throw ValidationError("active edges do not span the network; components: " + describe_components(comps));
    // Connected with too many edges: name the first edge closing a cycle.
    DisjointSets ds(nodes_.size());
    for (EdgeId id : active) {
      const Edge& e = edge(id);
      if (!ds.unite(node_index(e.n), node_index(e.m)))
        throw ValidationError("active edges contain a cycle closed by edge " + std::to_string(id) + " " +
                              edge_label(e));
    }
    throw ValidationError("active edges do not form a spanning tree");
  }
}

const Node& Network::node(NodeId id) const { return nodes_[node_index(id)]; }

const Edge& Network::edge(EdgeId id) const {
  auto it = edge_index_.find(id);
  if (it == edge_index_.end()) throw ArgumentError("unknown edge id " + std::to_string(id));
  return edges_[it->second];
}

std::size_t Network::node_index(NodeId id) const {
  auto it = node_index_.find(id);
  if (it == node_index_.end()) throw ArgumentError("unknown node id " + std::to_string(id));
  return it->second;
}

const std::vector<EdgeId>& Network::incident(NodeId v) const { return incident_[node_index(v)]; }

Configuration Network::initial_configuration() const { return Configuration(active_edges()); }

std::vector<EdgeId> Network::active_edges() const {
  std::vector<EdgeId> out;
  for (const Edge& e : edges_)
    if (e.initially_active) out.push_back(e.id);
  return out;
}

std::vector<EdgeId> Network::inactive_edges() const {
  std::vector<EdgeId> out;
  for (const Edge& e : edges_)
    if (!e.initially_active) out.push_back(e.id);
  return out;
}

std::vector<NodeId> Network::os_nodes() const {
  std::vector<NodeId> out;
  for (const Node& v : nodes_)
    if (v.is_os()) out.push_back(v.id);
  return out;
}

std::vector<NodeId> Network::msr_nodes() const {
  std::vector<NodeId> out;
  for (const Node& v : nodes_)
    if (!v.is_os()) out.push_back(v.id);
  return out;
}

EdgeId Network::edge_between(NodeId a, NodeId b) const {
  if (has_node(a))
    for (EdgeId id : incident(a))
      if (edge(id).touches(b)) return id;
  throw ArgumentError("no edge between nodes " + std::to_string(a) + " and " + std::to_string(b));
}

EdgeId Network::resolve_edge(std::string_view ref) const {
  auto parse_int = [&](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '{' || s.front() == '(')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '}' || s.back() == ')')) s.remove_suffix(1);
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ArgumentError("bad edge reference '" + std::string(ref) + "'");
    return v;
  };
  auto sep = ref.find_first_of(",-");
  if (sep == std::string_view::npos) {
    EdgeId id = parse_int(ref);
    edge(id);  // throws if unknown
    return id;
  }
  return edge_between(parse_int(ref.substr(0, sep)), parse_int(ref.substr(sep + 1)));
}

Network Network::without_edge(EdgeId id) const {
  edge(id);
  std::vector<Edge> kept;
  for (const Edge& e : edges_)
    if (e.id != id) kept.push_back(e);
  return Network(nodes_, std::move(kept));
}

Network Network::with_edge(const Edge& replacement) const {
  edge(replacement.id);
  std::vector<Edge> edges = edges_;
  for (Edge& e : edges)
    if (e.id == replacement.id) e = replacement;
  return Network(nodes_, std::move(edges));
}

// ---------------------------------------------------------------------------
// File format

namespace {

// Line of the `index`-th element of the top-level array under `key`, or 0.
int element_line(std::string_view text, std::string_view key, std::size_t index) {
  int line = 1, depth = 0;
  bool in_string = false, escape = false, in_target = false;
  std::size_t count = 0;
  std::string last_string;
  std::string current;
  bool pending_key = false;
  for (char c : text) {
    if (c == '\n') ++line;
    if (in_string) {
      if (escape) {
        escape = false;
      } else if (c == '\\') {
        escape = true;
      } else if (c == '"') {
        in_string = false;
        last_string = current;
        pending_key = (depth == 1);
      } else {
        current.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_string = true;
        current.clear();
        break;
      case '[':
        if (depth == 1 && pending_key && last_string == key) in_target = true;
        ++depth;
        break;
      case '{':
        if (in_target && depth == 2) {
          if (count == index) return line;
          ++count;
        }
        ++depth;
        break;
      case ']':
      case '}':
        --depth;
        if (depth == 1) in_target = false;
        break;
      case ',':
        pending_key = false;
        break;
      default:
        break;
    }
  }
  return 0;
}

int line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

Complex parse_complex(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument("expected a 2-element real array");
  return {j[0].get<double>(), j[1].get<double>()};
}

double number_field(const json& obj, const char* name) {
  if (!obj.contains(name)) throw std::invalid_argument(std::string("missing field '") + name + "'");
  const json& v = obj.at(name);
  if (!v.is_number()) throw std::invalid_argument(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

int int_field(const json& obj, const char* name) {
  if (!obj.contains(name)) throw std::invalid_argument(std::string("missing field '") + name + "'");
  const json& v = obj.at(name);
  if (!v.is_number_integer()) throw std::invalid_argument(std::string("field '") + name + "' must be an integer");
  return v.get<int>();
}

nlohmann::ordered_json complex_json(Complex c) { return nlohmann::ordered_json::array({c.real(), c.imag()}); }

}  // namespace

Network parse_network(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of_byte(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  if (!doc.is_object()) throw ParseError("top level must be an object", 1);
  for (const char* key : {"nodes", "edges"})
    if (!doc.contains(key) || !doc.at(key).is_array())
      throw ParseError(std::string("missing array '") + key + "'", 1);

  std::vector<Node> nodes;
  const json& jn = doc.at("nodes");
  for (std::size_t i = 0; i < jn.size(); ++i) {
    try {
      const json& o = jn[i];
      if (!o.is_object()) throw std::invalid_argument("node entry must be an object");
      Node v;
      v.id = int_field(o, "id");
      const std::string type = o.value("type", "");
      if (type == "OS") {
        v.kind = NodeKind::OS;
      } else if (type == "MSR") {
        v.kind = NodeKind::MSR;
      } else {
        throw std::invalid_argument("field 'type' must be \"OS\" or \"MSR\"");
      }
      v.u_nom = number_field(o, "u_nom");
      v.load = o.contains("load") ? parse_complex(o.at("load")) : Complex{};
      v.u_min = number_field(o, "u_min");
      v.u_max = number_field(o, "u_max");
      nodes.push_back(v);
    } catch (const std::invalid_argument& e) {
      throw ParseError("nodes[" + std::to_string(i) + "]: " + e.what(), element_line(text, "nodes", i));
    } catch (const json::exception& e) {
      throw ParseError("nodes[" + std::to_string(i) + "]: " + e.what(), element_line(text, "nodes", i));
    }
  }

  std::vector<Edge> edges;
  const json& je = doc.at("edges");
  for (std::size_t i = 0; i < je.size(); ++i) {
    try {
      const json& o = je[i];
      if (!o.is_object()) throw std::invalid_argument("edge entry must be an object");
      Edge e;
      e.id = int_field(o, "id");
      e.n = int_field(o, "n");
      e.m = int_field(o, "m");
      if (!o.contains("z")) throw std::invalid_argument("missing field 'z'");
      e.z = parse_complex(o.at("z"));
      e.i_max = number_field(o, "i_max");
      if (!o.contains("active") || !o.at("active").is_boolean())
        throw std::invalid_argument("field 'active' must be a boolean");
      e.initially_active = o.at("active").get<bool>();
      edges.push_back(e);
    } catch (const std::invalid_argument& e) {
      throw ParseError("edges[" + std::to_string(i) + "]: " + e.what(), element_line(text, "edges", i));
    } catch (const json::exception& e) {
      throw ParseError("edges[" + std::to_string(i) + "]: " + e.what(), element_line(text, "edges", i));
    }
  }

  return Network(std::move(nodes), std::move(edges));
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open network file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

std::string serialize_network(const Network& net) {
  nlohmann::ordered_json doc;
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const Node& v : net.nodes()) {
    doc["nodes"].push_back({{"id", v.id},
                            {"type", v.is_os() ? "OS" : "MSR"},
                            {"u_nom", v.u_nom},
                            {"load", complex_json(v.load)},
                            {"u_min", v.u_min},
                            {"u_max", v.u_max}});
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (const Edge& e : net.edges()) {
    doc["edges"].push_back({{"id", e.id},
                            {"n", e.n},
                            {"m", e.m},
                            {"z", complex_json(e.z)},
                            {"i_max", e.i_max},
                            {"active", e.initially_active}});
  }
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Graph operations

namespace {

void check_known(const Network& net, const Configuration& cfg) {
  for (EdgeId id : cfg)
    if (!net.has_edge(id)) throw ArgumentError("configuration references unknown edge id " + std::to_string(id));
}

}  // namespace

bool is_spanning_tree(const Network& net, const Configuration& cfg) {
  check_known(net, cfg);
  if (cfg.size() + 1 != net.nodes().size()) return false;
  DisjointSets ds(net.nodes().size());
  for (EdgeId id : cfg) {
    const Edge& e = net.edge(id);
    if (!ds.unite(net.node_index(e.n), net.node_index(e.m))) return false;
  }
  return true;
}

std::vector<std::vector<NodeId>> connected_components(const Network& net, const Configuration& cfg) {
  check_known(net, cfg);
  DisjointSets ds(net.nodes().size());
  for (EdgeId id : cfg) {
    const Edge& e = net.edge(id);
    ds.unite(net.node_index(e.n), net.node_index(e.m));
  }
  std::vector<std::vector<NodeId>> by_root(net.nodes().size());
  for (std::size_t i = 0; i < net.nodes().size(); ++i) by_root[ds.find(i)].push_back(net.nodes()[i].id);
  std::vector<std::vector<NodeId>> out;
  for (auto& c : by_root)
    if (!c.empty()) out.push_back(std::move(c));
  return out;
}

namespace {

struct RootedTree {
  std::vector<int> depth;               // per node index
  std::vector<EdgeId> parent_edge;      // per node index, -1 at root
  std::vector<std::size_t> parent;      // per node index
};

RootedTree root_tree(const Network& net, const Configuration& cfg, std::size_t root) {
  const std::size_t n = net.nodes().size();
  RootedTree t{std::vector<int>(n, -1), std::vector<EdgeId>(n, -1), std::vector<std::size_t>(n, root)};
  std::queue<std::size_t> q;
  t.depth[root] = 0;
  q.push(root);
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop();
    NodeId uid = net.nodes()[u].id;
    for (EdgeId id : net.incident(uid)) {
      if (!cfg.contains(id)) continue;
      std::size_t w = net.node_index(net.edge(id).other(uid));
      if (t.depth[w] >= 0) continue;
      t.depth[w] = t.depth[u] + 1;
      t.parent[w] = u;
      t.parent_edge[w] = id;
      q.push(w);
    }
  }
  return t;
}

}  // namespace

std::vector<FundamentalCycle> fundamental_cycles(const Network& net, const Configuration& cfg) {
  if (!is_spanning_tree(net, cfg)) throw PreconditionError("fundamental_cycles requires a spanning tree");
  const RootedTree t = root_tree(net, cfg, 0);
  std::vector<FundamentalCycle> out;
  for (const Edge& e : net.edges()) {
    if (cfg.contains(e.id)) continue;
    std::size_t a = net.node_index(e.n), b = net.node_index(e.m);
    std::vector<EdgeId> path;
    while (a != b) {
      if (t.depth[a] >= t.depth[b]) {
        path.push_back(t.parent_edge[a]);
        a = t.parent[a];
      } else {
        path.push_back(t.parent_edge[b]);
        b = t.parent[b];
      }
    }
    out.push_back({e.id, EdgeSet(std::move(path))});
  }
  return out;
}

Configuration apply_switchover(const Configuration& cfg, const Switchover& s) {
  for (EdgeId id : s.deactivate)
    if (!cfg.contains(id)) throw ArgumentError("cannot deactivate edge " + std::to_string(id) + ": not active");
  for (EdgeId id : s.activate) {
    if (cfg.contains(id)) throw ArgumentError("cannot activate edge " + std::to_string(id) + ": already active");
    if (s.deactivate.contains(id))
      throw ArgumentError("edge " + std::to_string(id) + " is both activated and deactivated");
  }
  return cfg.set_difference(s.deactivate).set_union(s.activate);
}

std::unordered_map<NodeId, int> tree_depths(const Network& net, const Configuration& cfg, NodeId root) {
  if (!is_spanning_tree(net, cfg)) throw PreconditionError("tree_depths requires a spanning tree");
  const RootedTree t = root_tree(net, cfg, net.node_index(root));
  std::unordered_map<NodeId, int> out;
  for (std::size_t i = 0; i < net.nodes().size(); ++i) out[net.nodes()[i].id] = t.depth[i];
  return out;
}

}  // namespace gridsec
