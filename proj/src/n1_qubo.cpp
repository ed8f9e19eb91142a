#include "gridsec/n1_qubo.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "gridsec/error.hpp"
#include "gridsec/loadflow.hpp"

namespace gridsec {

namespace {

const char* const kTreeGroups[] = {"dw", "root", "con", "ind"};
const char* const kLoadflowGroups[] = {"ur", "ui", "i"};
constexpr double kRelativePruneTol = 1e-12;


double max_u_nom(const Network& net) {
  double s = 0.0;
  for (const Node& v : net.nodes()) s = std::max(s, v.u_nom);
  return s;
}

// Builder state shared by the three public builders.
struct Assembly {
  VarAllocator alloc;
  std::map<std::string, Qubo> groups;
  QuboLayout layout;

  Qubo& group(const std::string& name) { return groups[name]; }
};

void add_tree_part(Assembly& as, const Network& net, std::size_t I, std::optional<EdgeId> failing) {
  TreeVarLayout t;
  t.I = I;
  t.failing_edge = failing;
  // Only OS nodes may sit at depth 0, so MSR nodes drop the level-0 bit.
  for (const Node& v : net.nodes()) {
    auto& bits = t.depth_bits[v.id];
    for (std::size_t i = v.is_os() ? 0 : 1; i + 1 < I; ++i)
      bits.push_back(as.alloc.allocate("x[v=" + std::to_string(v.id) + ",i=" + std::to_string(i) + "]"));
  }
  for (const Edge& e : net.edges()) {
    if (failing && e.id == *failing) continue;
    auto& bits = t.edge_bits[e.id];
    for (std::size_t i = 0; i + 2 < 2 * I; ++i)
      bits.push_back(as.alloc.allocate("y[e=" + edge_label(e) + ",i=" + std::to_string(i) + "]"));
  }

  Qubo& dw = as.group("dw");
  for (const auto& [v, bits] : t.depth_bits) dw.add(domain_wall(bits));
  for (const auto& [e, bits] : t.edge_bits) dw.add(domain_wall(bits));

  auto dx = [&](NodeId v, std::size_t level) {
    const std::size_t base = t.depth_base(v);
    return level < base ? LinearExpr(0.0) : domain_wall_indicator(t.depth_bits.at(v), level - base);
  };
  auto dy = [&](EdgeId e, std::size_t option) { return domain_wall_indicator(t.edge_bits.at(e), option); };

  Qubo& root = as.group("root");
  LinearExpr one_root(1.0);
  for (const Node& v : net.nodes())
    if (v.is_os()) one_root -= dx(v.id, 0);
  add_square(root, one_root);

  Qubo& con = as.group("con");
  for (const Node& v : net.nodes()) {
    for (std::size_t i = 1; i < I; ++i) {
      LinearExpr r = dx(v.id, i);
      for (EdgeId eid : net.incident(v.id)) {
        if (!t.edge_bits.contains(eid)) continue;
        const Edge& e = net.edge(eid);
        r -= dy(eid, v.id == e.n ? i - 1 : I + i - 2);
      }
      add_square(con, r);
    }
  }

  Qubo& ind = as.group("ind");
  for (const auto& [eid, bits] : t.edge_bits) {
    const Edge& e = net.edge(eid);
    for (std::size_t i = 0; i + 1 < I; ++i) {
      add_product(ind, dy(eid, i), LinearExpr(2.0) - dx(e.n, i + 1) - dx(e.m, i));
      add_product(ind, dy(eid, I - 1 + i), LinearExpr(2.0) - dx(e.n, i) - dx(e.m, i + 1));
    }
  }

  Qubo& obj = as.group("obj");
  for (const auto& [eid, bits] : t.edge_bits) {
    if (net.edge(eid).initially_active) {
      obj.add_offset(1.0);
      obj.add_linear(bits.back(), -1.0);
    } else {
      obj.add_linear(bits.back(), 1.0);
    }
  }
  if (failing) obj.add_offset(1.0);

  as.layout.tree = std::move(t);
}

// y_e * U_v as an affine form: over z bits when gated, plain bits otherwise.
struct Voltage {
  LinearExpr real, imag;
};

Voltage gate(const LinearExpr& ur, const LinearExpr& ui, std::optional<std::size_t> y,
             const std::vector<std::size_t>& zr, const std::vector<std::size_t>& zi) {
  if (!y) return {ur, ui};
  auto swap_in = [&](const LinearExpr& u, const std::vector<std::size_t>& z) {
    LinearExpr g;
    if (u.constant != 0.0) g.add(*y, u.constant);
    for (std::size_t k = 0; k < u.terms.size(); ++k) g.add(z.at(k), u.terms[k].second);
    return g;
  };
  return {swap_in(ur, zr), swap_in(ui, zi)};
}

// Load-flow rows. With `tree` set, every non-failing edge is gated by its in-tree bit;
// otherwise only the edges of `cfg` take part.
void add_loadflow_part(Assembly& as, const Network& net, const Configuration* cfg, std::size_t K, std::size_t L,
                       std::size_t J, bool normalize) {
  if (K < 1 || L < 1 || J < 1) throw ArgumentError("bit widths K, L, J must be >= 1");
  const TreeVarLayout* tree = as.layout.tree ? &*as.layout.tree : nullptr;
  LoadflowVarLayout lf;
  lf.K = K;
  lf.L = L;
  lf.J = J;
  lf.normalize_rows = normalize;

  std::map<NodeId, LinearExpr> ur, ui;
  for (const Node& v : net.nodes()) {
    if (v.is_os()) {
      ur[v.id] = LinearExpr(v.u_nom);
      ui[v.id] = LinearExpr(0.0);
      continue;
    }
    const std::string id = std::to_string(v.id);
    for (std::size_t k = 1; k <= K; ++k)
      lf.ur_bits[v.id].push_back(as.alloc.allocate("uR[v=" + id + ",k=" + std::to_string(k) + "]"));
    for (std::size_t l = 1; l <= L; ++l)
      lf.ui_bits[v.id].push_back(as.alloc.allocate("uI[v=" + id + ",l=" + std::to_string(l) + "]"));
    ur[v.id] = ur_expr(v, K, lf.ur_bits[v.id]);
    ui[v.id] = ui_expr(v, L, lf.ui_bits[v.id]);
  }

  std::vector<EdgeId> edges;
  for (const Edge& e : net.edges()) {
    if (tree ? tree->edge_bits.contains(e.id) : cfg->contains(e.id)) edges.push_back(e.id);
  }
  const EdgeSet ep = problem_edges(net);
  for (EdgeId eid : edges) {
    if (!ep.contains(eid)) continue;
    const std::string tag = edge_label(net.edge(eid));
    for (std::size_t j = 1; j <= J; ++j)
      lf.current_bits[eid].push_back(as.alloc.allocate("I[e=" + tag + ",j=" + std::to_string(j) + "]"));
  }

  // Gated voltages per (edge, endpoint).
  std::map<std::pair<EdgeId, NodeId>, Voltage> g;
  for (EdgeId eid : edges) {
    const Edge& e = net.edge(eid);
    for (NodeId v : {e.n, e.m}) {
      std::optional<std::size_t> y;
      std::vector<std::size_t> zr, zi;
      if (tree) {
        y = tree->in_tree_bit(eid);
        if (!net.node(v).is_os()) {
          GatedVoltage gv{eid, v, {}, {}};
          const std::string pre = "[e=" + edge_label(e) + ",v=" + std::to_string(v);
          for (std::size_t k = 1; k <= K; ++k)
            gv.real_bits.push_back(as.alloc.allocate("zR" + pre + ",k=" + std::to_string(k) + "]"));
          for (std::size_t l = 1; l <= L; ++l)
            gv.imag_bits.push_back(as.alloc.allocate("zI" + pre + ",l=" + std::to_string(l) + "]"));
          zr = gv.real_bits;
          zi = gv.imag_bits;
          lf.gated.push_back(std::move(gv));
        }
      }
      g[{eid, v}] = gate(ur.at(v), ui.at(v), y, zr, zi);
    }
  }

  Qubo& pur = as.group("ur");
  Qubo& pui = as.group("ui");
  Qubo& pi = as.group("i");
  for (const Node& v : net.nodes()) {
    if (v.is_os()) continue;
    const Complex Y = admittance(v.load, v.u_nom);
    LinearExpr re = Y.real() * ur.at(v.id) - Y.imag() * ui.at(v.id);
    LinearExpr im = Y.imag() * ur.at(v.id) + Y.real() * ui.at(v.id);
    double scale = std::abs(Y);
    for (EdgeId eid : net.incident(v.id)) scale += std::abs(1.0 / net.edge(eid).z);
    for (EdgeId eid : edges) {
      const Edge& e = net.edge(eid);
      if (!e.touches(v.id)) continue;
      const Complex y = 1.0 / e.z;
      const Voltage& here = g.at({eid, v.id});
      const Voltage& there = g.at({eid, e.other(v.id)});
      const LinearExpr dr = here.real - there.real;
      const LinearExpr di = here.imag - there.imag;
      re += y.real() * dr - y.imag() * di;
      im += y.imag() * dr + y.real() * di;
    }
    const double w = normalize && scale > 0.0 ? 1.0 / (scale * scale) : 1.0;
    add_square(pur, re, w);
    add_square(pui, im, w);
  }
  for (const auto& [eid, bits] : lf.current_bits) {
    const Edge& e = net.edge(eid);
    const Complex y = 1.0 / e.z;
    const Voltage& a = g.at({eid, e.n});
    const Voltage& b = g.at({eid, e.m});
    LinearExpr r = current_expr(e, J, bits) + y.real() * (a.real - b.real) - y.imag() * (a.imag - b.imag);
    const double w = normalize ? 1.0 / std::norm(y) : 1.0;
    add_square(pi, r, w);
  }

  if (tree) {
    Qubo& aux = as.group("aux");
    for (const GatedVoltage& gv : lf.gated) {
      const std::size_t y = tree->in_tree_bit(gv.edge);
      for (std::size_t k = 0; k < K; ++k)
        aux.add(pair_substitution_penalty(y, lf.ur_bits.at(gv.node)[k], gv.real_bits[k]));
      for (std::size_t l = 0; l < L; ++l)
        aux.add(pair_substitution_penalty(y, lf.ui_bits.at(gv.node)[l], gv.imag_bits[l]));
    }
  }
  as.layout.loadflow = std::move(lf);
}

double default_aux_weight(const Assembly& as, const std::map<std::string, double>& weights) {
  Qubo lf(as.alloc.size());
  for (const char* name : kLoadflowGroups)
    if (auto it = as.groups.find(name); it != as.groups.end()) lf.add(it->second, weights.at(name));
  const QuboMatrix m(lf);
  double worst = 0.0;
  for (const GatedVoltage& gv : as.layout.loadflow->gated) {
    for (const auto* bits : {&gv.real_bits, &gv.imag_bits}) {
      for (std::size_t z : *bits) {
        double field = std::abs(m.linear[z]);
        for (std::size_t p = m.row_start[z]; p < m.row_start[z + 1]; ++p) field += std::abs(m.weight[p]);
        worst = std::max(worst, field);
      }
    }
  }
  return 1.0 + worst;
}

BuiltQubo finish(Assembly& as, const Network& net, std::map<std::string, double> weights) {
  BuiltQubo out;
  const std::size_t n = as.alloc.size();
  if (as.layout.loadflow && as.layout.tree && !weights.contains("aux")) weights["aux"] = default_aux_weight(as, weights);
  out.qubo.resize(n);
  for (auto& [name, q] : as.groups) {
    q.resize(n);
    q.prune();
    out.qubo.add(q, weights.at(name));
  }
  // Cancellation leaves residue many orders below the largest coefficient.
  double largest = 0.0;
  for (const auto& [ij, c] : out.qubo.coeffs()) largest = std::max(largest, std::abs(c));
  out.qubo.prune(largest * kRelativePruneTol);
  out.layout = std::move(as.layout);
  out.layout.groups = std::move(as.groups);
  std::map<std::string, double> used;
  for (const auto& [name, q] : out.layout.groups) used[name] = weights.at(name);
  out.layout.weights = std::move(used);
  out.layout.labels = as.alloc.labels();
  out.layout.network = std::make_shared<const Network>(net);
  return out;
}

void check_failing(const Network& net, std::optional<EdgeId> failing) {
  if (!failing) return;
  if (!net.has_edge(*failing)) throw ArgumentError("unknown failing edge " + std::to_string(*failing));
  if (!net.edge(*failing).initially_active)
    throw ArgumentError("failing edge " + std::to_string(*failing) + " is not active");
}

void check_height(const Network& net, std::size_t I) {
  if (I < 2) throw ArgumentError("height bound I must be >= 2");
  if (I > std::max<std::size_t>(2, net.nodes().size()))
    throw ArgumentError("height bound I must not exceed the node count");
}

}  // namespace

LinearExpr ur_expr(const Node& v, std::size_t K, const std::vector<std::size_t>& vars) {
  const double step = (v.u_max - v.u_min) / std::ldexp(1.0, static_cast<int>(K));
  LinearExpr e(v.u_min + step);
  for (std::size_t k = 1; k <= K; ++k) e.add(vars.at(k - 1), step * std::ldexp(1.0, static_cast<int>(k) - 1));
  return e;
}

LinearExpr ui_expr(const Node& v, std::size_t L, const std::vector<std::size_t>& vars) {
  const double step = 0.1 * v.u_min / std::ldexp(1.0, static_cast<int>(L));
  LinearExpr e(-0.1 * v.u_min);
  for (std::size_t l = 1; l <= L; ++l) e.add(vars.at(l - 1), step * std::ldexp(1.0, static_cast<int>(l)));
  return e;
}

LinearExpr current_expr(const Edge& e, std::size_t J, const std::vector<std::size_t>& vars) {
  const double step = 2.0 * e.i_max / std::ldexp(1.0, static_cast<int>(J));
  LinearExpr x(-e.i_max + step);
  for (std::size_t j = 1; j <= J; ++j) x.add(vars.at(j - 1), step * std::ldexp(1.0, static_cast<int>(j) - 1));
  return x;
}

std::map<std::string, double> resolve_weights(const Network& net, const PenaltyWeights& w) {
  const double big = 2.0 * static_cast<double>(net.edges().size());
  std::map<std::string, double> out;
  out["obj"] = 1.0;
  out["root"] = w.root.value_or(big);
  out["con"] = w.con.value_or(big);
  out["ind"] = w.ind.value_or(big);
  out["dw"] = w.dw.value_or(4.0 * out["ind"] + big);
  const double s = max_u_nom(net);
  const double lf = s > 0.0 ? 1.0 / (s * s) : 1.0;
  out["ur"] = w.ur.value_or(lf);
  out["ui"] = w.ui.value_or(lf);
  out["i"] = w.i.value_or(lf);
  if (w.aux) out["aux"] = *w.aux;
  for (const auto& [k, v] : out)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("penalty weight '" + k + "' must be finite and >= 0");
  if (w.aux && !(*w.aux > 0.0)) throw ArgumentError("penalty weight 'aux' must be > 0");
  return out;
}

std::size_t default_height(const Network& net, std::optional<EdgeId> failing_edge) {
  const std::size_t nv = net.nodes().size();
  if (nv <= 2) return 2;
  std::size_t diameter = 0;
  for (const Node& src : net.nodes()) {
    std::map<NodeId, std::size_t> dist{{src.id, 0}};
    std::queue<NodeId> q;
    q.push(src.id);
    while (!q.empty()) {
      const NodeId u = q.front();
      q.pop();
      for (EdgeId eid : net.incident(u)) {
        if (failing_edge && eid == *failing_edge) continue;
        const NodeId w = net.edge(eid).other(u);
        if (dist.emplace(w, dist[u] + 1).second) {
          diameter = std::max(diameter, dist[w]);
          q.push(w);
        }
      }
    }
  }
  return std::clamp<std::size_t>(diameter + 1, 2, nv);
}

BuiltQubo build_tree_qubo(const Network& net, std::size_t I, const PenaltyWeights& w, std::optional<EdgeId> failing) {
  check_height(net, I);
  check_failing(net, failing);
  Assembly as;
  add_tree_part(as, net, I, failing);
  return finish(as, net, resolve_weights(net, w));
}

BuiltQubo build_loadflow_qubo(const Network& net, const Configuration& cfg, std::size_t K, std::size_t L, std::size_t J,
                              const PenaltyWeights& w) {
  if (!is_spanning_tree(net, cfg)) throw PreconditionError("build_loadflow_qubo requires a spanning tree");
  Assembly as;
  add_loadflow_part(as, net, &cfg, K, L, J, w.normalize_rows);
  as.layout.fixed_configuration = cfg;
  return finish(as, net, resolve_weights(net, w));
}

BuiltQubo build_n1_qubo(const Network& net, std::size_t I, std::size_t K, std::size_t L, std::size_t J,
                        const PenaltyWeights& w, std::optional<EdgeId> failing) {
  check_height(net, I);
  check_failing(net, failing);
  Assembly as;
  add_tree_part(as, net, I, failing);
  add_loadflow_part(as, net, nullptr, K, L, J, w.normalize_rows);
  return finish(as, net, resolve_weights(net, w));
}

Bits encode_tree(const QuboLayout& layout, const Network& net, const Configuration& cfg) {
  if (!layout.tree) throw ArgumentError("layout has no tree variables");
  const TreeVarLayout& t = *layout.tree;
  if (!is_spanning_tree(net, cfg)) throw PreconditionError("encode_tree requires a spanning tree");
  if (t.failing_edge && cfg.contains(*t.failing_edge)) throw ArgumentError("tree uses the failing edge");
  const auto depth = tree_depths(net, cfg, net.os_nodes().front());
  Bits x(layout.n(), 0);
  auto set_level = [&](const std::vector<std::size_t>& bits, std::size_t level) {
    if (level > bits.size()) throw ArgumentError("tree exceeds the height bound");
    for (std::size_t k = level; k < bits.size(); ++k) x[bits[k]] = 1;
  };
  for (const auto& [v, bits] : t.depth_bits) set_level(bits, static_cast<std::size_t>(depth.at(v)) - t.depth_base(v));
  for (const auto& [eid, bits] : t.edge_bits) {
    const Edge& e = net.edge(eid);
    std::size_t option = 2 * t.I - 2;
    if (cfg.contains(eid)) {
      const auto dn = static_cast<std::size_t>(depth.at(e.n));
      const auto dm = static_cast<std::size_t>(depth.at(e.m));
      option = dn > dm ? dm : t.I - 1 + dn;
    }
    set_level(bits, option);
  }
  return x;
}

QuantizationBound quantization_bound(const Network& net, const Configuration& cfg, const BuiltQubo& lf) {
  if (!lf.layout.loadflow || lf.layout.tree) throw ArgumentError("quantization_bound needs a fixed-configuration load-flow QUBO");
  const LoadflowVarLayout& L = *lf.layout.loadflow;
  VoltageSolution sol;
  const ComplianceReport rep = evaluate_configuration(net, cfg, &sol);

  QuantizationBound out;
  out.bits.assign(lf.layout.n(), 0);
  auto put = [&](const std::vector<std::size_t>& bits, double index) {
    const double top = std::ldexp(1.0, static_cast<int>(bits.size())) - 1.0;
    const auto idx = static_cast<std::uint64_t>(std::clamp(std::round(index), 0.0, top));
    for (std::size_t k = 0; k < bits.size(); ++k) out.bits[bits[k]] = idx >> k & 1;
  };
  for (const auto& [v, bits] : L.ur_bits) {
    const Node& node = net.node(v);
    const double span = node.u_max - node.u_min;
    put(bits, span > 0.0 ? (sol.U.at(v).real() - node.u_min) * std::ldexp(1.0, static_cast<int>(L.K)) / span - 1.0 : 0.0);
  }
  for (const auto& [v, bits] : L.ui_bits) {
    const Node& node = net.node(v);
    const double step = 0.2 * node.u_min / std::ldexp(1.0, static_cast<int>(L.L));
    put(bits, (sol.U.at(v).imag() + 0.1 * node.u_min) / step);
  }
  for (const auto& [eid, bits] : L.current_bits) {
    const Edge& e = net.edge(eid);
    const double i = rep.currents.at(eid).real();
    put(bits, e.i_max > 0.0 ? (i + e.i_max) * std::ldexp(1.0, static_cast<int>(L.J)) / (2.0 * e.i_max) - 1.0 : 0.0);
  }
  out.epsilon = lf.qubo.evaluate(out.bits);
  return out;
}

DecodedSolution decode_solution(const Bits& bits, const QuboLayout& layout) {
  if (bits.size() != layout.n())
    throw ArgumentError("bit string has length " + std::to_string(bits.size()) + ", layout has " +
                        std::to_string(layout.n()) + " variables");
  DecodedSolution d;
  for (const auto& [name, q] : layout.groups) {
    const double e = q.evaluate(bits);
    d.group_energy[name] = e;
    d.energy += layout.weights.at(name) * e;
  }
  d.objective = d.group_energy.contains("obj") ? d.group_energy.at("obj") : 0.0;

  if (layout.tree) {
    const TreeVarLayout& t = *layout.tree;
    for (const auto& [v, vb] : t.depth_bits)
      if (auto lvl = decode_domain_wall(bits, vb)) d.depths[v] = *lvl + t.depth_base(v);
    for (const auto& [e, eb] : t.edge_bits)
      if (auto opt = decode_domain_wall(bits, eb)) d.edge_options[e] = *opt;
    bool tree_ok = true;
    for (const char* name : kTreeGroups) {
      if (d.group_energy.at(name) > kZeroTol) {
        d.violated.push_back(name);
        tree_ok = false;
      }
    }
    if (tree_ok) {
      std::vector<EdgeId> in;
      for (const auto& [e, eb] : t.edge_bits)
        if (bits[eb.back()]) in.push_back(e);
      d.configuration = EdgeSet(std::move(in));
    }
  } else if (layout.fixed_configuration) {
    d.configuration = layout.fixed_configuration;
  }

  if (layout.loadflow) {
    const LoadflowVarLayout& L = *layout.loadflow;
    const Network& net = *layout.network;
    for (const Node& v : net.nodes()) {
      if (v.is_os()) {
        d.voltages[v.id] = Complex(v.u_nom, 0.0);
        continue;
      }
      d.voltages[v.id] = Complex(ur_expr(v, L.K, L.ur_bits.at(v.id)).evaluate(bits),
                                 ui_expr(v, L.L, L.ui_bits.at(v.id)).evaluate(bits));
    }
    for (const auto& [e, cb] : L.current_bits) d.currents[e] = current_expr(net.edge(e), L.J, cb).evaluate(bits);

    if (d.group_energy.contains("aux") && d.group_energy.at("aux") > kZeroTol) d.violated.push_back("aux");

    bool lf_ok = false;
    if (d.configuration && is_spanning_tree(net, *d.configuration)) {
      double lf_energy = 0.0;
      for (const char* name : kLoadflowGroups) lf_energy += layout.weights.at(name) * d.group_energy.at(name);
      try {
        if (evaluate_configuration(net, *d.configuration).compliant) {
          PenaltyWeights w;
          w.ur = layout.weights.at("ur");
          w.ui = layout.weights.at("ui");
          w.i = layout.weights.at("i");
          w.normalize_rows = L.normalize_rows;
          const BuiltQubo ref = build_loadflow_qubo(net, *d.configuration, L.K, L.L, L.J, w);
          const double eps = quantization_bound(net, *d.configuration, ref).epsilon;
          lf_ok = lf_energy <= 2.0 * eps * (1.0 + 1e-9) + 1e-12;
        }
      } catch (const SingularSystemError&) {
        lf_ok = false;
      }
    }
    if (!lf_ok) d.violated.push_back("loadflow");
  }
  return d;
}

}  // namespace gridsec
