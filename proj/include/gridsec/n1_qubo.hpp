#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gridsec/network.hpp"
#include "gridsec/qubo.hpp"

namespace gridsec {

/// Penalty factors. Unset entries take network-dependent defaults (see resolve_weights).
struct PenaltyWeights {
  std::optional<double> dw, root, con, ind;
  std::optional<double> ur, ui, i;
  std::optional<double> aux;
  /// Divide each residual row by its static diagonal magnitude so every row reads in volts.
  bool normalize_rows = true;
};

struct TreeVarLayout {
  std::size_t I = 0;
  std::map<NodeId, std::vector<std::size_t>> depth_bits;  // I-1 bits per OS node, I-2 per MSR node
  std::map<EdgeId, std::vector<std::size_t>> edge_bits;   // 2I-2 domain-wall bits per edge
  std::optional<EdgeId> failing_edge;                     // carries no variables

  /// Smallest depth a node can take: 0 for OS nodes, 1 for MSR nodes.
  std::size_t depth_base(NodeId v) const { return I - 1 - depth_bits.at(v).size(); }

  /// Bit that is 1 iff the edge is in the tree.
  std::size_t in_tree_bit(EdgeId e) const { return edge_bits.at(e).back(); }
};

/// One gated copy of an MSR node's voltage bits for one edge: z = y * u.
struct GatedVoltage {
  EdgeId edge;
  NodeId node;
  std::vector<std::size_t> real_bits;
  std::vector<std::size_t> imag_bits;
};

struct LoadflowVarLayout {
  std::size_t K = 0, L = 0, J = 0;
  bool normalize_rows = true;
  std::map<NodeId, std::vector<std::size_t>> ur_bits;
  std::map<NodeId, std::vector<std::size_t>> ui_bits;
  std::map<EdgeId, std::vector<std::size_t>> current_bits;  // problem edges only
  std::vector<GatedVoltage> gated;                          // empty for a fixed configuration
};

/// Variable map plus the unweighted penalty groups, enough to decode and diagnose any bit string.
struct QuboLayout {
  std::optional<TreeVarLayout> tree;
  std::optional<LoadflowVarLayout> loadflow;
  std::vector<std::string> labels;
  std::map<std::string, Qubo> groups;    // obj, dw, root, con, ind, ur, ui, i, aux
  std::map<std::string, double> weights;  // factor applied to each group
  std::optional<Configuration> fixed_configuration;
  std::shared_ptr<const Network> network;

  std::size_t n() const { return labels.size(); }
};

struct BuiltQubo {
  Qubo qubo;
  QuboLayout layout;
};

/// Defaults: tree factors 2|E| (dw 4*ind + 2|E|), load-flow factors 1/U_nom^2,
/// aux from the weighted load-flow local fields.
std::map<std::string, double> resolve_weights(const Network& net, const PenaltyWeights& w);

/// Default height bound min(|V|, longest shortest path + 1), ignoring the failing edge.
std::size_t default_height(const Network& net, std::optional<EdgeId> failing_edge = std::nullopt);

BuiltQubo build_tree_qubo(const Network& net, std::size_t I, const PenaltyWeights& w = {},
                          std::optional<EdgeId> failing_edge = std::nullopt);

BuiltQubo build_loadflow_qubo(const Network& net, const Configuration& cfg, std::size_t K, std::size_t L, std::size_t J,
                              const PenaltyWeights& w = {});

BuiltQubo build_n1_qubo(const Network& net, std::size_t I, std::size_t K, std::size_t L, std::size_t J,
                        const PenaltyWeights& w = {}, std::optional<EdgeId> failing_edge = std::nullopt);

// Pseudo-Boolean encodings of the discretized load-flow variables (bit k has weight 2^(k-1)).
LinearExpr ur_expr(const Node& v, std::size_t K, const std::vector<std::size_t>& vars);
LinearExpr ui_expr(const Node& v, std::size_t L, const std::vector<std::size_t>& vars);
LinearExpr current_expr(const Edge& e, std::size_t J, const std::vector<std::size_t>& vars);

struct DecodedSolution {
  std::optional<Configuration> configuration;  // set iff every tree penalty is zero
  std::map<NodeId, std::size_t> depths;        // nodes whose depth bits are well formed
  std::map<EdgeId, std::size_t> edge_options;  // edges whose option bits are well formed
  std::map<NodeId, Complex> voltages;          // U^R + j U^I
  std::map<EdgeId, double> currents;
  std::map<std::string, double> group_energy;  // unweighted
  std::vector<std::string> violated;           // penalty groups with nonzero energy
  double objective = 0.0;                      // switch count term
  double energy = 0.0;                         // full QUBO energy

  bool feasible() const { return violated.empty(); }
};

/// With load-flow groups present, "loadflow" is reported violated unless the decoded
/// configuration passes the exact load-flow check and the weighted load-flow energy is
/// within twice the quantization bound of that configuration.
DecodedSolution decode_solution(const Bits& bits, const QuboLayout& layout);

/// Tree and aux groups count as satisfied at or below this energy.
inline constexpr double kZeroTol = 1e-9;

/// Tree bits for a known spanning tree rooted at the first OS node; load-flow and aux bits zero.
Bits encode_tree(const QuboLayout& layout, const Network& net, const Configuration& cfg);

struct QuantizationBound {
  double epsilon = 0.0;  // weighted load-flow energy at the rounded point
  Bits bits;
};

/// Rounds the continuous load-flow solution of `cfg` to the bit grid of a
/// fixed-configuration load-flow QUBO and evaluates it there.
QuantizationBound quantization_bound(const Network& net, const Configuration& cfg, const BuiltQubo& lf);

}  // namespace gridsec
