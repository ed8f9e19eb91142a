#include "gridsec/loadflow.hpp"

#include <algorithm>
#include <cmath>

#include "gridsec/error.hpp"

namespace gridsec {

Complex admittance(Complex load, double u_nom) {
  if (!(u_nom > 0.0)) throw ArgumentError("u_nom must be > 0");
  return std::conj(load) / (u_nom * u_nom);
}

LinearSystem assemble_system_unchecked(const Network& net, const Configuration& cfg) {
  LinearSystem sys;
  std::map<NodeId, Eigen::Index> col;
  for (const Node& v : net.nodes()) {
    if (v.is_os()) {
      sys.fixed_voltages[v.id] = Complex(v.u_nom, 0.0);
    } else {
      col[v.id] = static_cast<Eigen::Index>(sys.unknowns.size());
      sys.unknowns.push_back(v.id);
    }
  }
  const auto n = static_cast<Eigen::Index>(sys.unknowns.size());
  sys.A = Eigen::MatrixXcd::Zero(n, n);
  sys.b = Eigen::VectorXcd::Zero(n);

  for (NodeId id : sys.unknowns) {
    const Node& v = net.node(id);
    sys.A(col[id], col[id]) += admittance(v.load, v.u_nom);
  }
  for (EdgeId eid : cfg) {
    const Edge& e = net.edge(eid);
    const Complex y = 1.0 / e.z;
    for (auto [a, b] : {std::pair{e.n, e.m}, std::pair{e.m, e.n}}) {
      auto ia = col.find(a);
      if (ia == col.end()) continue;
      sys.A(ia->second, ia->second) += y;
      if (auto ib = col.find(b); ib != col.end()) {
        sys.A(ia->second, ib->second) -= y;
      } else {
        sys.b(ia->second) += sys.fixed_voltages.at(b) * y;
      }
    }
  }
  return sys;
}

LinearSystem assemble_system(const Network& net, const Configuration& cfg) {
  if (!is_spanning_tree(net, cfg)) throw PreconditionError("assemble_system requires a spanning tree");
  return assemble_system_unchecked(net, cfg);
}

VoltageSolution solve_loadflow(const LinearSystem& sys, double condition_limit) {
  VoltageSolution sol;
  for (const auto& [id, u] : sys.fixed_voltages) sol.U[id] = u;
  if (sys.A.rows() == 0) return sol;

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys.A);
  // The rcond estimator misses exact zero pivots, so the pivot ratio is checked too.
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double cond = std::max(1.0 / lu.rcond(), pivots.maxCoeff() / pivots.minCoeff());
  if (!std::isfinite(cond) || cond > condition_limit)
    throw SingularSystemError("load-flow matrix is singular or ill-conditioned (condition estimate " +
                              std::to_string(cond) + ")");
  const Eigen::VectorXcd x = lu.solve(sys.b);
  if (!x.allFinite()) throw SingularSystemError("load-flow solve produced non-finite voltages");
  sol.residual = (sys.A * x - sys.b).cwiseAbs().maxCoeff();
  for (std::size_t i = 0; i < sys.unknowns.size(); ++i) sol.U[sys.unknowns[i]] = x(static_cast<Eigen::Index>(i));
  return sol;
}

namespace {

bool within(double value, double bound, double tol) { return value <= bound * (1.0 + tol) + tol; }

}  // namespace

ComplianceReport check_compliance(const Network& net, const Configuration& cfg, const VoltageSolution& sol, double tol) {
  ComplianceReport rep;
  for (const Node& v : net.nodes()) {
    auto it = sol.U.find(v.id);
    if (it == sol.U.end()) throw ArgumentError("solution lacks node " + std::to_string(v.id));
    const double mag = std::abs(it->second);
    if (!within(v.u_min, mag, tol)) rep.voltage_violations.push_back({v.id, mag, v.u_min});
    else if (!within(mag, v.u_max, tol)) rep.voltage_violations.push_back({v.id, mag, v.u_max});
  }
  for (EdgeId eid : cfg) {
    const Edge& e = net.edge(eid);
    const Complex i = (sol.U.at(e.m) - sol.U.at(e.n)) / e.z;
    rep.currents[eid] = i;
    if (!within(std::abs(i), e.i_max, tol)) rep.current_violations.push_back({eid, std::abs(i), e.i_max});
  }
  rep.compliant = rep.voltage_violations.empty() && rep.current_violations.empty();
  return rep;
}

ComplianceReport evaluate_configuration(const Network& net, const Configuration& cfg, VoltageSolution* sol_out) {
  VoltageSolution sol = solve_loadflow(assemble_system(net, cfg));
  ComplianceReport rep = check_compliance(net, cfg, sol);
  if (sol_out) *sol_out = std::move(sol);
  return rep;
}

EdgeSet problem_edges(const Network& net) {
  std::vector<EdgeId> out;
  for (const Edge& e : net.edges()) {
    const Node& a = net.node(e.n);
    const Node& b = net.node(e.m);
    const Complex y = 1.0 / e.z;
    const double lhs = std::max(a.u_max - b.u_min, b.u_max - a.u_min) * std::abs(y.real()) +
                       0.1 * (a.u_min + b.u_min) * std::abs(y.imag());
    if (!(lhs <= e.i_max)) out.push_back(e.id);
  }
  return EdgeSet(std::move(out));
}

}  // namespace gridsec
