#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "gridsec/network.hpp"

namespace gridsec {

struct LinearSystem {
  Eigen::MatrixXcd A;
  Eigen::VectorXcd b;
  std::vector<NodeId> unknowns;              // column -> MSR node id
  std::map<NodeId, Complex> fixed_voltages;  // OS nodes
};

struct VoltageSolution {
  std::map<NodeId, Complex> U;
  double residual = 0.0;  // ||A x - b||_inf
};

struct VoltageViolation {
  NodeId node;
  double magnitude;
  double bound;
};

struct CurrentViolation {
  EdgeId edge;
  double magnitude;
  double i_max;
};

struct ComplianceReport {
  bool compliant = true;
  std::vector<VoltageViolation> voltage_violations;
  std::vector<CurrentViolation> current_violations;
  std::map<EdgeId, Complex> currents;  // (U_m - U_n) / Z, n < m
};

inline constexpr double kConditionLimit = 1e12;
inline constexpr double kComplianceTol = 1e-9;
inline constexpr double kResidualAlarm = 1e-6;

/// Constant-impedance admittance of a complex load.
Complex admittance(Complex load, double u_nom);

LinearSystem assemble_system(const Network& net, const Configuration& cfg);

/// Same as assemble_system but skips the tree check (tests of the singular path).
LinearSystem assemble_system_unchecked(const Network& net, const Configuration& cfg);

VoltageSolution solve_loadflow(const LinearSystem& sys, double condition_limit = kConditionLimit);

ComplianceReport check_compliance(const Network& net, const Configuration& cfg, const VoltageSolution& sol,
                                  double tol = kComplianceTol);

/// assemble + solve + check. Throws SingularSystemError on ill-conditioned systems.
ComplianceReport evaluate_configuration(const Network& net, const Configuration& cfg, VoltageSolution* sol_out = nullptr);

/// Edges whose current limit can be exceeded while voltages stay in bounds.
EdgeSet problem_edges(const Network& net);

}  // namespace gridsec
