#include <doctest.h>

#include <cmath>

#include "gridsec/error.hpp"
#include "gridsec/loadflow.hpp"
#include "oracles/gauss_jordan.hpp"
#include "test_util.hpp"

using namespace gridsec;

TEST_CASE("admittance") {
  CHECK(admittance(0.0, 10500) == Complex{});
  const Complex y = admittance({0, 992.25}, 10500);
  CHECK(y.real() == 0.0);
  CHECK(y.imag() == doctest::Approx(-992.25 / (10500.0 * 10500.0)).epsilon(1e-15));
  CHECK(y.imag() == doctest::Approx(-9.0e-6).epsilon(0.01));
  CHECK(admittance(2500.0, 50) == Complex(1.0, 0.0));
  CHECK_THROWS_AS(admittance(1.0, 0.0), ArgumentError);
}

TEST_CASE("one MSR node behind one OS node, zero load") {
  const Network net = testutil::make_network(2, {{0, 1, true}}, 0.0);
  const LinearSystem sys = assemble_system(net, net.initial_configuration());
  REQUIRE(sys.A.rows() == 1);
  const VoltageSolution sol = solve_loadflow(sys);
  CHECK(std::abs(sol.U.at(1) - Complex(10500, 0)) < 1e-9);
  const ComplianceReport rep = check_compliance(net, net.initial_configuration(), sol);
  CHECK(rep.compliant);
  CHECK(std::abs(rep.currents.at(1)) < 1e-9);
}

TEST_CASE("identity system") {
  LinearSystem sys;
  sys.A = Eigen::MatrixXcd::Identity(3, 3);
  sys.b = Eigen::VectorXcd(3);
  sys.b << Complex(1, 2), Complex(3, 0), Complex(0, -1);
  sys.unknowns = {1, 2, 3};
  const VoltageSolution sol = solve_loadflow(sys);
  CHECK(sol.U.at(1) == Complex(1, 2));
  CHECK(sol.U.at(3) == Complex(0, -1));
  CHECK(sol.residual == 0.0);
}

TEST_CASE("singular systems") {
  LinearSystem sys;
  sys.A = Eigen::MatrixXcd(2, 2);
  sys.A << 1.0, 2.0, 2.0, 4.0;
  sys.b = Eigen::VectorXcd::Ones(2);
  sys.unknowns = {1, 2};
  CHECK_THROWS_AS(solve_loadflow(sys), SingularSystemError);

  // Unloaded node cut off from the OS node.
  const Network net = testutil::make_network(3, {{0, 1, true}, {1, 2, true}, {0, 2, false}}, 0.0);
  CHECK_THROWS_AS(solve_loadflow(assemble_system_unchecked(net, EdgeSet{1})), SingularSystemError);
  CHECK_THROWS_AS(assemble_system(net, EdgeSet{1}), PreconditionError);
}

TEST_CASE("fixture matches an independent elimination") {
  const Network net = testutil::fixture();
  const Configuration base = net.initial_configuration();
  for (const Configuration& cfg : {base, base.without(2).with(4), base.without(7).with(5), base.without(6).with(5)}) {
    VoltageSolution sol;
    const ComplianceReport rep = evaluate_configuration(net, cfg, &sol);
    const auto ref = oracle::solve_voltages(net, cfg);
    for (const auto& [id, u] : ref) CHECK(std::abs(sol.U.at(id) - u) < 1e-9 * std::abs(u));
    CHECK(sol.residual < kResidualAlarm);

    // Kirchhoff balance at every MSR node.
    double max_branch = 0.0;
    for (const auto& [e, i] : rep.currents) max_branch = std::max(max_branch, std::abs(i));
    for (const Node& v : net.nodes()) {
      if (v.is_os()) continue;
      Complex net_current = sol.U.at(v.id) * admittance(v.load, v.u_nom);
      for (EdgeId e : cfg) {
        const Edge& edge = net.edge(e);
        if (edge.n == v.id) net_current -= rep.currents.at(e);
        if (edge.m == v.id) net_current += rep.currents.at(e);
      }
      CHECK(std::abs(net_current) < 1e-6 * max_branch);
    }
  }
}

TEST_CASE("fixture compliance outcomes") {
  const Network net = testutil::fixture();
  const Configuration base = net.initial_configuration();

  VoltageSolution sol;
  const ComplianceReport initial = evaluate_configuration(net, base, &sol);
  for (const Node& v : net.nodes()) {
    CHECK(std::abs(sol.U.at(v.id)) >= 9800);
    CHECK(std::abs(sol.U.at(v.id)) <= 11000);
  }
  CHECK(initial.compliant);

  CHECK(evaluate_configuration(net, base.without(2).with(4)).compliant);

  const ComplianceReport via46 = evaluate_configuration(net, base.without(7).with(5));
  CHECK_FALSE(via46.compliant);
  REQUIRE(via46.current_violations.size() == 1);
  CHECK(via46.current_violations[0].edge == 5);
  CHECK(via46.current_violations[0].magnitude > 1.0);
}

TEST_CASE("equal voltages carry no current") {
  const Network net = testutil::fixture();
  VoltageSolution sol;
  for (const Node& v : net.nodes()) sol.U[v.id] = 10500;
  const ComplianceReport rep = check_compliance(net, net.initial_configuration(), sol);
  CHECK(rep.compliant);
  for (const auto& [e, i] : rep.currents) CHECK(i == Complex{});
  sol.U[3] = 12000;
  const ComplianceReport bad = check_compliance(net, net.initial_configuration(), sol);
  CHECK_FALSE(bad.compliant);
  REQUIRE(bad.voltage_violations.size() == 1);
  CHECK(bad.voltage_violations[0].node == 3);
}

TEST_CASE("zero loads pin every voltage to the OS voltage") {
  const Network f = testutil::fixture();
  std::vector<Node> nodes = f.nodes();
  for (Node& v : nodes) v.load = 0.0;
  const Network net(nodes, f.edges());
  VoltageSolution sol;
  evaluate_configuration(net, net.initial_configuration(), &sol);
  for (const auto& [id, u] : sol.U) CHECK(std::abs(u - Complex(10500, 0)) < 1e-6);
}

TEST_CASE("deterministic solve") {
  const Network net = testutil::fixture();
  VoltageSolution a, b;
  evaluate_configuration(net, net.initial_configuration(), &a);
  evaluate_configuration(net, net.initial_configuration(), &b);
  CHECK(a.U == b.U);
  CHECK(a.residual == b.residual);
}

TEST_CASE("problem edges") {
  const Network net = testutil::fixture();
  const EdgeSet ep = problem_edges(net);
  CHECK(ep.contains(5));
  // {2,7}: 1200*0 + 0.1*(9800+10500)*2 = 4060 > 999.
  CHECK(ep.contains(3));

  // A stiff edge with a generous limit drops out.
  std::vector<Edge> edges = net.edges();
  edges[2].i_max = 4060.0;
  CHECK_FALSE(problem_edges(Network(net.nodes(), edges)).contains(3));
  edges[2].i_max = 4059.0;
  CHECK(problem_edges(Network(net.nodes(), edges)).contains(3));
}

TEST_CASE("E_p filter is sound when voltages are in bounds") {
  const Network net = testutil::fixture();
  const EdgeSet ep = problem_edges(net);
  const Configuration base = net.initial_configuration();
  for (const Configuration& cfg : {base, base.without(2).with(4), base.without(7).with(5)}) {
    VoltageSolution sol;
    const ComplianceReport rep = evaluate_configuration(net, cfg, &sol);
    if (!rep.voltage_violations.empty()) continue;
    for (const auto& v : rep.current_violations) CHECK(ep.contains(v.edge));
  }
}
