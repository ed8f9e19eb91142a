#include <doctest.h>

#include "gridsec/error.hpp"
#include "gridsec/network.hpp"
#include "oracles/spanning_trees.hpp"
#include "test_util.hpp"

using namespace gridsec;

namespace {

const char* kSingleNode = R"({"nodes":[{"id":1,"type":"OS","u_nom":10,"load":[0,0],"u_min":10,"u_max":10}],"edges":[]})";

}  // namespace

TEST_CASE("fixture parses") {
  const Network net = testutil::fixture();
  CHECK(net.nodes().size() == 7);
  CHECK(net.edges().size() == 8);
  CHECK(net.active_edges().size() == 6);
  CHECK(net.os_nodes() == std::vector<NodeId>{7});
  CHECK(net.edge(4).n == 3);
  CHECK(net.edge(4).m == 6);
  CHECK(net.edge(5).i_max == 0.0);
  CHECK(net.node(6).load == Complex(793842.2, 378992.557));
}

TEST_CASE("single node, no edges") {
  const Network net = parse_network(kSingleNode);
  CHECK(net.nodes().size() == 1);
  CHECK(is_spanning_tree(net, net.initial_configuration()));
}

TEST_CASE("serialization round trip") {
  const Network net = testutil::fixture();
  const Network again = parse_network(serialize_network(net));
  REQUIRE(again.edges().size() == net.edges().size());
  for (const Edge& e : net.edges()) {
    const Edge& f = again.edge(e.id);
    CHECK(f.n == e.n);
    CHECK(f.m == e.m);
    CHECK(f.z == e.z);
    CHECK(f.i_max == e.i_max);
    CHECK(f.initially_active == e.initially_active);
  }
  for (const Node& v : net.nodes()) CHECK(again.node(v.id).load == v.load);
}

TEST_CASE("validation errors") {
  const std::string text = serialize_network(testutil::fixture());

  SUBCASE("edge {1,7} inactive disconnects node 1") {
    std::string t = text;
    auto pos = t.find("\"active\": true");
    REQUIRE(pos != std::string::npos);
    t.replace(pos, 14, "\"active\": false");
    try {
      parse_network(t);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("{1}") != std::string::npos);
    }
  }
  SUBCASE("cycle in active set") {
    std::vector<Node> nodes = testutil::fixture().nodes();
    std::vector<Edge> edges = testutil::fixture().edges();
    edges[3].initially_active = true;  // {3,6}
    edges[1].initially_active = false;  // {2,3}
    edges[4].initially_active = true;  // {4,6} closes 4-7-5-6-4
    CHECK_THROWS_AS(Network(nodes, edges), ValidationError);
  }
  SUBCASE("malformed field reports a line") {
    std::string t = text;
    auto pos = t.find("\"u_min\": 9800");
    t.replace(pos, 13, "\"u_min\": \"x\"");
    try {
      parse_network(t);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() > 1);
    }
  }
  SUBCASE("syntax error reports a line") {
    std::string t = text;
    t.insert(t.find("\"edges\""), "@");
    try {
      parse_network(t);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() > 5);
    }
  }
  SUBCASE("bad node bounds") {
    std::vector<Node> nodes = testutil::fixture().nodes();
    nodes[0].u_max = 100;
    CHECK_THROWS_AS(Network(nodes, testutil::fixture().edges()), ValidationError);
  }
  SUBCASE("zero impedance") {
    std::vector<Edge> edges = testutil::fixture().edges();
    edges[0].z = 0.0;
    CHECK_THROWS_AS(Network(testutil::fixture().nodes(), edges), ValidationError);
  }
}

TEST_CASE("is_spanning_tree") {
  const Network net = testutil::fixture();
  const Configuration a = net.initial_configuration();
  CHECK(is_spanning_tree(net, a));
  CHECK_FALSE(is_spanning_tree(net, a.without(2)));
  CHECK(is_spanning_tree(net, a.without(2).with(4)));
  CHECK_THROWS_AS(is_spanning_tree(net, a.with(99)), ArgumentError);
}

TEST_CASE("fundamental cycles") {
  SUBCASE("triangle") {
    const Network tri = testutil::make_network(3, {{0, 1, true}, {1, 2, true}, {0, 2, false}});
    auto rows = fundamental_cycles(tri, tri.initial_configuration());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].inactive == 3);
    CHECK(rows[0].path == EdgeSet{1, 2});
  }
  SUBCASE("fixture") {
    const Network net = testutil::fixture();
    auto rows = fundamental_cycles(net, net.initial_configuration());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].inactive == 4);
    CHECK(rows[0].path == EdgeSet{2, 3, 8, 7});
    CHECK(rows[1].inactive == 5);
    CHECK(rows[1].path == EdgeSet{6, 8, 7});
  }
  SUBCASE("precondition") {
    const Network net = testutil::fixture();
    CHECK_THROWS_AS(fundamental_cycles(net, net.initial_configuration().without(1)), PreconditionError);
  }
}

TEST_CASE("cycle properties on every tree of a dense graph") {
  // K5: every spanning tree, every inactive edge.
  const Network base = testutil::make_network(
      5, {{0, 1, true}, {1, 2, true}, {2, 3, true}, {3, 4, true}, {0, 2, false}, {0, 3, false}, {0, 4, false},
          {1, 3, false}, {1, 4, false}, {2, 4, false}});
  for (const EdgeSet& tree : oracle::all_spanning_trees(base)) {
    for (const FundamentalCycle& row : fundamental_cycles(base, tree)) {
      CHECK_FALSE(tree.contains(row.inactive));
      for (EdgeId e : row.path) {
        const Switchover s{EdgeSet{row.inactive}, EdgeSet{e}};
        const Configuration c = apply_switchover(tree, s);
        CHECK(is_spanning_tree(base, c));
        CHECK(apply_switchover(c, s.inverse()) == tree);
      }
      // Dropping any edge off the cycle leaves a non-tree.
      for (EdgeId e : tree)
        if (!row.path.contains(e)) CHECK_FALSE(is_spanning_tree(base, tree.without(e).with(row.inactive)));
    }
  }
}

TEST_CASE("apply_switchover") {
  const Network net = testutil::fixture();
  const Configuration a = net.initial_configuration();
  CHECK(is_spanning_tree(net, apply_switchover(a, {EdgeSet{4}, EdgeSet{2}})));
  CHECK(apply_switchover(a, {}) == a);
  CHECK_FALSE(is_spanning_tree(net, apply_switchover(a, {EdgeSet{4}, EdgeSet{1}})));
  CHECK_THROWS_AS(apply_switchover(a, {EdgeSet{1}, EdgeSet{2}}), ArgumentError);
  CHECK_THROWS_AS(apply_switchover(a, {EdgeSet{4}, EdgeSet{5}}), ArgumentError);
}

TEST_CASE("edge references") {
  const Network net = testutil::fixture();
  CHECK(net.resolve_edge("4") == 4);
  CHECK(net.resolve_edge("3-6") == 4);
  CHECK(net.resolve_edge("6,3") == 4);
  CHECK(net.resolve_edge("{2,3}") == 2);
  CHECK_THROWS_AS(net.resolve_edge("1-2"), ArgumentError);
  CHECK_THROWS_AS(net.resolve_edge("42"), ArgumentError);
  CHECK_THROWS_AS(net.resolve_edge("x"), ArgumentError);
}

TEST_CASE("tree depths from the OS node") {
  const Network net = testutil::fixture();
  auto d = tree_depths(net, net.initial_configuration(), 7);
  CHECK(d[7] == 0);
  CHECK(d[1] == 1);
  CHECK(d[3] == 2);
  CHECK(d[6] == 2);
}
