#include <doctest.h>

#include <set>
#include <sstream>

#include "gridsec/annealing.hpp"
#include "gridsec/error.hpp"
#include "test_util.hpp"

using namespace gridsec;
using testutil::make_network;

namespace {

Network triangle() { return make_network(3, {{0, 1, true}, {1, 2, true}, {0, 2, false}}); }

AnnealSchedule quick(std::size_t reads, std::uint64_t seed = 7) {
  AnnealSchedule s;
  s.reads = reads;
  s.sweeps = 1000;
  s.sweeps_per_beta = 10;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("splitmix64 reference stream") {
  // First outputs for seed 1234567 as published with the reference implementation.
  SplitMix64 r(1234567);
  CHECK(r.next() == 6457827717110365317ULL);
  CHECK(r.next() == 3203168211198807973ULL);
  CHECK(r.next() == 9817491932198370423ULL);
  SplitMix64 u(99);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK((x >= 0.0 && x < 1.0));
    CHECK(u.below(3) < 3);
  }
}

TEST_CASE("schedule validation") {
  AnnealSchedule s;
  CHECK_NOTHROW(s.validate());
  s.reads = 0;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = {};
  s.sweeps = 5;
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  s = {};
  s.beta_range = std::pair{2.0, 1.0};
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  CHECK_THROWS_AS(simulated_annealing(Qubo(), AnnealSchedule{}), ArgumentError);
}

TEST_CASE("trivial diagonal landscape") {
  auto zero_reads = [](const Qubo& q, const AnnealSchedule& sched) {
    const SampleSet s = simulated_annealing(q, sched);
    CHECK(s.total_reads() == sched.reads);
    std::size_t zeros = 0;
    for (const Sample& smp : s.samples())
      if (smp.energy == 0.0) zeros += smp.multiplicity;
    return zeros;
  };
  Qubo q(4);
  for (std::size_t i = 0; i < 4; ++i) q.add_linear(i, 1.0);
  CHECK(zero_reads(q, quick(200)) >= 190);
  // The auto range stops at 1% uphill acceptance, so wide problems need a colder end.
  Qubo wide(12);
  for (std::size_t i = 0; i < 12; ++i) wide.add_linear(i, 1.0);
  AnnealSchedule cold = quick(200);
  cold.beta_range = std::pair{0.5, 10.0};
  CHECK(zero_reads(wide, cold) >= 190);
}

TEST_CASE("triangle tree qubo reaches the brute-force minimum") {
  const Network net = triangle();
  const BuiltQubo b = build_tree_qubo(net, 3);
  const double best = brute_force_minimize(b.qubo).energy;
  const SampleSet s = simulated_annealing(b.qubo, quick(100));
  CHECK(s.samples().front().energy == doctest::Approx(best));
  for (const Sample& smp : s.samples()) CHECK(smp.energy == doctest::Approx(b.qubo.evaluate(smp.bits)));
}

TEST_CASE("fixed seed is reproducible") {
  const BuiltQubo b = build_tree_qubo(triangle(), 3);
  const SampleSet a = simulated_annealing(b.qubo, quick(20, 11));
  const SampleSet c = simulated_annealing(b.qubo, quick(20, 11));
  REQUIRE(a.samples().size() == c.samples().size());
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    CHECK(a.samples()[i].bits == c.samples()[i].bits);
    CHECK(a.samples()[i].multiplicity == c.samples()[i].multiplicity);
  }
  AnnealSchedule hot = quick(20, 11);
  hot.beta_range = std::pair{1e-3, 1e-3};
  const SampleSet d = simulated_annealing(b.qubo, hot);
  hot.seed = 12;
  const SampleSet e = simulated_annealing(b.qubo, hot);
  bool differ = d.samples().size() != e.samples().size();
  for (std::size_t i = 0; !differ && i < d.samples().size(); ++i) differ = d.samples()[i].bits != e.samples()[i].bits;
  CHECK(differ);
}

TEST_CASE("sample set ordering and merge") {
  SampleSet s;
  s.add({1, 0}, 2.0);
  s.add({0, 1}, 1.0);
  s.add({1, 0}, 2.0, 3);
  s.add({0, 0}, 1.0);
  s.finalize();
  REQUIRE(s.samples().size() == 3);
  CHECK(s.samples()[0].bits == Bits{0, 0});
  CHECK(s.samples()[1].bits == Bits{0, 1});
  CHECK(s.samples()[2].multiplicity == 4);
  CHECK(s.total_reads() == 6);
}

TEST_CASE("steepest descent") {
  const Qubo oh = one_hot({0, 1, 2});
  const Bits from = steepest_descent(oh, {0, 0, 0});
  CHECK(oh.evaluate({0, 0, 0}) == 1.0);
  CHECK(oh.evaluate(from) == 0.0);
  CHECK(std::count(from.begin(), from.end(), 1) == 1);
  CHECK(steepest_descent(oh, {0, 1, 0}) == Bits{0, 1, 0});
  CHECK_THROWS_AS(steepest_descent(oh, {0, 1}), ArgumentError);

  // Picks the largest decrease, and is idempotent.
  Qubo q(3);
  q.add_linear(0, -1);
  q.add_linear(1, -3);
  q.add_quadratic(0, 1, 5);
  CHECK(steepest_descent(q, {0, 0, 0}) == Bits{0, 1, 0});
  const BuiltQubo b = build_tree_qubo(triangle(), 3);
  SplitMix64 rng(5);
  for (int t = 0; t < 50; ++t) {
    Bits x(b.layout.n());
    for (auto& v : x) v = rng.next() & 1;
    const Bits once = steepest_descent(b.qubo, x);
    CHECK(b.qubo.evaluate(once) <= b.qubo.evaluate(x));
    CHECK(steepest_descent(b.qubo, once) == once);
  }
}

TEST_CASE("cold rungs end in a local minimum") {
  const BuiltQubo b = build_tree_qubo(triangle(), 3);
  AnnealSchedule s = quick(20);
  s.beta_range = std::pair{1e12, 1e12};
  const SampleSet set = simulated_annealing(b.qubo, s);
  for (const Sample& smp : set.samples()) CHECK(steepest_descent(b.qubo, smp.bits) == smp.bits);
}

TEST_CASE("post-processing never raises energy nor lowers feasible count") {
  const Network net = make_network(4, {{0, 1, true}, {1, 2, true}, {2, 3, true}, {3, 0, false}, {0, 2, false}});
  const BuiltQubo b = build_tree_qubo(net, 3);
  AnnealSchedule s = quick(200);
  s.sweeps = 20;
  s.sweeps_per_beta = 10;
  const SampleSet raw = simulated_annealing(b.qubo, s);
  const SampleSet pp = post_process(b.qubo, raw);
  CHECK(pp.total_reads() == raw.total_reads());
  CHECK(pp.samples().front().energy <= raw.samples().front().energy);
  auto feasible = [&](const SampleSet& set) {
    std::size_t n = 0;
    for (const Sample& smp : set.samples())
      if (decode_solution(smp.bits, b.layout).feasible()) n += smp.multiplicity;
    return n;
  };
  CHECK(feasible(pp) >= feasible(raw));
}

TEST_CASE("histograms") {
  const Network net = testutil::fixture();
  const std::size_t I = 4;
  const BuiltQubo b = build_tree_qubo(net, I);
  CHECK(energy_histogram(SampleSet{}, b.layout).bins.empty());

  AnnealSchedule sched;
  sched.seed = 3;
  const SampleSet s = post_process(b.qubo, simulated_annealing(b.qubo, sched));
  const EnergyHistogram h = energy_histogram(s, b.layout);
  CHECK(h.total() == 100);
  std::size_t feasible = 0;
  for (const auto& [e, bin] : h.bins) {
    if (bin.feasible == 0) continue;
    feasible += bin.feasible;
    CHECK(std::fmod(e, 2.0) == doctest::Approx(0.0));
  }
  CHECK(feasible > 0);
  for (const Sample& smp : s.samples()) {
    const DecodedSolution d = decode_solution(smp.bits, b.layout);
    if (d.feasible()) CHECK(smp.energy == doctest::Approx(d.objective));
  }

  SampleSet all;
  const Bits good = encode_tree(b.layout, net, net.initial_configuration());
  all.add(good, b.qubo.evaluate(good), 4);
  all.finalize();
  const EnergyHistogram g = energy_histogram(all, b.layout);
  REQUIRE(g.bins.size() == 1);
  CHECK(g.bins.begin()->second.infeasible == 0);
  CHECK(g.bins.begin()->second.feasible == 4);
  std::ostringstream csv;
  write_histogram_csv(csv, g);
  CHECK(csv.str() == "energy,feasible,infeasible\n0,4,0\n");
}
