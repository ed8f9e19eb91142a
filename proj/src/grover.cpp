#include "gridsec/grover.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include <json.hpp>

#include "gridsec/classical_n1.hpp"
#include "gridsec/error.hpp"
#include "gridsec/loadflow.hpp"
#include "gridsec/qubo.hpp"
#include "gridsec/rng.hpp"

namespace gridsec {

SearchSpace index_reconfigurations(const Network& net, EdgeId failing_edge, std::size_t k) {
  if (!net.has_edge(failing_edge)) throw ArgumentError("unknown failing edge " + std::to_string(failing_edge));
  if (!net.edge(failing_edge).initially_active)
    throw ArgumentError("failing edge " + std::to_string(failing_edge) + " is not active");
  const std::size_t inactive = net.inactive_edges().size();
  if (k < 1 || k > inactive)
    throw ArgumentError("k must be in [1, " + std::to_string(inactive) + "], got " + std::to_string(k));
  SearchSpace space;
  space.failing_edge = failing_edge;
  space.k = k;
  space.id_to_switchover =
      enumerate_candidate_switchovers(net, net.initial_configuration(), k, EdgeSet{failing_edge});
  if (space.id_to_switchover.empty())
    throw EmptySpaceError("no candidate reconfigurations deactivate edge " + std::to_string(failing_edge) +
                          " with k = " + std::to_string(k));
  return space;
}

Oracle::Oracle(std::vector<bool> marked) : marked_(std::move(marked)) {
  if (marked_.empty()) throw EmptySpaceError("oracle over an empty search space");
  for (std::size_t i = 0; i < marked_.size(); ++i)
    if (marked_[i]) ids_.push_back(i);
}

bool Oracle::query(std::size_t id) {
  ++queries_;
  return marked_.at(id);
}

Oracle make_oracle(const Network& net, const SearchSpace& space) {
  if (space.size() == 0) throw EmptySpaceError("oracle over an empty search space");
  const Configuration base = net.initial_configuration();
  std::vector<bool> marked(space.size(), false);
  for (std::size_t id = 0; id < space.size(); ++id) {
    const Configuration cfg = apply_switchover(base, space.id_to_switchover[id]);
    if (!is_spanning_tree(net, cfg)) continue;
    try {
      marked[id] = evaluate_configuration(net, cfg).compliant;
    } catch (const SingularSystemError&) {
      marked[id] = false;
    }
  }
  return Oracle(std::move(marked));
}

AmplitudeState uniform_state(std::size_t n) {
  if (n == 0) throw EmptySpaceError("uniform state over an empty space");
  return AmplitudeState(n, 1.0 / std::sqrt(static_cast<double>(n)));
}

void grover_iterate(AmplitudeState& state, const Oracle& oracle) {
  if (state.size() != oracle.size()) throw ArgumentError("state and oracle sizes differ");
  for (std::size_t id : oracle.marked_ids()) state[id] = -state[id];
  const double mean = std::accumulate(state.begin(), state.end(), 0.0) / static_cast<double>(state.size());
  for (double& a : state) a = 2.0 * mean - a;
}

double marked_probability(const AmplitudeState& state, const Oracle& oracle) {
  double p = 0.0;
  for (std::size_t id : oracle.marked_ids()) p += state.at(id) * state.at(id);
  return p;
}

namespace {

void check_counts(std::size_t n, std::size_t m) {
  if (m < 1 || m > n) throw ArgumentError("need 1 <= M <= N, got N=" + std::to_string(n) + " M=" + std::to_string(m));
}

std::size_t sample(const std::vector<double>& p, SplitMix64& rng) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  double r = rng.uniform() * total;
  for (std::size_t i = 0; i < p.size(); ++i) {
    r -= p[i];
    if (r < 0.0) return i;
  }
  return p.size() - 1;
}

std::vector<double> run(const Oracle& oracle, std::size_t t) {
  AmplitudeState s = uniform_state(oracle.size());
  for (std::size_t i = 0; i < t; ++i) grover_iterate(s, oracle);
  for (double& a : s) a *= a;
  return s;
}

}  // namespace

double success_probability(std::size_t n, std::size_t m, std::size_t t) {
  check_counts(n, m);
  const double theta = std::asin(std::sqrt(static_cast<double>(m) / static_cast<double>(n)));
  const double s = std::sin((2.0 * static_cast<double>(t) + 1.0) * theta);
  return s * s;
}

std::size_t optimal_iterations(std::size_t n, std::size_t m) {
  check_counts(n, m);
  const double theta = std::asin(std::sqrt(static_cast<double>(m) / static_cast<double>(n)));
  return static_cast<std::size_t>(std::max(0.0, std::round(std::numbers::pi / (4.0 * theta) - 0.5)));
}

GroverResult grover_search(Oracle& oracle, std::optional<std::size_t> t, std::uint64_t seed,
                           std::optional<std::size_t> query_budget) {
  SplitMix64 rng(splitmix64_mix(seed));
  GroverResult res;
  if (t) {
    res.distribution = run(oracle, *t);
    for (std::size_t i = 0; i < *t; ++i) oracle.charge_iteration();
    res.iterations = *t;
    res.queries = *t;
    res.sampled_id = sample(res.distribution, rng);
    res.found = oracle.is_marked(res.sampled_id);
    return res;
  }

  const double n = static_cast<double>(oracle.size());
  const std::size_t budget = query_budget.value_or(static_cast<std::size_t>(10.0 * std::sqrt(n)) + 10);
  const std::size_t before = oracle.queries();
  double m = 1.0;
  res.rounds = 0;
  for (;;) {
    ++res.rounds;
    const auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(std::ceil(m))));
    res.distribution = run(oracle, j);
    for (std::size_t i = 0; i < j; ++i) oracle.charge_iteration();
    res.iterations = j;
    res.sampled_id = sample(res.distribution, rng);
    res.found = oracle.query(res.sampled_id);
    res.queries = oracle.queries() - before;
    if (res.found || res.queries >= budget) return res;
    m = std::min(kBbhtGrowth * m, std::sqrt(n));
  }
}

GroverResult grover_search(const SearchSpace& space, Oracle& oracle, std::optional<std::size_t> t, std::uint64_t seed,
                           std::optional<std::size_t> query_budget) {
  if (space.size() != oracle.size()) throw ArgumentError("search space and oracle sizes differ");
  return grover_search(oracle, t, seed, query_budget);
}

std::size_t classical_search(Oracle& oracle, std::uint64_t seed) {
  std::vector<std::size_t> order(oracle.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(splitmix64_mix(seed));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::size_t used = 0;
  for (std::size_t id : order) {
    ++used;
    if (oracle.query(id)) break;
  }
  return used;
}

double expected_classical_queries(std::size_t n, std::size_t m) {
  check_counts(n, m);
  return (static_cast<double>(n) + 1.0) / (static_cast<double>(m) + 1.0);
}

void write_distribution_csv(std::ostream& out, const SearchSpace& space, const std::vector<double>& distribution,
                            const Network& net) {
  if (distribution.size() != space.size()) throw ArgumentError("distribution and search space sizes differ");
  out << "id,probability,switchover_json\n";
  for (std::size_t id = 0; id < space.size(); ++id) {
    const Switchover& s = space.id_to_switchover[id];
    nlohmann::ordered_json j;
    for (const auto& [key, set] : {std::pair{"activate", &s.activate}, std::pair{"deactivate", &s.deactivate}}) {
      j[key] = nlohmann::json::array();
      for (EdgeId e : *set) j[key].push_back(edge_label(net.edge(e)));
    }
    std::string text = j.dump();
    std::string quoted;
    for (char c : text) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    out << id << ',' << format_double(distribution[id]) << ",\"" << quoted << "\"\n";
  }
}

}  // namespace gridsec
