#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gridsec/network.hpp"

namespace gridsec {

/// Candidate switchovers indexed 0..N-1 in canonical order.
struct SearchSpace {
  std::vector<Switchover> id_to_switchover;
  std::optional<EdgeId> failing_edge;
  std::size_t k = 0;

  std::size_t size() const { return id_to_switchover.size(); }
};

/// Raw cycle-product candidates with D = {failing_edge}; non-trees stay in the space
/// and are simply never marked.
SearchSpace index_reconfigurations(const Network& net, EdgeId failing_edge, std::size_t k);

/// Grey-box oracle: the marked set is known up front, only the query count is simulated.
class Oracle {
 public:
  explicit Oracle(std::vector<bool> marked);

  std::size_t size() const { return marked_.size(); }
  bool is_marked(std::size_t id) const { return marked_.at(id); }
  const std::vector<std::size_t>& marked_ids() const { return ids_; }

  /// One classical predicate evaluation (one load-flow), counted.
  bool query(std::size_t id);
  /// One Grover phase flip, counted as a single query.
  void charge_iteration() { ++queries_; }
  std::size_t queries() const { return queries_; }
  void reset_queries() { queries_ = 0; }

 private:
  std::vector<bool> marked_;
  std::vector<std::size_t> ids_;
  std::size_t queries_ = 0;
};

/// Marks ids whose reconfiguration is a spanning tree passing the load-flow check.
Oracle make_oracle(const Network& net, const SearchSpace& space);

using AmplitudeState = std::vector<double>;

AmplitudeState uniform_state(std::size_t n);
/// Phase flip on marked ids, then inversion about the mean.
void grover_iterate(AmplitudeState& state, const Oracle& oracle);
double marked_probability(const AmplitudeState& state, const Oracle& oracle);

/// sin^2((2t+1) theta) with sin theta = sqrt(M/N).
double success_probability(std::size_t n, std::size_t m, std::size_t t);
/// round(pi / (4 asin(sqrt(M/N))) - 1/2), at least 0.
std::size_t optimal_iterations(std::size_t n, std::size_t m);

struct GroverResult {
  std::size_t sampled_id = 0;
  bool found = false;              // sampled id is marked
  std::vector<double> distribution;  // of the final run
  std::size_t iterations = 0;        // of the final run
  std::size_t rounds = 1;
  std::size_t queries = 0;           // iterations plus verification queries
};

/// Unknown-M growth factor of the exponential guessing schedule.
inline constexpr double kBbhtGrowth = 6.0 / 5.0;

/// With `t`, runs t iterations and samples once (no verification query). Without it,
/// runs the randomized exponential-guessing loop until a sample verifies, giving up
/// once the queries exceed `query_budget` (default 10 sqrt(N) + 10).
GroverResult grover_search(const SearchSpace& space, Oracle& oracle, std::optional<std::size_t> t, std::uint64_t seed,
                           std::optional<std::size_t> query_budget = std::nullopt);

/// Same as grover_search, for a bare oracle without a reconfiguration space.
GroverResult grover_search(Oracle& oracle, std::optional<std::size_t> t, std::uint64_t seed,
                           std::optional<std::size_t> query_budget = std::nullopt);

/// Tests ids in a seeded random order until one is marked; returns the number of queries.
std::size_t classical_search(Oracle& oracle, std::uint64_t seed);
/// Expected queries of random-order search: (N+1)/(M+1).
double expected_classical_queries(std::size_t n, std::size_t m);

/// CSV "id,probability,switchover_json".
void write_distribution_csv(std::ostream& out, const SearchSpace& space, const std::vector<double>& distribution,
                            const Network& net);

}  // namespace gridsec
