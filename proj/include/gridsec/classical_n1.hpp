#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "gridsec/loadflow.hpp"
#include "gridsec/network.hpp"

namespace gridsec {

struct Reconfiguration {
  Switchover switchover;
  Configuration configuration;
};

struct ReconfigurationList {
  std::vector<Reconfiguration> entries;
  std::size_t k = 0;
  std::optional<EdgeSet> restricted_to;
};

/// Spanning trees reachable from `cfg` by exactly k switchovers, generated from
/// k-combinations of fundamental cycles. With `D`, only switchovers that
/// deactivate at least one edge of D are kept.
ReconfigurationList enumerate_reconfigurations(const Network& net, const Configuration& cfg, std::size_t k,
                                               const std::optional<EdgeSet>& D = std::nullopt);

/// Raw candidates before the spanning-tree filter (deduplicated, canonical order).
std::vector<Switchover> enumerate_candidate_switchovers(const Network& net, const Configuration& cfg, std::size_t k,
                                                        const std::optional<EdgeSet>& D = std::nullopt);

struct Witness {
  Switchover switchover;
  ComplianceReport report;
};

using WitnessMap = std::map<EdgeId, Witness>;

struct SearchStats {
  std::size_t loadflow_calls = 0;
};

WitnessMap step1_single_switch(const Network& net, SearchStats* stats = nullptr);

/// `known` holds witnesses already found; they are skipped and not repeated in the result.
WitnessMap step2_multi_switch(const Network& net, const EdgeSet& remaining, std::size_t k,
                              const WitnessMap& known = {}, SearchStats* stats = nullptr);

enum class EdgeStatus { SecureK1, SecureKN, Insecure };

struct EdgeVerdict {
  EdgeStatus status = EdgeStatus::Insecure;
  std::size_t k = 0;  // 0 when insecure
  std::optional<Switchover> witness;
};

struct N1Report {
  std::map<EdgeId, EdgeVerdict> per_edge;
  bool overall = false;
  std::size_t k_max = 0;
  SearchStats stats;
};

N1Report check_n1(const Network& net, std::size_t k_max);

const char* to_string(EdgeStatus s);

}  // namespace gridsec
