#include "gridsec/classical_n1.hpp"

#include <set>

#include "gridsec/error.hpp"

namespace gridsec {

namespace {

// Calls f(indices) for every ascending k-subset of [0, n).
template <class F>
void for_each_combination(std::size_t n, std::size_t k, F&& f) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

bool passes(const Network& net, const Configuration& cfg, ComplianceReport* rep, SearchStats* stats) {
  if (stats) ++stats->loadflow_calls;
  try {
    *rep = evaluate_configuration(net, cfg);
    return rep->compliant;
  } catch (const SingularSystemError&) {
    *rep = ComplianceReport{};
    rep->compliant = false;
    return false;
  }
}

}  // namespace

std::vector<Switchover> enumerate_candidate_switchovers(const Network& net, const Configuration& cfg, std::size_t k,
                                                        const std::optional<EdgeSet>& D) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  const auto table = fundamental_cycles(net, cfg);
  if (k > table.size())
    throw ArgumentError("k = " + std::to_string(k) + " exceeds the number of inactive edges (" +
                        std::to_string(table.size()) + ")");

  std::set<Switchover> seen;
  std::vector<Switchover> out;
  for_each_combination(table.size(), k, [&](const std::vector<std::size_t>& rows) {
    std::vector<EdgeId> activate;
    std::vector<const std::vector<EdgeId>*> cycles;
    for (std::size_t r : rows) {
      activate.push_back(table[r].inactive);
      cycles.push_back(&table[r].path.ids());
    }
    for (const auto* c : cycles)
      if (c->empty()) return;
    std::vector<std::size_t> pos(k, 0);
    while (true) {
      std::vector<EdgeId> deactivate;
      for (std::size_t i = 0; i < k; ++i) deactivate.push_back((*cycles[i])[pos[i]]);
      EdgeSet d(deactivate);
      bool keep = d.size() == k;
      if (keep && D) keep = !d.set_intersection(*D).empty();
      if (keep) {
        Switchover s{EdgeSet(activate), std::move(d)};
        if (seen.insert(s).second) out.push_back(std::move(s));
      }
      std::size_t i = k;
      while (i > 0 && ++pos[i - 1] == cycles[i - 1]->size()) pos[--i] = 0;
      if (i == 0) break;
    }
  });
  return out;
}

ReconfigurationList enumerate_reconfigurations(const Network& net, const Configuration& cfg, std::size_t k,
                                               const std::optional<EdgeSet>& D) {
  ReconfigurationList list;
  list.k = k;
  list.restricted_to = D;
  std::set<Configuration> trees;
  for (Switchover& s : enumerate_candidate_switchovers(net, cfg, k, D)) {
    Configuration c = apply_switchover(cfg, s);
    if (!is_spanning_tree(net, c)) continue;
    if (!trees.insert(c).second) continue;
    list.entries.push_back({std::move(s), std::move(c)});
  }
  return list;
}

WitnessMap step1_single_switch(const Network& net, SearchStats* stats) {
  WitnessMap out;
  const Configuration cfg = net.initial_configuration();
  if (net.inactive_edges().empty()) return out;
  const ReconfigurationList list = enumerate_reconfigurations(net, cfg, 1);
  for (const Reconfiguration& r : list.entries) {
    ComplianceReport rep;
    if (!passes(net, r.configuration, &rep, stats)) continue;
    const EdgeId e = *r.switchover.deactivate.begin();
    out.try_emplace(e, Witness{r.switchover, std::move(rep)});
  }
  return out;
}

WitnessMap step2_multi_switch(const Network& net, const EdgeSet& remaining, std::size_t k, const WitnessMap& known,
                              SearchStats* stats) {
  if (k < 2) throw ArgumentError("step 2 needs k >= 2");
  WitnessMap out;
  if (remaining.empty()) return out;
  const Configuration cfg = net.initial_configuration();
  for (EdgeId e : remaining)
    if (!cfg.contains(e)) throw ArgumentError("edge " + std::to_string(e) + " is not active");

  const ReconfigurationList list = enumerate_reconfigurations(net, cfg, k, remaining);
  std::map<std::size_t, std::optional<ComplianceReport>> checked;
  auto witnessed = [&](EdgeId e) { return known.contains(e) || out.contains(e); };

  for (EdgeId e : remaining) {
    if (witnessed(e)) continue;
    for (std::size_t idx = 0; idx < list.entries.size(); ++idx) {
      const Reconfiguration& l = list.entries[idx];
      if (!l.switchover.deactivate.contains(e)) continue;
      auto it = checked.find(idx);
      if (it == checked.end()) {
        ComplianceReport rep;
        std::optional<ComplianceReport> result;
        if (passes(net, l.configuration, &rep, stats)) result = std::move(rep);
        it = checked.emplace(idx, std::move(result)).first;
      }
      if (!it->second) continue;
      for (EdgeId ed : l.switchover.deactivate)
        if (!witnessed(ed)) out.emplace(ed, Witness{l.switchover, *it->second});
      break;
    }
  }
  return out;
}

N1Report check_n1(const Network& net, std::size_t k_max) {
  if (k_max < 1) throw ArgumentError("k_max must be >= 1");
  N1Report rep;
  rep.k_max = k_max;
  WitnessMap found = step1_single_switch(net, &rep.stats);
  std::map<EdgeId, std::size_t> k_of;
  for (const auto& [e, w] : found) k_of[e] = 1;

  const std::size_t n_inactive = net.inactive_edges().size();
  for (std::size_t k = 2; k <= std::min(k_max, n_inactive); ++k) {
    std::vector<EdgeId> rest;
    for (EdgeId e : net.active_edges())
      if (!found.contains(e)) rest.push_back(e);
    if (rest.empty()) break;
    WitnessMap more = step2_multi_switch(net, EdgeSet(rest), k, found, &rep.stats);
    for (auto& [e, w] : more) {
      k_of[e] = k;
      found.emplace(e, std::move(w));
    }
  }

  rep.overall = true;
  for (EdgeId e : net.active_edges()) {
    EdgeVerdict v;
    if (auto it = found.find(e); it != found.end()) {
      v.k = k_of[e];
      v.status = v.k == 1 ? EdgeStatus::SecureK1 : EdgeStatus::SecureKN;
      v.witness = it->second.switchover;
    } else {
      rep.overall = false;
    }
    rep.per_edge[e] = std::move(v);
  }
  return rep;
}

const char* to_string(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::SecureK1:
      return "SECURE_K1";
    case EdgeStatus::SecureKN:
      return "SECURE_KN";
    case EdgeStatus::Insecure:
      return "INSECURE";
  }
  return "?";
}

}  // namespace gridsec
