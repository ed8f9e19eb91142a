#include "gridsec/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridsec/annealing.hpp"
#include "gridsec/classical_n1.hpp"
#include "gridsec/error.hpp"
#include "gridsec/grover.hpp"
#include "gridsec/loadflow.hpp"
#include "gridsec/n1_qubo.hpp"
#include "gridsec/network.hpp"
#include "gridsec/qubo.hpp"

namespace gridsec {
namespace {

using nlohmann::ordered_json;

enum class Format { Text, Json, Csv };

struct Options {
  std::string network;
  std::string format = "text";
  std::string failing_edge;
  std::size_t k = 1;
  std::size_t k_max = 1;
  std::optional<std::size_t> height;
  std::size_t bits_u = 4, bits_ui = 4, bits_i = 4;
  std::string weights;
  bool tree_only = false;
  bool loadflow_only = false;
  std::vector<std::string> activate, deactivate, restrict_to;
  bool raw = false;
  std::size_t reads = 100, sweeps = 10000, sweeps_per_beta = 20;
  std::vector<double> beta_range;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> query_budget;
  bool post_process = false;
  std::string output, samples, histogram, distribution;
};

Format format_of(const Options& o) {
  if (o.format == "json") return Format::Json;
  if (o.format == "csv") return Format::Csv;
  return Format::Text;
}

// ---- helpers ---------------------------------------------------------------

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ArgumentError("cannot write '" + path + "'");
  f.precision(17);
  return f;
}

std::optional<EdgeId> failing_of(const Network& net, const Options& o) {
  if (o.failing_edge.empty()) return std::nullopt;
  return net.resolve_edge(o.failing_edge);
}

EdgeId require_failing(const Network& net, const Options& o) {
  if (o.failing_edge.empty()) throw ArgumentError("--failing-edge is required");
  return net.resolve_edge(o.failing_edge);
}

EdgeSet resolve_edges(const Network& net, const std::vector<std::string>& refs) {
  std::vector<EdgeId> ids;
  for (const std::string& r : refs) ids.push_back(net.resolve_edge(r));
  return EdgeSet(std::move(ids));
}

Configuration chosen_configuration(const Network& net, const Options& o) {
  return apply_switchover(net.initial_configuration(),
                          Switchover{resolve_edges(net, o.activate), resolve_edges(net, o.deactivate)});
}

Switchover switchover_to(const Network& net, const Configuration& cfg) {
  const Configuration init = net.initial_configuration();
  return {cfg.set_difference(init), init.set_difference(cfg)};
}

struct SeedInfo {
  std::uint64_t value = 0;
  std::string source;
};

SeedInfo resolve_seed(const Options& o) {
  if (o.seed) return {*o.seed, "flag"};
  if (const char* env = std::getenv("GRIDSEC_SEED"); env != nullptr && *env != '\0') {
    const std::string text(env);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size())
      throw ArgumentError("GRIDSEC_SEED is not an unsigned 64-bit integer: '" + text + "'");
    return {v, "GRIDSEC_SEED"};
  }
  std::random_device rd;
  return {(static_cast<std::uint64_t>(rd()) << 32) | rd(), "generated"};
}

PenaltyWeights parse_weights(const std::string& arg) {
  PenaltyWeights w;
  if (arg.empty()) return w;
  std::string text = arg;
  if (arg.front() != '{') {
    std::ifstream in(arg);
    if (!in) throw ArgumentError("cannot open weights file '" + arg + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("weights: ") + e.what());
  }
  if (!j.is_object()) throw ArgumentError("weights must be a JSON object");
  const std::map<std::string, std::optional<double>*> fields = {
      {"dw", &w.dw}, {"root", &w.root}, {"con", &w.con}, {"ind", &w.ind},
      {"ur", &w.ur}, {"ui", &w.ui},     {"i", &w.i},     {"aux", &w.aux}};
  for (const auto& [key, value] : j.items()) {
    if (key == "normalize_rows") {
      if (!value.is_boolean()) throw ArgumentError("weights: normalize_rows must be a boolean");
      w.normalize_rows = value.get<bool>();
      continue;
    }
    const auto it = fields.find(key);
    if (it == fields.end()) throw ArgumentError("weights: unknown key '" + key + "'");
    if (!value.is_number()) throw ArgumentError("weights: '" + key + "' must be a number");
    *it->second = value.get<double>();
  }
  return w;
}

BuiltQubo build_qubo(const Network& net, const Options& o) {
  const PenaltyWeights w = parse_weights(o.weights);
  if (o.loadflow_only) return build_loadflow_qubo(net, chosen_configuration(net, o), o.bits_u, o.bits_ui, o.bits_i, w);
  const std::optional<EdgeId> failing = failing_of(net, o);
  const std::size_t I = o.height.value_or(default_height(net, failing));
  if (o.tree_only) return build_tree_qubo(net, I, w, failing);
  return build_n1_qubo(net, I, o.bits_u, o.bits_ui, o.bits_i, w, failing);
}

std::string bit_string(const Bits& b) {
  std::string s(b.size(), '0');
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) s[i] = '1';
  return s;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string edges_text(const Network& net, const EdgeSet& s) {
  std::vector<std::string> parts;
  for (EdgeId e : s) parts.push_back(edge_label(net.edge(e)));
  return join(parts, " ");
}

std::string switchover_text(const Network& net, const Switchover& s) {
  return "on " + edges_text(net, s.activate) + " / off " + edges_text(net, s.deactivate);
}

std::string ids_text(const EdgeSet& s) {
  std::vector<std::string> parts;
  for (EdgeId e : s) parts.push_back(std::to_string(e));
  return join(parts, " ");
}

// ---- JSON ------------------------------------------------------------------

ordered_json edge_json(const Network& net, EdgeId id) {
  const Edge& e = net.edge(id);
  return {{"id", e.id}, {"n", e.n}, {"m", e.m}};
}

ordered_json edges_json(const Network& net, const EdgeSet& s) {
  ordered_json a = ordered_json::array();
  for (EdgeId e : s) a.push_back(edge_json(net, e));
  return a;
}

ordered_json ids_json(const EdgeSet& s) {
  ordered_json a = ordered_json::array();
  for (EdgeId e : s) a.push_back(e);
  return a;
}

ordered_json switchover_json(const Network& net, const Switchover& s) {
  return {{"activate", edges_json(net, s.activate)}, {"deactivate", edges_json(net, s.deactivate)}};
}

template <class T>
ordered_json index_map_json(const std::map<T, std::vector<std::size_t>>& m) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

ordered_json layout_json(const BuiltQubo& b) {
  const QuboLayout& L = b.layout;
  ordered_json j;
  j["n"] = L.n();
  j["offset"] = b.qubo.offset();
  j["terms"] = b.qubo.coeffs().size();
  j["weights"] = ordered_json::object();
  for (const auto& [g, w] : L.weights) j["weights"][g] = w;
  j["groups"] = ordered_json::object();
  for (const auto& [g, q] : L.groups) j["groups"][g] = q.coeffs().size();
  if (L.tree) {
    ordered_json t;
    t["height"] = L.tree->I;
    t["failing_edge"] = L.tree->failing_edge ? ordered_json(*L.tree->failing_edge) : ordered_json(nullptr);
    t["depth_bits"] = index_map_json(L.tree->depth_bits);
    t["edge_bits"] = index_map_json(L.tree->edge_bits);
    j["tree"] = t;
  } else {
    j["tree"] = nullptr;
  }
  if (L.loadflow) {
    const LoadflowVarLayout& lf = *L.loadflow;
    ordered_json f;
    f["K"] = lf.K;
    f["L"] = lf.L;
    f["J"] = lf.J;
    f["normalize_rows"] = lf.normalize_rows;
    f["ur_bits"] = index_map_json(lf.ur_bits);
    f["ui_bits"] = index_map_json(lf.ui_bits);
    f["current_bits"] = index_map_json(lf.current_bits);
    f["gated"] = ordered_json::array();
    for (const GatedVoltage& g : lf.gated)
      f["gated"].push_back({{"edge", g.edge}, {"node", g.node}, {"real_bits", g.real_bits}, {"imag_bits", g.imag_bits}});
    j["loadflow"] = f;
  } else {
    j["loadflow"] = nullptr;
  }
  j["fixed_configuration"] = L.fixed_configuration ? ids_json(*L.fixed_configuration) : ordered_json(nullptr);
  j["variables"] = L.labels;
  return j;
}

ordered_json report_json(const Network& net, const Configuration& cfg, const ComplianceReport& r,
                         const VoltageSolution& sol) {
  ordered_json j;
  j["configuration"] = ids_json(cfg);
  j["compliant"] = r.compliant;
  j["voltages"] = ordered_json::array();
  for (const Node& v : net.nodes()) {
    const Complex u = sol.U.at(v.id);
    j["voltages"].push_back({{"node", v.id},
                             {"re", u.real()},
                             {"im", u.imag()},
                             {"abs", std::abs(u)},
                             {"u_min", v.u_min},
                             {"u_max", v.u_max}});
  }
  j["currents"] = ordered_json::array();
  for (const auto& [e, i] : r.currents)
    j["currents"].push_back({{"edge", e}, {"abs", std::abs(i)}, {"i_max", net.edge(e).i_max}});
  j["voltage_violations"] = ordered_json::array();
  for (const VoltageViolation& v : r.voltage_violations)
    j["voltage_violations"].push_back({{"node", v.node}, {"magnitude", v.magnitude}, {"bound", v.bound}});
  j["current_violations"] = ordered_json::array();
  for (const CurrentViolation& c : r.current_violations)
    j["current_violations"].push_back({{"edge", c.edge}, {"magnitude", c.magnitude}, {"i_max", c.i_max}});
  j["residual"] = sol.residual;
  return j;
}

// ---- commands --------------------------------------------------------------

int cmd_check(const Options& o, std::ostream& out) {
  const Network net = load_network(o.network);
  if (o.k_max < 1) throw ArgumentError("--k-max must be >= 1");
  const N1Report rep = check_n1(net, o.k_max);
  switch (format_of(o)) {
    case Format::Json: {
      ordered_json j;
      j["command"] = "check";
      j["k_max"] = rep.k_max;
      j["overall"] = rep.overall;
      j["loadflow_calls"] = rep.stats.loadflow_calls;
      j["edges"] = ordered_json::array();
      for (const auto& [e, v] : rep.per_edge)
        j["edges"].push_back({{"edge", edge_json(net, e)},
                              {"status", to_string(v.status)},
                              {"k", v.k},
                              {"witness", v.witness ? switchover_json(net, *v.witness) : ordered_json(nullptr)}});
      out << j.dump(2) << '\n';
      break;
    }
    case Format::Csv:
      out << "edge,n,m,status,k,activate,deactivate\n";
      for (const auto& [e, v] : rep.per_edge) {
        const Edge& ed = net.edge(e);
        out << e << ',' << ed.n << ',' << ed.m << ',' << to_string(v.status) << ',' << v.k << ','
            << (v.witness ? ids_text(v.witness->activate) : "") << ','
            << (v.witness ? ids_text(v.witness->deactivate) : "") << '\n';
      }
      break;
    case Format::Text:
      out << "edge  cable     status      k  witness\n";
      for (const auto& [e, v] : rep.per_edge) {
        std::string id = std::to_string(e), label = edge_label(net.edge(e)), st = to_string(v.status);
        out << id << std::string(6 - std::min<std::size_t>(5, id.size()), ' ') << label
            << std::string(10 - std::min<std::size_t>(9, label.size()), ' ') << st
            << std::string(12 - std::min<std::size_t>(11, st.size()), ' ') << v.k << "  "
            << (v.witness ? switchover_text(net, *v.witness) : "-") << '\n';
      }
      out << "overall: " << (rep.overall ? "N-1 secure" : "NOT N-1 secure") << " (k_max " << rep.k_max << ", "
          << rep.stats.loadflow_calls << " load-flow calls)\n";
      break;
  }
  return rep.overall ? kExitOk : kExitNegative;
}

int cmd_enumerate(const Options& o, std::ostream& out) {
  const Network net = load_network(o.network);
  const std::size_t inactive = net.inactive_edges().size();
  if (o.k < 1 || o.k > inactive)
    throw ArgumentError("--k must be in [1, " + std::to_string(inactive) + "], got " + std::to_string(o.k));
  std::optional<EdgeSet> D;
  if (!o.restrict_to.empty()) D = resolve_edges(net, o.restrict_to);
  const Configuration init = net.initial_configuration();

  struct Row {
    Switchover s;
    Configuration cfg;
    bool tree = true;
  };
  std::vector<Row> rows;
  if (o.raw) {
    for (const Switchover& s : enumerate_candidate_switchovers(net, init, o.k, D)) {
      const Configuration cfg = apply_switchover(init, s);
      rows.push_back({s, cfg, is_spanning_tree(net, cfg)});
    }
  } else {
    for (const Reconfiguration& r : enumerate_reconfigurations(net, init, o.k, D).entries)
      rows.push_back({r.switchover, r.configuration, true});
  }

  switch (format_of(o)) {
    case Format::Json: {
      ordered_json j;
      j["command"] = "enumerate";
      j["k"] = o.k;
      j["restricted_to"] = D ? ids_json(*D) : ordered_json(nullptr);
      j["raw"] = o.raw;
      j["count"] = rows.size();
      j["entries"] = ordered_json::array();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        ordered_json e = switchover_json(net, rows[i].s);
        e["index"] = i;
        e["configuration"] = ids_json(rows[i].cfg);
        e["spanning_tree"] = rows[i].tree;
        j["entries"].push_back(e);
      }
      out << j.dump(2) << '\n';
      break;
    }
    case Format::Csv:
      out << "index,activate,deactivate,spanning_tree,configuration\n";
      for (std::size_t i = 0; i < rows.size(); ++i)
        out << i << ',' << ids_text(rows[i].s.activate) << ',' << ids_text(rows[i].s.deactivate) << ','
            << (rows[i].tree ? 1 : 0) << ',' << ids_text(rows[i].cfg) << '\n';
      break;
    case Format::Text:
      for (std::size_t i = 0; i < rows.size(); ++i)
        out << i << ": " << switchover_text(net, rows[i].s) << (rows[i].tree ? "" : "  (not a tree)") << '\n';
      out << rows.size() << (o.raw ? " candidates" : " reconfigurations") << " with k = " << o.k << '\n';
      break;
  }
  return kExitOk;
}

void write_qubo_files(const BuiltQubo& b, const std::string& path) {
  std::ofstream q = open_output(path);
  write_qubo(q, b.qubo, b.layout.labels);
  std::ofstream l = open_output(path + ".layout.json");
  l << layout_json(b).dump(2) << '\n';
  if (!q || !l) throw ArgumentError("failed writing '" + path + "'");
}

int cmd_qubo(const Options& o, std::ostream& out) {
  const Network net = load_network(o.network);
  const BuiltQubo b = build_qubo(net, o);
  if (o.output.empty() || o.output == "-") {
    write_qubo(out, b.qubo, b.layout.labels);
    return kExitOk;
  }
  write_qubo_files(b, o.output);
  const std::string layout_path = o.output + ".layout.json";
  switch (format_of(o)) {
    case Format::Json: {
      ordered_json j;
      j["command"] = "qubo";
      j["qubo_file"] = o.output;
      j["layout_file"] = layout_path;
      j["variables"] = b.layout.n();
      j["terms"] = b.qubo.coeffs().size();
      j["offset"] = b.qubo.offset();
      j["height"] = b.layout.tree ? ordered_json(b.layout.tree->I) : ordered_json(nullptr);
      j["groups"] = ordered_json::array();
      for (const auto& [g, q] : b.layout.groups) j["groups"].push_back(g);
      out << j.dump(2) << '\n';
      break;
    }
    case Format::Csv:
      out << "qubo_file,layout_file,variables,terms\n"
          << o.output << ',' << layout_path << ',' << b.layout.n() << ',' << b.qubo.coeffs().size() << '\n';
      break;
    case Format::Text: {
      std::vector<std::string> groups;
      for (const auto& [g, q] : b.layout.groups) groups.push_back(g);
      out << "wrote " << o.output << " and " << layout_path << '\n'
          << "variables: " << b.layout.n() << ", terms: " << b.qubo.coeffs().size() << '\n'
          << "groups: " << join(groups, " ") << '\n';
      break;
    }
  }
  return kExitOk;
}

struct SampleSummary {
  std::size_t reads = 0;
  double best_energy = 0.0;
  std::size_t feasible = 0;
  std::size_t optimal = 0;  // feasible at the smallest feasible objective
  std::optional<double> best_objective;
  std::map<Configuration, std::size_t> configurations;  // feasible samples by decoded tree
  EnergyHistogram histogram;
};

SampleSummary summarize(const SampleSet& s, const QuboLayout& layout) {
  SampleSummary sum;
  sum.reads = s.total_reads();
  sum.best_energy = s.samples().front().energy;
  sum.histogram = energy_histogram(s, layout);
  std::vector<std::pair<double, std::size_t>> feasible;
  for (const Sample& smp : s.samples()) {
    const DecodedSolution d = decode_solution(smp.bits, layout);
    if (!d.feasible()) continue;
    sum.feasible += smp.multiplicity;
    feasible.emplace_back(d.objective, smp.multiplicity);
    if (d.configuration) sum.configurations[*d.configuration] += smp.multiplicity;
    if (!sum.best_objective || d.objective < *sum.best_objective) sum.best_objective = d.objective;
  }
  for (const auto& [obj, mult] : feasible)
    if (std::abs(obj - *sum.best_objective) <= 1e-9) sum.optimal += mult;
  return sum;
}

ordered_json summary_json(const Network& net, const SampleSummary& s) {
  ordered_json j;
  j["reads"] = s.reads;
  j["best_energy"] = s.best_energy;
  j["feasible"] = s.feasible;
  j["optimal"] = s.optimal;
  j["best_feasible_objective"] = s.best_objective ? ordered_json(*s.best_objective) : ordered_json(nullptr);
  j["configurations"] = ordered_json::array();
  for (const auto& [cfg, count] : s.configurations) {
    ordered_json c = switchover_json(net, switchover_to(net, cfg));
    c["configuration"] = ids_json(cfg);
    c["count"] = count;
    j["configurations"].push_back(c);
  }
  j["histogram"] = ordered_json::array();
  for (const auto& [e, b] : s.histogram.bins)
    j["histogram"].push_back({{"energy", e}, {"feasible", b.feasible}, {"infeasible", b.infeasible}});
  return j;
}

void summary_text(std::ostream& out, const Network& net, const std::string& title, const SampleSummary& s) {
  out << title << ": best energy " << format_double(s.best_energy) << ", feasible " << s.feasible << "/" << s.reads
      << ", optimal " << s.optimal;
  if (s.best_objective) out << " (switch count " << format_double(*s.best_objective) << ")";
  out << '\n';
  for (const auto& [cfg, count] : s.configurations)
    out << "  " << count << " x " << switchover_text(net, switchover_to(net, cfg)) << '\n';
}

void write_samples_csv(std::ostream& out, const SampleSet& s, const QuboLayout& layout) {
  out << "energy,multiplicity,feasible,objective,violated,bits\n";
  for (const Sample& smp : s.samples()) {
    const DecodedSolution d = decode_solution(smp.bits, layout);
    out << format_double(smp.energy) << ',' << smp.multiplicity << ',' << (d.feasible() ? 1 : 0) << ','
        << format_double(d.objective) << ',' << join(d.violated, " ") << ',' << bit_string(smp.bits) << '\n';
  }
}

int cmd_anneal(const Options& o, std::ostream& out) {
  const Network net = load_network(o.network);
  const BuiltQubo b = build_qubo(net, o);
  const SeedInfo seed = resolve_seed(o);
  AnnealSchedule sched;
  sched.reads = o.reads;
  sched.sweeps = o.sweeps;
  sched.sweeps_per_beta = o.sweeps_per_beta;
  sched.seed = seed.value;
  if (!o.beta_range.empty()) sched.beta_range = std::pair{o.beta_range.at(0), o.beta_range.at(1)};
  sched.validate();
  const auto betas = sched.beta_range ? *sched.beta_range : auto_beta_range(QuboMatrix(b.qubo));

  const SampleSet raw = simulated_annealing(b.qubo, sched);
  std::optional<SampleSet> post;
  if (o.post_process) post = post_process(b.qubo, raw);
  const SampleSet& final_set = post ? *post : raw;
  const SampleSummary raw_sum = summarize(raw, b.layout);
  std::optional<SampleSummary> post_sum;
  if (post) post_sum = summarize(*post, b.layout);
  const SampleSummary& final_sum = post_sum ? *post_sum : raw_sum;

  if (!o.samples.empty()) {
    std::ofstream f = open_output(o.samples);
    write_samples_csv(f, final_set, b.layout);
  }
  if (!o.histogram.empty()) {
    std::ofstream f = open_output(o.histogram);
    write_histogram_csv(f, final_sum.histogram);
  }

  switch (format_of(o)) {
    case Format::Json: {
      ordered_json j;
      j["command"] = "anneal";
      j["seed"] = seed.value;
      j["seed_source"] = seed.source;
      j["variables"] = b.layout.n();
      j["schedule"] = {{"reads", sched.reads},
                       {"sweeps", sched.sweeps},
                       {"sweeps_per_beta", sched.sweeps_per_beta},
                       {"beta_min", betas.first},
                       {"beta_max", betas.second}};
      j["raw"] = summary_json(net, raw_sum);
      j["post_processed"] = post_sum ? summary_json(net, *post_sum) : ordered_json(nullptr);
      out << j.dump(2) << '\n';
      break;
    }
    case Format::Csv:
      write_histogram_csv(out, final_sum.histogram);
      break;
    case Format::Text:
      out << "seed " << seed.value << " (" << seed.source << "), " << b.layout.n() << " variables, " << sched.reads
          << " reads x " << sched.sweeps << " sweeps, beta " << format_double(betas.first) << " .. "
          << format_double(betas.second) << '\n';
      summary_text(out, net, "annealed", raw_sum);
      if (post_sum) summary_text(out, net, "post-processed", *post_sum);
      break;
  }
  return kExitOk;
}

int cmd_grover(const Options& o, std::ostream& out) {
  const Network net = load_network(o.network);
  const EdgeId failing = require_failing(net, o);
  const SearchSpace space = index_reconfigurations(net, failing, o.k);
  Oracle oracle = make_oracle(net, space);
  const SeedInfo seed = resolve_seed(o);
  const GroverResult r = grover_search(space, oracle, o.iterations, seed.value, o.query_budget);
  const std::size_t n = space.size(), m = oracle.marked_ids().size();

  double marked_mass = 0.0;
  for (std::size_t id : oracle.marked_ids()) marked_mass += r.distribution[id];

  if (!o.distribution.empty()) {
    std::ofstream f = open_output(o.distribution);
    write_distribution_csv(f, space, r.distribution, net);
  }

  switch (format_of(o)) {
    case Format::Json: {
      ordered_json j;
      j["command"] = "grover";
      j["failing_edge"] = edge_json(net, failing);
      j["k"] = o.k;
      j["N"] = n;
      j["M"] = m;
      j["marked"] = oracle.marked_ids();
      j["mode"] = o.iterations ? "fixed" : "unknown_count";
      j["seed"] = seed.value;
      j["seed_source"] = seed.source;
      j["iterations"] = r.iterations;
      j["rounds"] = r.rounds;
      j["queries"] = r.queries;
      j["sampled_id"] = r.sampled_id;
      j["sampled"] = switchover_json(net, space.id_to_switchover[r.sampled_id]);
      j["found"] = r.found;
      j["marked_probability"] = marked_mass;
      j["optimal_iterations"] = m > 0 ? ordered_json(optimal_iterations(n, m)) : ordered_json(nullptr);
      j["classical_expected_queries"] =
          m > 0 ? ordered_json(expected_classical_queries(n, m)) : ordered_json(nullptr);
      j["distribution"] = r.distribution;
      out << j.dump(2) << '\n';
      break;
    }
    case Format::Csv:
      write_distribution_csv(out, space, r.distribution, net);
      break;
    case Format::Text:
      out << "search space N = " << n << ", valid M = " << m << " (failing " << edge_label(net.edge(failing))
          << ", k = " << o.k << ")\n";
      out << (o.iterations ? "fixed" : "unknown-count") << " search, seed " << seed.value << " (" << seed.source
          << "): " << r.rounds << " round(s), last run " << r.iterations << " iteration(s), " << r.queries
          << " oracle queries\n";
      out << "sampled id " << r.sampled_id << ": " << switchover_text(net, space.id_to_switchover[r.sampled_id])
          << (r.found ? "  [valid]" : "  [invalid]") << '\n';
      out << "marked probability of last run " << format_double(marked_mass) << '\n';
      if (m > 0)
        out << "optimal iterations " << optimal_iterations(n, m) << ", classical expected queries "
            << format_double(expected_classical_queries(n, m)) << '\n';
      break;
  }
  return r.found ? kExitOk : kExitNegative;
}

int cmd_loadflow(const Options& o, std::ostream& out) {
  const Network net = load_network(o.network);
  const Configuration cfg = chosen_configuration(net, o);
  if (!is_spanning_tree(net, cfg)) throw ValidationError("configuration {" + ids_text(cfg) + "} is not a spanning tree");
  VoltageSolution sol;
  const ComplianceReport r = evaluate_configuration(net, cfg, &sol);
  switch (format_of(o)) {
    case Format::Json: {
      ordered_json j = report_json(net, cfg, r, sol);
      j["command"] = "loadflow";
      out << j.dump(2) << '\n';
      break;
    }
    case Format::Csv:
      out << "kind,id,magnitude,lower,upper,ok\n";
      for (const Node& v : net.nodes()) {
        const double a = std::abs(sol.U.at(v.id));
        bool ok = true;
        for (const VoltageViolation& x : r.voltage_violations) ok = ok && x.node != v.id;
        out << "node," << v.id << ',' << format_double(a) << ',' << format_double(v.u_min) << ','
            << format_double(v.u_max) << ',' << ok << '\n';
      }
      for (const auto& [e, i] : r.currents) {
        bool ok = true;
        for (const CurrentViolation& x : r.current_violations) ok = ok && x.edge != e;
        out << "edge," << e << ',' << format_double(std::abs(i)) << ",0," << format_double(net.edge(e).i_max) << ','
            << ok << '\n';
      }
      break;
    case Format::Text:
      out << "configuration: " << ids_text(cfg) << '\n';
      for (const Node& v : net.nodes())
        out << "  node " << v.id << ": |U| = " << format_double(std::abs(sol.U.at(v.id))) << " V in ["
            << format_double(v.u_min) << ", " << format_double(v.u_max) << "]\n";
      for (const auto& [e, i] : r.currents)
        out << "  edge " << edge_label(net.edge(e)) << ": |I| = " << format_double(std::abs(i))
            << " A, limit " << format_double(net.edge(e).i_max) << '\n';
      for (const VoltageViolation& v : r.voltage_violations)
        out << "violation: node " << v.node << " |U| = " << format_double(v.magnitude) << " outside bound "
            << format_double(v.bound) << '\n';
      for (const CurrentViolation& c : r.current_violations)
        out << "violation: edge " << edge_label(net.edge(c.edge)) << " |I| = " << format_double(c.magnitude)
            << " > " << format_double(c.i_max) << '\n';
      out << (r.compliant ? "compliant" : "NOT compliant") << '\n';
      break;
  }
  return r.compliant ? kExitOk : kExitNegative;
}

// ---- argument wiring -------------------------------------------------------

void add_network(CLI::App* c, Options& o) {
  c->add_option("network,--network", o.network, "Network JSON file")->required();
  c->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}))
      ->capture_default_str();
}

void add_qubo_options(CLI::App* c, Options& o) {
  c->add_option("--failing-edge", o.failing_edge, "Edge that fails: id, 'n-m' or 'n,m'");
  c->add_option("--height", o.height, "Depth levels I (default from the graph diameter)");
  c->add_option("--bits-u", o.bits_u, "Bits K for Re U")->capture_default_str();
  c->add_option("--bits-ui", o.bits_ui, "Bits L for Im U")->capture_default_str();
  c->add_option("--bits-i", o.bits_i, "Bits J for currents")->capture_default_str();
  c->add_option("--weights", o.weights, "Penalty weights as a JSON object or a JSON file path");
  auto* tree = c->add_flag("--tree-only", o.tree_only, "Spanning-tree part only (no load-flow groups)");
  auto* lf = c->add_flag("--loadflow-only", o.loadflow_only,
                         "Load-flow QUBO of the fixed configuration given by --activate/--deactivate");
  tree->excludes(lf);
  c->add_option("--activate", o.activate, "Edges to switch on (with --loadflow-only)");
  c->add_option("--deactivate", o.deactivate, "Edges to switch off (with --loadflow-only)");
}

void add_seed(CLI::App* c, Options& o) {
  c->add_option("--seed", o.seed, "RNG seed (falls back to GRIDSEC_SEED, then a generated seed)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"N-1 security analysis of medium-voltage grids", "gridsec"};
  app.require_subcommand(1);

  auto* check = app.add_subcommand("check", "Classical N-1 check of every active edge");
  add_network(check, o);
  check->add_option("--k-max", o.k_max, "Largest number of switchovers tried")->capture_default_str();

  auto* enumerate = app.add_subcommand("enumerate", "List reconfigurations reachable with k switchovers");
  add_network(enumerate, o);
  enumerate->add_option("--k", o.k, "Number of switchovers")->capture_default_str();
  enumerate->add_option("--restrict", o.restrict_to, "Keep only switchovers deactivating one of these edges");
  enumerate->add_flag("--raw", o.raw, "Include candidates that are not spanning trees");

  auto* qubo = app.add_subcommand("qubo", "Export the N-1 QUBO and its layout");
  add_network(qubo, o);
  add_qubo_options(qubo, o);
  qubo->add_option("-o,--output", o.output, "QUBO file; the layout goes to <file>.layout.json ('-' for stdout)");

  auto* anneal = app.add_subcommand("anneal", "Simulated annealing on the N-1 QUBO");
  add_network(anneal, o);
  add_qubo_options(anneal, o);
  anneal->add_option("--reads", o.reads)->capture_default_str();
  anneal->add_option("--sweeps", o.sweeps)->capture_default_str();
  anneal->add_option("--sweeps-per-beta", o.sweeps_per_beta)->capture_default_str();
  anneal->add_option("--beta-range", o.beta_range, "beta_min beta_max (default automatic)")->expected(2);
  add_seed(anneal, o);
  anneal->add_flag("--post-process", o.post_process, "Steepest-descent polish of every read");
  anneal->add_option("--samples", o.samples, "Write the sample set as CSV");
  anneal->add_option("--histogram", o.histogram, "Write the energy histogram as CSV");

  auto* grover = app.add_subcommand("grover", "Simulated amplitude amplification over reconfiguration ids");
  add_network(grover, o);
  grover->add_option("--failing-edge", o.failing_edge, "Edge that fails")->required();
  grover->add_option("--k", o.k, "Number of switchovers")->capture_default_str();
  grover->add_option("--iterations", o.iterations, "Fixed iteration count (default: unknown-count search)");
  grover->add_option("--query-budget", o.query_budget, "Give up after this many oracle queries");
  add_seed(grover, o);
  grover->add_option("--distribution", o.distribution, "Write the final distribution as CSV");

  auto* loadflow = app.add_subcommand("loadflow", "Load-flow compliance of one configuration");
  add_network(loadflow, o);
  loadflow->add_option("--activate", o.activate, "Edges to switch on");
  loadflow->add_option("--deactivate", o.deactivate, "Edges to switch off");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  const bool json = o.format == "json";
  auto fail = [&](const char* kind, const std::string& message) {
    if (json) {
      err << ordered_json{{"error", kind}, {"message", message}}.dump() << '\n';
    } else {
      err << "gridsec: " << kind << " error: " << message << '\n';
    }
    return kExitError;
  };

  try {
    if (*check) return cmd_check(o, out);
    if (*enumerate) return cmd_enumerate(o, out);
    if (*qubo) return cmd_qubo(o, out);
    if (*anneal) return cmd_anneal(o, out);
    if (*grover) return cmd_grover(o, out);
    if (*loadflow) return cmd_loadflow(o, out);
  } catch (const ParseError& e) {
    return fail("parse", e.what());
  } catch (const ValidationError& e) {
    return fail("validation", e.what());
  } catch (const ArgumentError& e) {
    return fail("argument", e.what());
  } catch (const PreconditionError& e) {
    return fail("precondition", e.what());
  } catch (const SingularSystemError& e) {
    return fail("singular", e.what());
  } catch (const SizeError& e) {
    return fail("size", e.what());
  } catch (const EmptySpaceError& e) {
    return fail("empty-space", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return kExitError;
}

}  // namespace gridsec
