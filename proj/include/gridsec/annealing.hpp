#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "gridsec/n1_qubo.hpp"
#include "gridsec/qubo.hpp"
#include "gridsec/rng.hpp"

namespace gridsec {

struct AnnealSchedule {
  std::size_t reads = 100;
  std::size_t sweeps = 10000;
  std::size_t sweeps_per_beta = 20;
  std::optional<std::pair<double, double>> beta_range;  // auto when unset
  std::uint64_t seed = 0;  // read r starts SplitMix64 at splitmix64_mix(seed + r * 0x9E3779B97F4A7C15)

  void validate() const;
};

/// ln(2)/largest flip delta to ln(100)/smallest nonzero coefficient.
std::pair<double, double> auto_beta_range(const QuboMatrix& m);

struct Sample {
  Bits bits;
  double energy = 0.0;
  std::size_t multiplicity = 1;
};

class SampleSet {
 public:
  void add(Bits bits, double energy, std::size_t multiplicity = 1);
  /// Sorts by energy, then bits, and merges identical bit strings.
  void finalize();

  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t total_reads() const;
  bool empty() const { return samples_.empty(); }

 private:
  std::vector<Sample> samples_;
};

SampleSet simulated_annealing(const Qubo& q, const AnnealSchedule& sched);

/// Flips the single most improving bit until none improves.
Bits steepest_descent(const Qubo& q, Bits bits);
SampleSet post_process(const Qubo& q, const SampleSet& s);

struct HistogramBin {
  std::size_t feasible = 0;
  std::size_t infeasible = 0;
};

struct EnergyHistogram {
  std::map<double, HistogramBin> bins;  // energies rounded to 1e-6
  std::size_t total() const;
};

EnergyHistogram energy_histogram(const SampleSet& s, const QuboLayout& layout);

void write_histogram_csv(std::ostream& out, const EnergyHistogram& h);

}  // namespace gridsec
