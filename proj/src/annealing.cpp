#include "gridsec/annealing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "gridsec/error.hpp"

namespace gridsec {

void AnnealSchedule::validate() const {
  if (reads < 1) throw ArgumentError("reads must be >= 1");
  if (sweeps_per_beta < 1) throw ArgumentError("sweeps per beta must be >= 1");
  if (sweeps < sweeps_per_beta) throw ArgumentError("sweeps must be >= sweeps per beta");
  if (beta_range) {
    const auto [lo, hi] = *beta_range;
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw ArgumentError("beta range must satisfy 0 < min <= max");
  }
}

std::pair<double, double> auto_beta_range(const QuboMatrix& m) {
  double max_delta = 0.0;
  double min_coeff = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.n; ++i) {
    // Largest |flip delta| of bit i over all states of its neighbours.
    double up = m.linear[i], down = m.linear[i];
    if (m.linear[i] != 0.0) min_coeff = std::min(min_coeff, std::abs(m.linear[i]));
    for (std::size_t p = m.row_start[i]; p < m.row_start[i + 1]; ++p) {
      (m.weight[p] > 0.0 ? up : down) += m.weight[p];
      if (m.weight[p] != 0.0) min_coeff = std::min(min_coeff, std::abs(m.weight[p]));
    }
    max_delta = std::max({max_delta, std::abs(up), std::abs(down)});
  }
  if (max_delta == 0.0) return {1.0, 1.0};
  const double lo = std::log(2.0) / max_delta;
  return {lo, std::max(lo, std::log(100.0) / min_coeff)};
}

void SampleSet::add(Bits bits, double energy, std::size_t multiplicity) {
  samples_.push_back({std::move(bits), energy, multiplicity});
}

void SampleSet::finalize() {
  std::sort(samples_.begin(), samples_.end(), [](const Sample& a, const Sample& b) {
    return a.energy != b.energy ? a.energy < b.energy : a.bits < b.bits;
  });
  std::vector<Sample> merged;
  for (Sample& s : samples_) {
    auto same = std::find_if(merged.rbegin(), merged.rend(), [&](const Sample& m) { return m.bits == s.bits; });
    if (same != merged.rend() && same->energy == s.energy) {
      same->multiplicity += s.multiplicity;
    } else {
      merged.push_back(std::move(s));
    }
  }
  samples_ = std::move(merged);
}

std::size_t SampleSet::total_reads() const {
  std::size_t n = 0;
  for (const Sample& s : samples_) n += s.multiplicity;
  return n;
}

namespace {

// Local fields h_i = linear_i + sum_j w_ij x_j; flipping i changes the energy by (1 - 2 x_i) h_i.
struct FieldState {
  const QuboMatrix& m;
  Bits x;
  std::vector<double> h;

  FieldState(const QuboMatrix& mat, Bits bits) : m(mat), x(std::move(bits)), h(mat.linear) {
    for (std::size_t i = 0; i < m.n; ++i) {
      if (!x[i]) continue;
      for (std::size_t p = m.row_start[i]; p < m.row_start[i + 1]; ++p) h[m.col[p]] += m.weight[p];
    }
  }

  double delta(std::size_t i) const { return x[i] ? -h[i] : h[i]; }

  void flip(std::size_t i) {
    x[i] ^= 1;
    const double s = x[i] ? 1.0 : -1.0;
    for (std::size_t p = m.row_start[i]; p < m.row_start[i + 1]; ++p) h[m.col[p]] += s * m.weight[p];
  }

  void descend() {
    for (;;) {
      std::size_t best = m.n;
      double best_delta = 0.0;
      for (std::size_t i = 0; i < m.n; ++i) {
        const double d = delta(i);
        if (d < best_delta) {
          best_delta = d;
          best = i;
        }
      }
      if (best == m.n) return;
      flip(best);
    }
  }
};

}  // namespace

SampleSet simulated_annealing(const Qubo& q, const AnnealSchedule& sched) {
  sched.validate();
  if (q.n() < 1) throw ArgumentError("QUBO has no variables");
  const QuboMatrix m(q);
  const auto [b0, b1] = sched.beta_range ? *sched.beta_range : auto_beta_range(m);
  const std::size_t rungs = sched.sweeps / sched.sweeps_per_beta;
  std::vector<double> betas(rungs);
  for (std::size_t r = 0; r < rungs; ++r) {
    const double t = rungs == 1 ? 1.0 : static_cast<double>(r) / static_cast<double>(rungs - 1);
    betas[r] = b0 * std::pow(b1 / b0, t);
  }

  SampleSet out;
  for (std::size_t read = 0; read < sched.reads; ++read) {
    SplitMix64 rng(splitmix64_mix(sched.seed + read * 0x9E3779B97F4A7C15ULL));
    Bits init(m.n);
    for (auto& b : init) b = rng.next() >> 63;
    FieldState st(m, std::move(init));
    for (double beta : betas) {
      for (std::size_t s = 0; s < sched.sweeps_per_beta; ++s) {
        for (std::size_t i = 0; i < m.n; ++i) {
          const double d = st.delta(i);
          if (d <= 0.0 || rng.uniform() < std::exp(-beta * d)) st.flip(i);
        }
      }
    }
    const double e = q.evaluate(st.x);
    out.add(std::move(st.x), e);
  }
  out.finalize();
  return out;
}

Bits steepest_descent(const Qubo& q, Bits bits) {
  if (bits.size() != q.n()) throw ArgumentError("bit string length does not match the QUBO");
  const QuboMatrix m(q);
  FieldState st(m, std::move(bits));
  st.descend();
  return std::move(st.x);
}

SampleSet post_process(const Qubo& q, const SampleSet& s) {
  const QuboMatrix m(q);
  SampleSet out;
  for (const Sample& smp : s.samples()) {
    FieldState st(m, smp.bits);
    st.descend();
    const double e = q.evaluate(st.x);
    out.add(std::move(st.x), e, smp.multiplicity);
  }
  out.finalize();
  return out;
}

std::size_t EnergyHistogram::total() const {
  std::size_t n = 0;
  for (const auto& [e, b] : bins) n += b.feasible + b.infeasible;
  return n;
}

EnergyHistogram energy_histogram(const SampleSet& s, const QuboLayout& layout) {
  EnergyHistogram h;
  for (const Sample& smp : s.samples()) {
    const double key = std::round(smp.energy * 1e6) / 1e6 + 0.0;
    HistogramBin& bin = h.bins[key];
    (decode_solution(smp.bits, layout).feasible() ? bin.feasible : bin.infeasible) += smp.multiplicity;
  }
  return h;
}

void write_histogram_csv(std::ostream& out, const EnergyHistogram& h) {
  out << "energy,feasible,infeasible\n";
  for (const auto& [e, b] : h.bins) out << format_double(e) << ',' << b.feasible << ',' << b.infeasible << '\n';
}

}  // namespace gridsec
