#include "oracles/gauss_jordan.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

using C = std::complex<double>;

std::map<gridsec::NodeId, C> solve_voltages(const gridsec::Network& net, const gridsec::EdgeSet& cfg) {
  std::vector<gridsec::NodeId> msr;
  std::map<gridsec::NodeId, std::size_t> at;
  std::map<gridsec::NodeId, C> out;
  for (const auto& v : net.nodes()) {
    if (v.kind == gridsec::NodeKind::OS) {
      out[v.id] = v.u_nom;
    } else {
      at[v.id] = msr.size();
      msr.push_back(v.id);
    }
  }
  const std::size_t n = msr.size();
  // Augmented matrix [M | r].
  std::vector<std::vector<C>> M(n, std::vector<C>(n + 1, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    const auto& v = net.node(msr[r]);
    M[r][r] += std::conj(v.load) / (v.u_nom * v.u_nom);
  }
  for (auto id : cfg) {
    const auto& e = net.edge(id);
    const C g = C(1.0) / e.z;
    const gridsec::NodeId ends[2] = {e.n, e.m};
    for (int s = 0; s < 2; ++s) {
      gridsec::NodeId here = ends[s], there = ends[1 - s];
      if (!at.contains(here)) continue;
      M[at[here]][at[here]] += g;
      if (at.contains(there))
        M[at[here]][at[there]] -= g;
      else
        M[at[here]][n] += g * out[there];
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(M[r][c]) > std::abs(M[p][c])) p = r;
    if (std::abs(M[p][c]) == 0.0) throw std::runtime_error("oracle: singular");
    std::swap(M[p], M[c]);
    const C piv = M[c][c];
    for (auto& x : M[c]) x /= piv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const C f = M[r][c];
      if (f == 0.0) continue;
      for (std::size_t j = c; j <= n; ++j) M[r][j] -= f * M[c][j];
    }
  }
  for (std::size_t r = 0; r < n; ++r) out[msr[r]] = M[r][n];
  return out;
}

}  // namespace oracle
