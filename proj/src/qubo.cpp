#include "gridsec/qubo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "gridsec/error.hpp"

namespace gridsec {

// ---------------------------------------------------------------------------
// Qubo

void Qubo::resize(std::size_t n) {
  if (n < n_ && !coeffs_.empty() && coeffs_.rbegin()->first.second >= n)
    throw ArgumentError("cannot shrink a QUBO below its highest variable index");
  n_ = n;
}

void Qubo::add_linear(std::size_t i, double c) { add_quadratic(i, i, c); }

void Qubo::add_quadratic(std::size_t i, std::size_t j, double c) {
  if (i > j) std::swap(i, j);
  if (j >= n_) n_ = j + 1;
  if (c == 0.0) return;
  coeffs_[{i, j}] += c;
}

void Qubo::add(const Qubo& other, double scale) {
  if (other.n_ > n_) n_ = other.n_;
  offset_ += scale * other.offset_;
  for (const auto& [k, v] : other.coeffs_) coeffs_[k] += scale * v;
}

double Qubo::coefficient(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  auto it = coeffs_.find({i, j});
  return it == coeffs_.end() ? 0.0 : it->second;
}

void Qubo::prune(double tol) {
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    if (std::abs(it->second) <= tol)
      it = coeffs_.erase(it);
    else
      ++it;
  }
}

double Qubo::evaluate(const Bits& x) const {
  if (x.size() != n_)
    throw ArgumentError("bit string has length " + std::to_string(x.size()) + ", QUBO has " + std::to_string(n_) +
                        " variables");
  double e = offset_;
  for (const auto& [k, v] : coeffs_)
    if (x[k.first] && x[k.second]) e += v;
  return e;
}

// ---------------------------------------------------------------------------
// QuboMatrix

QuboMatrix::QuboMatrix(const Qubo& q) : n(q.n()), offset(q.offset()), linear(q.n(), 0.0), row_start(q.n() + 1, 0) {
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [k, v] : q.coeffs()) {
    if (k.first == k.second) {
      linear[k.first] += v;
    } else {
      ++degree[k.first];
      ++degree[k.second];
    }
  }
  for (std::size_t i = 0; i < n; ++i) row_start[i + 1] = row_start[i] + degree[i];
  col.resize(row_start[n]);
  weight.resize(row_start[n]);
  std::vector<std::size_t> fill(row_start.begin(), row_start.end() - 1);
  for (const auto& [k, v] : q.coeffs()) {
    if (k.first == k.second) continue;
    col[fill[k.first]] = k.second;
    weight[fill[k.first]++] = v;
    col[fill[k.second]] = k.first;
    weight[fill[k.second]++] = v;
  }
}

double QuboMatrix::evaluate(const Bits& x) const {
  double e = offset;
  for (std::size_t i = 0; i < n; ++i) {
    if (!x[i]) continue;
    e += linear[i];
    for (std::size_t p = row_start[i]; p < row_start[i + 1]; ++p)
      if (col[p] > i && x[col[p]]) e += weight[p];
  }
  return e;
}

double QuboMatrix::flip_delta(const Bits& x, std::size_t i) const {
  double field = linear[i];
  for (std::size_t p = row_start[i]; p < row_start[i + 1]; ++p)
    if (x[col[p]]) field += weight[p];
  return x[i] ? -field : field;
}

// ---------------------------------------------------------------------------
// LinearExpr

LinearExpr& LinearExpr::operator+=(const LinearExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinearExpr& LinearExpr::operator-=(const LinearExpr& o) {
  for (const auto& [v, a] : o.terms) terms.emplace_back(v, -a);
  constant -= o.constant;
  return *this;
}

LinearExpr& LinearExpr::operator*=(double s) {
  for (auto& t : terms) t.second *= s;
  constant *= s;
  return *this;
}

double LinearExpr::evaluate(const Bits& x) const {
  double v = constant;
  for (const auto& [i, a] : terms)
    if (x.at(i)) v += a;
  return v;
}

LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
LinearExpr operator*(double s, LinearExpr a) { return a *= s; }

namespace {

// Merges repeated variables and drops zero coefficients.
std::vector<std::pair<std::size_t, double>> collect(const LinearExpr& e) {
  std::map<std::size_t, double> m;
  for (const auto& [v, a] : e.terms) m[v] += a;
  std::vector<std::pair<std::size_t, double>> out;
  for (const auto& [v, a] : m)
    if (a != 0.0) out.emplace_back(v, a);
  return out;
}

}  // namespace

void add_product(Qubo& q, const LinearExpr& a, const LinearExpr& b, double scale) {
  const auto ta = collect(a);
  const auto tb = collect(b);
  q.add_offset(scale * a.constant * b.constant);
  for (const auto& [v, c] : ta) q.add_linear(v, scale * c * b.constant);
  for (const auto& [v, c] : tb) q.add_linear(v, scale * c * a.constant);
  for (const auto& [u, cu] : ta)
    for (const auto& [v, cv] : tb) q.add_quadratic(u, v, scale * cu * cv);
}

void add_square(Qubo& q, const LinearExpr& a, double scale) {
  const auto t = collect(a);
  q.add_offset(scale * a.constant * a.constant);
  for (std::size_t p = 0; p < t.size(); ++p) {
    const auto [u, cu] = t[p];
    q.add_linear(u, scale * (cu * cu + 2.0 * cu * a.constant));
    for (std::size_t r = p + 1; r < t.size(); ++r) q.add_quadratic(u, t[r].first, scale * 2.0 * cu * t[r].second);
  }
}

// ---------------------------------------------------------------------------
// VarAllocator, PolyTerm

std::size_t VarAllocator::allocate(std::string label) {
  labels_.push_back(std::move(label));
  return labels_.size() - 1;
}

PolyTerm::PolyTerm(std::vector<std::size_t> v, double c) : vars(std::move(v)), coefficient(c) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
}

double PolyTerm::evaluate(const Bits& x) const {
  for (std::size_t v : vars)
    if (!x.at(v)) return 0.0;
  return coefficient;
}

// ---------------------------------------------------------------------------
// Penalties

Qubo linear_equality_penalty(const std::vector<std::pair<std::size_t, double>>& coeffs, double b) {
  Qubo q;
  LinearExpr e(-b);
  for (const auto& [v, a] : coeffs) e.add(v, a);
  add_square(q, e);
  return q;
}

Qubo one_hot(const std::vector<std::size_t>& vars) {
  if (vars.empty()) throw ArgumentError("one_hot needs at least one variable");
  std::vector<std::pair<std::size_t, double>> c;
  for (std::size_t v : vars) c.emplace_back(v, 1.0);
  return linear_equality_penalty(c, 1.0);
}

std::optional<std::size_t> decode_one_hot(const Bits& x, const std::vector<std::size_t>& vars) {
  std::optional<std::size_t> out;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    if (!x.at(vars[k])) continue;
    if (out) return std::nullopt;
    out = k;
  }
  return out;
}

Qubo domain_wall(const std::vector<std::size_t>& vars) {
  Qubo q;
  for (std::size_t v : vars) q.resize(std::max(q.n(), v + 1));
  for (std::size_t k = 0; k + 1 < vars.size(); ++k) {
    q.add_linear(vars[k], 1.0);
    q.add_quadratic(vars[k], vars[k + 1], -1.0);
  }
  return q;
}

std::optional<std::size_t> decode_domain_wall(const Bits& x, const std::vector<std::size_t>& vars) {
  std::size_t level = 0;
  while (level < vars.size() && !x.at(vars[level])) ++level;
  for (std::size_t k = level; k < vars.size(); ++k)
    if (!x.at(vars[k])) return std::nullopt;
  return level;
}

LinearExpr domain_wall_indicator(const std::vector<std::size_t>& vars, std::size_t level) {
  if (level > vars.size()) throw ArgumentError("domain-wall level out of range");
  LinearExpr e;
  if (level < vars.size())
    e.add(vars[level], 1.0);
  else
    e.constant += 1.0;
  if (level > 0) e.add(vars[level - 1], -1.0);
  return e;
}

Qubo pair_substitution_penalty(std::size_t xi, std::size_t xj, std::size_t z) {
  Qubo q;
  q.add_quadratic(xi, xj, 1.0);
  q.add_quadratic(z, xi, -2.0);
  q.add_quadratic(z, xj, -2.0);
  q.add_linear(z, 3.0);
  return q;
}

ReducedPolynomial reduce_polynomial(const std::vector<PolyTerm>& input, VarAllocator& alloc,
                                    std::optional<double> lambda_aux) {
  if (lambda_aux && !(*lambda_aux > 0.0)) throw ArgumentError("lambda_aux must be > 0");
  std::map<std::vector<std::size_t>, double> merged;
  for (const PolyTerm& t : input) {
    for (std::size_t v : t.vars)
      if (v >= alloc.size()) throw ArgumentError("polynomial references an unallocated variable");
    merged[t.vars] += t.coefficient;
  }
  std::vector<PolyTerm> terms;
  for (auto& [vars, c] : merged)
    if (c != 0.0) terms.emplace_back(vars, c);

  ReducedPolynomial out;
  while (true) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> freq;
    for (const PolyTerm& t : terms) {
      if (t.degree() <= 2) continue;
      for (std::size_t a = 0; a < t.vars.size(); ++a)
        for (std::size_t b = a + 1; b < t.vars.size(); ++b) ++freq[{t.vars[a], t.vars[b]}];
    }
    if (freq.empty()) break;
    auto best = freq.begin();
    for (auto it = freq.begin(); it != freq.end(); ++it)
      if (it->second > best->second) best = it;
    const auto [i, j] = best->first;
    const std::size_t z = alloc.allocate("z[" + alloc.label(i) + "*" + alloc.label(j) + "]");
    out.substitutions.push_back({{i, j}, z});
    for (PolyTerm& t : terms) {
      if (t.degree() <= 2) continue;
      if (!std::binary_search(t.vars.begin(), t.vars.end(), i) || !std::binary_search(t.vars.begin(), t.vars.end(), j))
        continue;
      std::vector<std::size_t> v;
      for (std::size_t x : t.vars)
        if (x != i && x != j) v.push_back(x);
      v.push_back(z);
      t = PolyTerm(std::move(v), t.coefficient);
    }
  }

  out.objective.resize(alloc.size());
  out.penalty.resize(alloc.size());
  for (const PolyTerm& t : terms) {
    if (t.degree() == 0)
      out.objective.add_offset(t.coefficient);
    else if (t.degree() == 1)
      out.objective.add_linear(t.vars[0], t.coefficient);
    else
      out.objective.add_quadratic(t.vars[0], t.vars[1], t.coefficient);
  }

  const std::size_t m = out.substitutions.size();
  std::vector<double> lambda(m, lambda_aux.value_or(0.0));
  if (!lambda_aux) {
    for (std::size_t s = m; s-- > 0;) {
      const std::size_t z = out.substitutions[s].second;
      double w = 1.0;
      for (const PolyTerm& t : terms)
        if (std::binary_search(t.vars.begin(), t.vars.end(), z)) w += std::abs(t.coefficient);
      for (std::size_t u = s + 1; u < m; ++u) {
        const auto [a, b] = out.substitutions[u].first;
        if (a == z || b == z) w += 2.0 * lambda[u];
      }
      lambda[s] = w;
    }
  }
  for (std::size_t s = 0; s < m; ++s) {
    const auto [a, b] = out.substitutions[s].first;
    out.penalty.add(pair_substitution_penalty(a, b, out.substitutions[s].second), lambda[s]);
  }
  return out;
}

ReducedPolynomial reduce_degree(const PolyTerm& term, VarAllocator& alloc, std::optional<double> lambda_aux) {
  if (term.degree() < 3) throw ArgumentError("reduce_degree needs a term of degree >= 3");
  return reduce_polynomial({term}, alloc, lambda_aux);
}

// ---------------------------------------------------------------------------
// Exhaustive search

void scan_assignments(const std::vector<const Qubo*>& qs,
                      const std::function<void(const Bits&, const std::vector<double>&)>& visit) {
  std::size_t n = 0;
  for (const Qubo* q : qs) n = std::max(n, q->n());
  if (n > 40) throw SizeError("scan_assignments: too many variables");
  std::vector<QuboMatrix> mats;
  std::vector<double> energy;
  for (const Qubo* q : qs) {
    Qubo padded = *q;
    padded.resize(n);
    mats.emplace_back(padded);
    energy.push_back(padded.offset());
  }
  Bits x(n, 0);
  visit(x, energy);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < total; ++k) {
    const auto i = static_cast<std::size_t>(__builtin_ctzll(k));
    for (std::size_t a = 0; a < mats.size(); ++a) energy[a] += mats[a].flip_delta(x, i);
    x[i] ^= 1;
    visit(x, energy);
  }
}

BruteForceResult brute_force_minimize(const Qubo& q) {
  if (q.n() > kBruteForceLimit)
    throw SizeError("brute force limited to " + std::to_string(kBruteForceLimit) + " variables, got " +
                    std::to_string(q.n()));
  BruteForceResult r;
  bool first = true;
  scan_assignments({&q}, [&](const Bits& x, const std::vector<double>& e) {
    const double tol = 1e-9 * std::max(1.0, std::abs(r.energy));
    if (first || e[0] < r.energy - tol) {
      first = false;
      r.energy = e[0];
      r.argmin = x;
      r.minimizers = 1;
    } else if (e[0] <= r.energy + tol) {
      ++r.minimizers;
      if (x < r.argmin) r.argmin = x;
    }
  });
  r.energy = q.evaluate(r.argmin);
  return r;
}

// ---------------------------------------------------------------------------
// Export

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_qubo(std::ostream& out, const Qubo& q, const std::vector<std::string>& labels) {
  out << "# n=" << q.n() << " offset=" << format_double(q.offset()) << "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << "# var " << i << " " << labels[i] << "\n";
  for (const auto& [k, v] : q.coeffs()) out << k.first << " " << k.second << " " << format_double(v) << "\n";
}

namespace {

double parse_double(std::string_view s, int line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'", line);
  return v;
}

std::size_t parse_index(std::string_view s, int line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError("bad index '" + std::string(s) + "'", line);
  return v;
}

}  // namespace

Qubo read_qubo(std::istream& in, std::vector<std::string>* labels) {
  Qubo q;
  std::string text;
  int line = 0;
  bool header = false;
  std::size_t n = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    if (text.rfind("# n=", 0) == 0) {
      const auto sp = text.find(" offset=");
      if (sp == std::string::npos) throw ParseError("header lacks offset", line);
      n = parse_index(std::string_view(text).substr(4, sp - 4), line);
      q.add_offset(parse_double(std::string_view(text).substr(sp + 8), line));
      header = true;
      continue;
    }
    if (text.rfind("# var ", 0) == 0) {
      const auto rest = std::string_view(text).substr(6);
      const auto sp = rest.find(' ');
      const std::size_t id = parse_index(rest.substr(0, sp), line);
      if (labels) {
        if (labels->size() <= id) labels->resize(id + 1);
        (*labels)[id] = sp == std::string_view::npos ? "" : std::string(rest.substr(sp + 1));
      }
      continue;
    }
    if (text[0] == '#') continue;
    std::istringstream ls(text);
    std::string a, b, c;
    if (!(ls >> a >> b >> c)) throw ParseError("expected 'i j coeff'", line);
    q.add_quadratic(parse_index(a, line), parse_index(b, line), parse_double(c, line));
  }
  if (!header) throw ParseError("missing '# n=' header", 1);
  q.resize(std::max(n, q.n()));
  return q;
}

}  // namespace gridsec
