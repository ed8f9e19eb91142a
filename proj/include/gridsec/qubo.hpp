#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gridsec {

using Bits = std::vector<std::uint8_t>;

/// E(x) = offset + sum_i Q_ii x_i + sum_{i<j} Q_ij x_i x_j over binary x.
class Qubo {
 public:
  Qubo() = default;
  explicit Qubo(std::size_t n) : n_(n) {}

  std::size_t n() const { return n_; }
  void resize(std::size_t n);

  void add_offset(double c) { offset_ += c; }
  void add_linear(std::size_t i, double c);
  /// (i,j) and (j,i) name the same coefficient; i == j folds into the linear term.
  void add_quadratic(std::size_t i, std::size_t j, double c);
  /// Adds `scale * other`, growing n if needed.
  void add(const Qubo& other, double scale = 1.0);

  double offset() const { return offset_; }
  double coefficient(std::size_t i, std::size_t j) const;
  const std::map<std::pair<std::size_t, std::size_t>, double>& coeffs() const { return coeffs_; }

  /// Drops entries whose magnitude is <= tol (exact zeros by default).
  void prune(double tol = 0.0);

  double evaluate(const Bits& x) const;

 private:
  std::size_t n_ = 0;
  double offset_ = 0.0;
  std::map<std::pair<std::size_t, std::size_t>, double> coeffs_;
};

/// Row-compressed view used by samplers: linear terms plus symmetric neighbour lists.
struct QuboMatrix {
  std::size_t n = 0;
  double offset = 0.0;
  std::vector<double> linear;
  std::vector<std::size_t> row_start;  // n + 1 entries
  std::vector<std::size_t> col;
  std::vector<double> weight;

  explicit QuboMatrix(const Qubo& q);
  double evaluate(const Bits& x) const;
  /// Energy change of flipping bit i.
  double flip_delta(const Bits& x, std::size_t i) const;
};

/// sum_k a_k x_{v_k} + constant.
struct LinearExpr {
  std::vector<std::pair<std::size_t, double>> terms;
  double constant = 0.0;

  LinearExpr() = default;
  explicit LinearExpr(double c) : constant(c) {}
  LinearExpr& add(std::size_t var, double a) {
    terms.emplace_back(var, a);
    return *this;
  }
  LinearExpr& operator+=(const LinearExpr& o);
  LinearExpr& operator-=(const LinearExpr& o);
  LinearExpr& operator*=(double s);
  double evaluate(const Bits& x) const;
};

LinearExpr operator+(LinearExpr a, const LinearExpr& b);
LinearExpr operator-(LinearExpr a, const LinearExpr& b);
LinearExpr operator*(double s, LinearExpr a);

/// q += scale * a * b, using x_i^2 = x_i.
void add_product(Qubo& q, const LinearExpr& a, const LinearExpr& b, double scale = 1.0);
/// q += scale * a^2.
void add_square(Qubo& q, const LinearExpr& a, double scale = 1.0);

class VarAllocator {
 public:
  std::size_t allocate(std::string label);
  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t id) const { return labels_.at(id); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

struct PolyTerm {
  std::vector<std::size_t> vars;  // sorted, unique
  double coefficient = 0.0;

  PolyTerm() = default;
  PolyTerm(std::vector<std::size_t> v, double c);
  std::size_t degree() const { return vars.size(); }
  double evaluate(const Bits& x) const;
};

// --- penalty builders -------------------------------------------------------

/// (sum a_i x_i - b)^2.
Qubo linear_equality_penalty(const std::vector<std::pair<std::size_t, double>>& coeffs, double b);

/// (1 - sum x_i)^2.
Qubo one_hot(const std::vector<std::size_t>& vars);
/// Selected position, or nullopt unless exactly one bit is set.
std::optional<std::size_t> decode_one_hot(const Bits& x, const std::vector<std::size_t>& vars);

/// sum x_i (1 - x_{i+1}): counts "1-0" substrings.
Qubo domain_wall(const std::vector<std::size_t>& vars);
/// Level in [0, vars.size()] = number of leading zeros; nullopt if not of the form 0..01..1.
std::optional<std::size_t> decode_domain_wall(const Bits& x, const std::vector<std::size_t>& vars);
/// Indicator of level `level` as an affine form in the bits, framed by x_{-1} = 0, x_{L} = 1.
LinearExpr domain_wall_indicator(const std::vector<std::size_t>& vars, std::size_t level);

/// x_i x_j - 2 z (x_i + x_j) + 3 z.
Qubo pair_substitution_penalty(std::size_t xi, std::size_t xj, std::size_t z);

struct ReducedPolynomial {
  Qubo objective;  // the substituted terms, all of degree <= 2
  Qubo penalty;    // weighted auxiliary penalties
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::size_t>> substitutions;  // ((i,j), z)
};

/// Quadratizes a polynomial by pairwise substitution, most frequent pair first.
/// With `lambda_aux` unset, each aux gets 1 + (sum of |coeff| of the terms it appears in)
/// + 2 * (weights of the later aux penalties it feeds).
ReducedPolynomial reduce_polynomial(const std::vector<PolyTerm>& terms, VarAllocator& alloc,
                                    std::optional<double> lambda_aux = std::nullopt);

/// Single-term form.
ReducedPolynomial reduce_degree(const PolyTerm& term, VarAllocator& alloc, std::optional<double> lambda_aux = std::nullopt);

// --- exact solving ----------------------------------------------------------

inline constexpr std::size_t kBruteForceLimit = 26;

struct BruteForceResult {
  Bits argmin;
  double energy = 0.0;
  std::size_t minimizers = 0;
};

/// Exhaustive scan; ties within 1e-9 relative count as minimizers and the
/// lexicographically smallest bit string wins.
BruteForceResult brute_force_minimize(const Qubo& q);

/// Visits all 2^n assignments in Gray-code order with the energy of each QUBO.
/// Energies are tracked incrementally; callers needing exact values re-evaluate.
void scan_assignments(const std::vector<const Qubo*>& qs,
                      const std::function<void(const Bits&, const std::vector<double>&)>& visit);

// --- text export ------------------------------------------------------------

/// "# n=<n> offset=<offset>", "# var <id> <label>" lines, then "i j coeff" lines.
void write_qubo(std::ostream& out, const Qubo& q, const std::vector<std::string>& labels = {});
Qubo read_qubo(std::istream& in, std::vector<std::string>* labels = nullptr);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace gridsec
