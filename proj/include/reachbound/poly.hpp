#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "reachbound/errors.hpp"

namespace reachbound {

// Exponent vector alpha in N^n.
using MultiIndex = std::vector<int>;

int total_degree(const MultiIndex& a);

// Canonical term order: total degree first, then lexicographic.
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b);

struct Term {
  MultiIndex exp;
  double coef;
};

// Sparse polynomial with a declared degree bound and an explicit support
// (a superset of the exponents that carry a nonzero coefficient). Terms are
// kept in graded-lex order so iteration is deterministic.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int n, int degree, std::vector<Term> terms,
             std::vector<MultiIndex> support = {});

  int n() const { return n_; }
  int degree() const { return degree_; }
  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<MultiIndex>& support() const { return support_; }

  double coefficient(const MultiIndex& e) const;
  double eval(const Eigen::VectorXd& x) const;
  // Value of the partial derivative prescribed by the exponent vector `beta`.
  double eval_derivative(const MultiIndex& beta, const Eigen::VectorXd& x) const;
  double coef_abs_sum() const;

 private:
  int n_ = 0;
  int degree_ = 0;
  std::vector<Term> terms_;
  std::vector<MultiIndex> support_;
};

// q-tuple of polynomials in a common ambient dimension n.
class PolyTuple {
 public:
  PolyTuple() = default;
  PolyTuple(int n, std::vector<Polynomial> polys, bool integer_coeffs = false);

  int n() const { return n_; }
  int q() const { return int(polys_.size()); }
  const std::vector<int>& degrees() const { return degrees_; }
  int max_degree() const { return max_degree_; }
  const Polynomial& poly(int i) const { return polys_.at(std::size_t(i)); }
  const std::vector<Polynomial>& polys() const { return polys_; }
  bool integer_coeffs() const { return integer_coeffs_; }

 private:
  int n_ = 0;
  int max_degree_ = 0;
  std::vector<int> degrees_;
  std::vector<Polynomial> polys_;
  bool integer_coeffs_ = false;
};

// Symmetric derivative tensor of order `order` at a base point; entries are
// laid out row-major as q * n^order. Orders past the maximum degree are
// represented by the `zero` flag with no storage.
struct DerivativeTensor {
  int order = 0;
  int q = 0;
  int n = 0;
  Eigen::VectorXd x;
  bool zero = false;
  std::vector<double> entries;

  double entry(int i, const int* idx) const {
    if (zero) return 0.0;
    std::size_t off = std::size_t(i);
    for (int s = 0; s < order; ++s) off = off * std::size_t(n) + std::size_t(idx[s]);
    return entries[off];
  }
};

// --- parsing -----------------------------------------------------------------

// Semicolon-separated expanded polynomial expressions in x0..x{n-1}.
// Grammar: expr := [sign] term {(+|-) term}; term := factor {'*' factor};
// factor := number | var ['^' nonneg-int]. No parentheses.
PolyTuple parse_poly_text(std::string_view src, int n, const std::vector<int>& degrees);

// Convenience: infers n from the highest variable index and the degree vector
// from the monomials actually present.
PolyTuple parse_poly_auto(std::string_view src);

// --- evaluation and calculus --------------------------------------------------

Eigen::VectorXd evaluate(const PolyTuple& f, const Eigen::VectorXd& x);
Eigen::MatrixXd jacobian(const PolyTuple& f, const Eigen::VectorXd& x);
DerivativeTensor derivative_tensor(const PolyTuple& f, const Eigen::VectorXd& x, int order);

// max_i of the absolute coefficient sum of f_i
double one_norm(const PolyTuple& f);

// sum_k v_k * d f / d X_k, degree vector lowered by one (floored at zero)
PolyTuple directional_derivative_poly(const PolyTuple& f, const Eigen::VectorXd& v);

// Adds X_0 in front; each entry becomes homogeneous of its declared degree with
// f^h_i(1, x) = f_i(x).
PolyTuple homogenize(const PolyTuple& f);

// max_i binom(d_i, order) * |f_i|_1, zero when order exceeds d_i
double binom_delta_norm(const PolyTuple& f, int order);

double binomial(int n, int k);

// --- serialization --------------------------------------------------------

// {"n":..,"q":..,"degrees":[..],"polys":[[{"exp":[..],"coef":..},..],..]}
// plus optional "supports" and "integer" fields when they carry information.
std::string to_json(const PolyTuple& f);
PolyTuple poly_from_json(const std::string& text);

}  // namespace reachbound
