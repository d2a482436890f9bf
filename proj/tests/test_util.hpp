#pragma once

#include <Eigen/Dense>
#include <vector>

#include "reachbound/poly.hpp"
#include "reachbound/random_models.hpp"
#include "reachbound/rng.hpp"

namespace rbtest {

using namespace reachbound;

inline PolyTuple circle() { return parse_poly_auto("x0^2 + x1^2 - 1"); }
inline PolyTuple parabola() { return parse_poly_auto("x1 - x0^2"); }
inline PolyTuple sphere() { return parse_poly_auto("x0^2 + x1^2 + x2^2 - 1"); }
inline PolyTuple ellipse() { return parse_poly_auto("0.25*x0^2 + x1^2 - 1"); }
inline PolyTuple parallel_lines() { return parse_poly_auto("x0^2 - x0"); }
inline PolyTuple parallel_lines_plane() {
  // same two lines embedded in the plane
  return parse_poly_text("x0^2 - x0", 2, {2});
}

inline Eigen::VectorXd point(std::initializer_list<double> xs) {
  Eigen::VectorXd v(long(xs.size()));
  long i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Eigen::VectorXd random_point(Rng& rng, int n, double range) {
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v[k] = rng.uniform(-range, range);
  return v;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = rng.normal();
  return A;
}

// sparse tuple with uniform coefficients in [-range, range]
inline PolyTuple random_tuple(Rng& rng, int n, int q, const std::vector<int>& degrees,
                              double range = 2.0, double keep_prob = 0.7) {
  std::vector<Polynomial> polys;
  for (int i = 0; i < q; ++i) {
    std::vector<Term> terms;
    for (const auto& e : dense_support(n, degrees[std::size_t(i)]))
      if (rng.uniform() < keep_prob) terms.push_back(Term{e, rng.uniform(-range, range)});
    if (terms.empty())
      terms.push_back(Term{MultiIndex(std::size_t(n), 0), rng.uniform(-range, range)});
    polys.emplace_back(n, degrees[std::size_t(i)], std::move(terms));
  }
  return PolyTuple(n, std::move(polys));
}

inline PolyTuple random_tuple(Rng& rng, int nmax = 4, int qmax = 3, int dmax = 5) {
  const int n = int(rng.uniform_int(1, nmax));
  const int q = int(rng.uniform_int(1, std::min(qmax, n)));
  std::vector<int> degrees;
  for (int i = 0; i < q; ++i) degrees.push_back(int(rng.uniform_int(1, dmax)));
  return random_tuple(rng, n, q, degrees);
}

// scale every coefficient of f by c
inline PolyTuple scale_tuple(const PolyTuple& f, double c) {
  std::vector<Polynomial> polys;
  for (const auto& p : f.polys()) {
    std::vector<Term> terms;
    for (const auto& t : p.terms()) terms.push_back(Term{t.exp, t.coef * c});
    polys.emplace_back(p.n(), p.degree(), std::move(terms), p.support());
  }
  return PolyTuple(f.n(), std::move(polys), false);
}

// contract an order-ell derivative tensor with direction vectors
inline Eigen::VectorXd contract_tensor(const DerivativeTensor& T,
                                       const std::vector<Eigen::VectorXd>& vs) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(T.q);
  if (T.zero) return out;
  std::size_t slots = 1;
  for (int s = 0; s < T.order; ++s) slots *= std::size_t(T.n);
  for (std::size_t flat = 0; flat < slots; ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (int s = T.order - 1; s >= 0; --s) {
      const int k = int(rem % std::size_t(T.n));
      rem /= std::size_t(T.n);
      w *= vs[std::size_t(s)][k];
    }
    for (int i = 0; i < T.q; ++i) out[i] += T.entries[std::size_t(i) * slots + flat] * w;
  }
  return out;
}

// Minimize a positively homogeneous function over the unit sphere in R^q:
// dense sampling plus pattern descent from the best candidates. The direction
// set includes pairwise diagonals so kinks of piecewise-linear maxima do not
// stall the search.
template <typename Fn>
double sphere_min_oracle(const Fn& value, int q, Rng& rng, int samples) {
  struct Cand {
    double v;
    Eigen::VectorXd c;
  };
  std::vector<Cand> best;
  for (int it = 0; it < samples; ++it) {
    Eigen::VectorXd c(q);
    for (int j = 0; j < q; ++j) c[j] = rng.normal();
    const double n = c.norm();
    if (n == 0.0) continue;
    c /= n;
    const double v = value(c);
    if (best.size() < 8) {
      best.push_back({v, c});
      std::sort(best.begin(), best.end(), [](const Cand& a, const Cand& b) { return a.v < b.v; });
    } else if (v < best.back().v) {
      best.back() = {v, c};
      std::sort(best.begin(), best.end(), [](const Cand& a, const Cand& b) { return a.v < b.v; });
    }
  }
  std::vector<Eigen::VectorXd> dirs;
  for (int j = 0; j < q; ++j) dirs.push_back(Eigen::VectorXd::Unit(q, j));
  for (int j = 0; j < q; ++j)
    for (int k = j + 1; k < q; ++k) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(q);
      d[j] = d[k] = 1.0 / std::sqrt(2.0);
      dirs.push_back(d);
      d[k] = -d[k];
      dirs.push_back(d);
    }
  double result = std::numeric_limits<double>::infinity();
  for (auto& cand : best) {
    Eigen::VectorXd c = cand.c;
    double cur = cand.v;
    for (double step = 0.25; step > 1e-10; step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (const auto& d : dirs)
          for (double sgn : {1.0, -1.0}) {
            Eigen::VectorXd t = c + sgn * step * d;
            t /= t.norm();
            const double v = value(t);
            if (v < cur) {
              cur = v;
              c = t;
              improved = true;
            }
          }
      }
    }
    // random polling escapes the kinks of piecewise-smooth objectives where
    // a fixed direction set stalls
    double step = 0.05;
    for (int round = 0; round < 4000 && step > 1e-12; ++round) {
      Eigen::VectorXd d(q);
      for (int j = 0; j < q; ++j) d[j] = rng.normal();
      Eigen::VectorXd t = c + step * d;
      t /= t.norm();
      const double v = value(t);
      if (v < cur) {
        cur = v;
        c = t;
        step *= 1.6;
      } else {
        step *= 0.93;
      }
    }
    result = std::min(result, cur);
  }
  return result;
}

// max_i sum of absolute entries in row i: exact (inf,inf) norm for order 1,
// a certified upper bound for higher orders
inline double tensor_absrow_norm(const DerivativeTensor& T) {
  if (T.zero) return 0.0;
  std::size_t slots = 1;
  for (int s = 0; s < T.order; ++s) slots *= std::size_t(T.n);
  double best = 0.0;
  for (int i = 0; i < T.q; ++i) {
    double row = 0.0;
    for (std::size_t s = 0; s < slots; ++s)
      row += std::abs(T.entries[std::size_t(i) * slots + s]);
    best = std::max(best, row);
  }
  return best;
}

}  // namespace rbtest
