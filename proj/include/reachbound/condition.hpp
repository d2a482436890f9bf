#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "reachbound/errors.hpp"
#include "reachbound/norms.hpp"
#include "reachbound/poly.hpp"

namespace reachbound {

// Decomposition of the local condition value at a point. `value` is
// |f|_1 / max(residual_term, inverse_term) and is +infinity exactly at
// singular zeros (both terms zero).
struct ConditionReport {
  Eigen::VectorXd point;
  double residual_term = 0.0;
  double inverse_term = 0.0;
  double value = 0.0;
  bool surjective = false;
};

struct GlobalCondResult {
  double R = 1.0;
  double lower = 0.0;            // attained at max_witness
  double upper = 0.0;            // may be +infinity
  std::uint64_t cells = 0;       // center evaluations performed
  Eigen::VectorXd max_witness;   // point in [-R,R]^n realizing `lower`
};

// Refinement ran out of cells; the achieved bracket rides along.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(GlobalCondResult partial)
      : Error("cell budget exceeded after " + std::to_string(partial.cells) +
              " evaluations (bracket [" + std::to_string(partial.lower) + ", " +
              std::to_string(partial.upper) + "])"),
        partial(std::move(partial)) {}
  GlobalCondResult partial;
};

struct GlobalCondOptions {
  double target_rel_err = 0.05;
  std::uint64_t cell_budget = 10'000'000;
  double cond_cap = 1e14;        // lower bound beyond this reports upper = inf
  double stop_upper_below = 0.0; // early exit once the certified upper drops below
};

// Precompiled evaluator: homogenization and all first partials are built once
// so pointwise queries stay cheap inside grid refinement and Monte Carlo loops.
class CondEvaluator {
 public:
  explicit CondEvaluator(const PolyTuple& f);

  ConditionReport local(const Eigen::VectorXd& x) const;

  // Homogeneous condition value at z on the boundary of [-1,1]^{n+1}.
  double homog(const Eigen::VectorXd& z) const;        // checks the boundary
  double homog_unchecked(const Eigen::VectorXd& z) const;

  const PolyTuple& tuple() const { return f_; }
  const PolyTuple& homogenized() const { return fh_; }
  double tuple_one_norm() const { return norm1_; }

 private:
  PolyTuple f_;
  PolyTuple fh_;
  std::vector<std::vector<Polynomial>> grad_;    // q x n partials of f
  std::vector<std::vector<Polynomial>> grad_h_;  // q x (n+1) partials of f^h
  double norm1_ = 0.0;
};

ConditionReport cond_local(const PolyTuple& f, const Eigen::VectorXd& x);
double cond_homog(const PolyTuple& f, const Eigen::VectorXd& z);

// Certified bracket for sup of cond over the cube of radius R (R >= 1) by
// adaptive subdivision of the homogeneous cube boundary, driven by the
// 1-Lipschitz continuity of the reciprocal condition value.
GlobalCondResult cond_global(const PolyTuple& f, double R, double target_rel_err);
GlobalCondResult cond_global(const PolyTuple& f, double R, const GlobalCondOptions& opts);

// Interval for the 1-norm distance of the degree-scaled tuple to the set of
// tuples with a zero in the cube, derived from the cond_global bracket.
std::pair<double, double> dist_to_singular_bounds(const PolyTuple& f, double R,
                                                  const GlobalCondOptions& opts = {});

// {"point":[..],"residual_term":..,"inverse_term":..,"cond":..,"surjective":..}
std::string to_json(const ConditionReport& rep);
// {"R":..,"lower":..,"upper":..,"cells":..,"witness":[..]}
std::string to_json(const GlobalCondResult& res);

}  // namespace reachbound
