#pragma once

#include <Eigen/Dense>
#include <limits>

#include "reachbound/condition.hpp"
#include "reachbound/errors.hpp"
#include "reachbound/poly.hpp"

namespace reachbound {

// Upper bound on the higher-derivative regularity ratio, with the power
// iteration lower bound riding along for diagnostics. `singular` marks a
// rank-deficient Jacobian (value zero by convention).
struct GammaBounds {
  double upper = 0.0;
  double lower = 0.0;
  bool singular = false;
};

// |pinv(J) f(x)|_2 (the Newton step length). Throws NonSurjective.
double smale_beta(const PolyTuple& f, const Eigen::VectorXd& x);

GammaBounds smale_gamma_bounds(const PolyTuple& f, const Eigen::VectorXd& x);
double smale_gamma_upper(const PolyTuple& f, const Eigen::VectorXd& x);

enum class KRoute { Auto, Gamma, Cond };

// Certified upper bound on the curvature measure K(f, zeta, r); the minimum
// of the applicable route values. Throws NoRouteApplicable when neither
// route covers the requested radius.
double kantorovich_K_upper(const PolyTuple& f, const Eigen::VectorXd& zeta, double r,
                           KRoute route = KRoute::Auto);

// Residual scale below which a point counts as a zero of f.
double default_zero_tol(const PolyTuple& f, const Eigen::VectorXd& zeta);

// Gauss-Newton polish toward the zero set; returns the refined point.
// Throws NotAZero when the residual cannot be brought under `zero_tol`.
Eigen::VectorXd refine_zero(const PolyTuple& f, const Eigen::VectorXd& x, double zero_tol = -1.0,
                            int max_iters = 50);

// --- certified local lower bounds on the reach at a zero -----------------------

double reach_lb_gamma(const PolyTuple& f, const Eigen::VectorXd& zeta);

// Largest admissible radius r <= r_max with K(f,zeta,r) * r < 1, located by
// bisection (40 steps).
double reach_lb_kantorovich(const PolyTuple& f, const Eigen::VectorXd& zeta, double r_max,
                            KRoute route = KRoute::Auto);

double reach_lb_cond_local(const PolyTuple& f, const Eigen::VectorXd& zeta);

// Global bound from the cond_global bracket; BudgetExceeded degrades to zero
// with the partial bracket stored in *diag when provided.
double reach_lb_cond_global(const PolyTuple& f, double R, const GlobalCondOptions& opts = {},
                            GlobalCondResult* diag = nullptr);

// Worst-case bit-size bound on log2(1/reach_R) for integer tuples with
// coefficients of bit size tau. All logarithms are base 2.
double worstcase_bit_bound(long long n, long long q, long long D, long long tau, long long R);
double worstcase_bit_bound_log2(long long n, long long q, long long D, long long tau, long long R);

// All applicable bounds at a point (and over a cube when R > 0), each tagged
// by the route that produced it.
struct ReachBoundReport {
  Eigen::VectorXd zeta;
  double gamma_value = std::numeric_limits<double>::quiet_NaN();
  double gamma_lower = std::numeric_limits<double>::quiet_NaN();
  double beta_value = std::numeric_limits<double>::quiet_NaN();
  double alpha_value = std::numeric_limits<double>::quiet_NaN();
  double cond_value = std::numeric_limits<double>::quiet_NaN();
  double bound_gamma = std::numeric_limits<double>::quiet_NaN();
  double bound_kantorovich = std::numeric_limits<double>::quiet_NaN();
  double bound_cond_local = std::numeric_limits<double>::quiet_NaN();
  double bound_cond_global = std::numeric_limits<double>::quiet_NaN();
  double cond_R_lower = std::numeric_limits<double>::quiet_NaN();
  double cond_R_upper = std::numeric_limits<double>::quiet_NaN();
  double best = std::numeric_limits<double>::quiet_NaN();
};

struct ReachReportOptions {
  double r_max = 1e6;
  KRoute route = KRoute::Auto;
  double global_R = 0.0;  // > 0 adds the cube bound
  GlobalCondOptions global_opts{};
};

ReachBoundReport reach_report(const PolyTuple& f, const Eigen::VectorXd& zeta,
                              const ReachReportOptions& opts = {});
ReachBoundReport reach_report_global(const PolyTuple& f, double R,
                                     const GlobalCondOptions& opts = {});

// {"point":[..],"gamma":..,"beta":..,"alpha":..,"cond":..,
//  "bounds":{"gamma":..,"kantorovich":..,"cond_local":..,"cond_global":..},
//  "cond_R":{..},"best":..}
std::string to_json(const ReachBoundReport& rep);

}  // namespace reachbound
