#include "reachbound/reach.hpp"

#include <algorithm>
#include <cmath>

#include "reachbound/detail/json_util.hpp"
#include "reachbound/norms.hpp"

namespace reachbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double hinf(const Eigen::VectorXd& x) { return std::max(1.0, x.lpNorm<Eigen::Infinity>()); }

double factorial(int k) {
  double r = 1.0;
  for (int j = 2; j <= k; ++j) r *= double(j);
  return r;
}

}  // namespace

double smale_beta(const PolyTuple& f, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd J = jacobian(f, x);
  const Eigen::MatrixXd pinv = pseudoinverse(J);
  return (pinv * evaluate(f, x)).norm();
}

GammaBounds smale_gamma_bounds(const PolyTuple& f, const Eigen::VectorXd& x) {
  GammaBounds g;
  const Eigen::MatrixXd J = jacobian(f, x);
  const PinvResult pr = pseudoinverse_info(J);
  if (!pr.surjective) {
    g.singular = true;
    return g;
  }
  for (int ell = 2; ell <= f.max_degree(); ++ell) {
    const DerivativeTensor T = derivative_tensor(f, x, ell);
    const OperatorNormBounds nb = tensor_22_norm_bounds(pr.pinv, T, 1.0 / factorial(ell));
    const double e = 1.0 / double(ell - 1);
    g.upper = std::max(g.upper, std::pow(nb.upper, e));
    g.lower = std::max(g.lower, std::pow(nb.lower, e));
  }
  return g;
}

double smale_gamma_upper(const PolyTuple& f, const Eigen::VectorXd& x) {
  return smale_gamma_bounds(f, x).upper;
}

double default_zero_tol(const PolyTuple& f, const Eigen::VectorXd& zeta) {
  return 1e-9 * (1.0 + one_norm(f) * std::pow(hinf(zeta), double(f.max_degree())));
}

Eigen::VectorXd refine_zero(const PolyTuple& f, const Eigen::VectorXd& x, double zero_tol,
                            int max_iters) {
  if (zero_tol < 0) zero_tol = default_zero_tol(f, x);
  Eigen::VectorXd z = x;
  double res = evaluate(f, z).lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iters && res > zero_tol; ++it) {
    const Eigen::MatrixXd J = jacobian(f, z);
    const PinvResult pr = pseudoinverse_info(J);
    if (!pr.surjective) break;
    const Eigen::VectorXd step = pr.pinv * evaluate(f, z);
    double lambda = 1.0;
    bool moved = false;
    for (int damp = 0; damp < 20; ++damp) {
      const Eigen::VectorXd cand = z - lambda * step;
      const double cres = evaluate(f, cand).lpNorm<Eigen::Infinity>();
      if (cres < res) {
        z = cand;
        res = cres;
        moved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!moved) break;
  }
  if (res > zero_tol) throw NotAZero(res);
  return z;
}

namespace {

struct KRoutes {
  double gamma_upper = 0.0;
  bool singular = false;
  double cond = kInf;
  double hz = 1.0;
  int D = 0;

  // K upper along the regularity-ratio route; requires gamma * r < 1
  bool gamma_ok(double r) const { return !singular && gamma_upper * r < 1.0; }
  double k_gamma(double r) const {
    if (gamma_upper == 0.0) return 0.0;
    const double d = 1.0 - gamma_upper * r;
    return 2.0 * gamma_upper / (d * d * d);
  }

  // K upper along the condition route; the window r/hz < 1/(D-2) needs D > 2
  bool cond_ok(double r) const {
    if (!std::isfinite(cond)) return false;
    if (D <= 2) return false;
    return r / hz < 1.0 / double(D - 2);
  }
  double k_cond(double r) const {
    const double ratio = (hz + r) / hz;
    return cond / hz * std::pow(ratio, double(std::max(D - 2, 0)));
  }

  double k_upper(double r, KRoute route) const {
    double best = kInf;
    if (route != KRoute::Cond && gamma_ok(r)) best = std::min(best, k_gamma(r));
    if (route != KRoute::Gamma && cond_ok(r)) best = std::min(best, k_cond(r));
    return best;
  }
};

KRoutes build_k_routes(const PolyTuple& f, const Eigen::VectorXd& zeta, KRoute route) {
  KRoutes kr;
  kr.hz = hinf(zeta);
  kr.D = f.max_degree();
  if (route != KRoute::Cond) {
    const GammaBounds g = smale_gamma_bounds(f, zeta);
    kr.gamma_upper = g.upper;
    kr.singular = g.singular;
  }
  if (route != KRoute::Gamma) kr.cond = cond_local(f, zeta).value;
  return kr;
}

}  // namespace

double kantorovich_K_upper(const PolyTuple& f, const Eigen::VectorXd& zeta, double r,
                           KRoute route) {
  const KRoutes kr = build_k_routes(f, zeta, route);
  const double k = kr.k_upper(r, route);
  if (!std::isfinite(k)) throw NoRouteApplicable("no K route covers radius " + std::to_string(r));
  return k;
}

double reach_lb_gamma(const PolyTuple& f, const Eigen::VectorXd& zeta) {
  const Eigen::VectorXd z = refine_zero(f, zeta);
  const GammaBounds g = smale_gamma_bounds(f, z);
  if (g.singular) {
    const PinvResult pr = pseudoinverse_info(jacobian(f, z));
    throw NonSurjective(pr.sigma_min);
  }
  return g.upper > 0.0 ? 1.0 / (5.0 * g.upper) : kInf;
}

double reach_lb_kantorovich(const PolyTuple& f, const Eigen::VectorXd& zeta, double r_max,
                            KRoute route) {
  if (!(r_max > 0.0)) throw PreconditionViolated("r_max must be positive");
  const Eigen::VectorXd z = refine_zero(f, zeta);
  {
    const PinvResult pr = pseudoinverse_info(jacobian(f, z));
    if (!pr.surjective) throw NonSurjective(pr.sigma_min);
  }
  const KRoutes kr = build_k_routes(f, z, route);
  auto admissible = [&](double r) {
    const double k = kr.k_upper(r, route);
    return std::isfinite(k) && k * r < 1.0;
  };
  if (admissible(r_max)) return r_max;
  double lo = 0.0, hi = r_max;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double reach_lb_cond_local(const PolyTuple& f, const Eigen::VectorXd& zeta) {
  const Eigen::VectorXd z = refine_zero(f, zeta);
  const ConditionReport rep = cond_local(f, z);
  const double denom = std::max(double(f.max_degree() - 2), rep.value);
  return std::isfinite(denom) ? hinf(z) / denom : 0.0;
}

double reach_lb_cond_global(const PolyTuple& f, double R, const GlobalCondOptions& opts,
                            GlobalCondResult* diag) {
  GlobalCondResult res;
  try {
    res = cond_global(f, R, opts);
  } catch (const BudgetExceeded& e) {
    if (diag) *diag = e.partial;
    return 0.0;
  }
  if (diag) *diag = res;
  const double denom = std::max(double(f.max_degree() - 2), res.upper);
  if (!std::isfinite(denom)) return 0.0;
  return 1.0 / std::max(denom, std::numeric_limits<double>::min());
}

double worstcase_bit_bound_log2(long long n, long long q, long long D, long long tau,
                                long long R) {
  const double E = double(1 + q + 2 * n);
  const double S = 5.0 + double(tau) + std::log2(double(R)) + 6.0 * double(n) * std::log2(double(D));
  const double log_main = std::log2(4.0 * double(n)) + E * std::log2(2.0 * double(D)) + std::log2(S);
  const double tail = 2.0 * std::log2(double(D)) + double(tau);
  // log2(main + tail) with the tail entering as a correction
  return log_main + std::log2(1.0 + tail / std::exp2(std::min(log_main, 1000.0)));
}

double worstcase_bit_bound(long long n, long long q, long long D, long long tau, long long R) {
  if (n < 1 || q < 1 || D < 1 || tau < 0 || R < 1)
    throw PreconditionViolated("worst-case bound needs n,q,D,R >= 1 and tau >= 0");
  const double E = double(1 + q + 2 * n);
  const double S = 5.0 + double(tau) + std::log2(double(R)) + 6.0 * double(n) * std::log2(double(D));
  const double v = 4.0 * double(n) * std::pow(2.0 * double(D), E) * S +
                   2.0 * std::log2(double(D)) + double(tau);
  if (std::isfinite(v)) return v;
  // overflow: recompute through the exact log2 form
  return std::exp2(worstcase_bit_bound_log2(n, q, D, tau, R));
}

ReachBoundReport reach_report(const PolyTuple& f, const Eigen::VectorXd& zeta,
                              const ReachReportOptions& opts) {
  ReachBoundReport rep;
  const Eigen::VectorXd z = refine_zero(f, zeta);
  rep.zeta = z;

  const GammaBounds g = smale_gamma_bounds(f, z);
  if (g.singular) {
    const PinvResult pr = pseudoinverse_info(jacobian(f, z));
    throw NonSurjective(pr.sigma_min);
  }
  rep.gamma_value = g.upper;
  rep.gamma_lower = g.lower;
  rep.beta_value = smale_beta(f, z);
  rep.alpha_value = rep.beta_value * rep.gamma_value;
  rep.bound_gamma = g.upper > 0.0 ? 1.0 / (5.0 * g.upper) : kInf;

  const ConditionReport cr = cond_local(f, z);
  rep.cond_value = cr.value;
  const double denom = std::max(double(f.max_degree() - 2), cr.value);
  rep.bound_cond_local = std::isfinite(denom) ? hinf(z) / denom : 0.0;

  try {
    rep.bound_kantorovich = reach_lb_kantorovich(f, z, opts.r_max, opts.route);
  } catch (const NoRouteApplicable&) {
    // leave unset
  }

  if (opts.global_R > 0.0) {
    GlobalCondResult diag;
    rep.bound_cond_global = reach_lb_cond_global(f, opts.global_R, opts.global_opts, &diag);
    rep.cond_R_lower = diag.lower;
    rep.cond_R_upper = diag.upper;
  }

  double best = -kInf;
  for (double b : {rep.bound_gamma, rep.bound_kantorovich, rep.bound_cond_local,
                   rep.bound_cond_global})
    if (!std::isnan(b)) best = std::max(best, b);
  rep.best = best;
  return rep;
}

ReachBoundReport reach_report_global(const PolyTuple& f, double R,
                                     const GlobalCondOptions& opts) {
  ReachBoundReport rep;
  GlobalCondResult diag;
  rep.bound_cond_global = reach_lb_cond_global(f, R, opts, &diag);
  rep.cond_R_lower = diag.lower;
  rep.cond_R_upper = diag.upper;
  rep.best = rep.bound_cond_global;
  return rep;
}

std::string to_json(const ReachBoundReport& rep) {
  using detail::json_num;
  nlohmann::ordered_json j;
  if (rep.zeta.size()) j["point"] = detail::json_vec(rep.zeta);
  j["gamma"] = json_num(rep.gamma_value);
  j["gamma_lower"] = json_num(rep.gamma_lower);
  j["beta"] = json_num(rep.beta_value);
  j["alpha"] = json_num(rep.alpha_value);
  j["cond"] = json_num(rep.cond_value);
  nlohmann::ordered_json bounds;
  bounds["gamma"] = json_num(rep.bound_gamma);
  bounds["kantorovich"] = json_num(rep.bound_kantorovich);
  bounds["cond_local"] = json_num(rep.bound_cond_local);
  bounds["cond_global"] = json_num(rep.bound_cond_global);
  j["bounds"] = std::move(bounds);
  if (!std::isnan(rep.cond_R_lower) || !std::isnan(rep.cond_R_upper)) {
    nlohmann::ordered_json cr;
    cr["lower"] = json_num(rep.cond_R_lower);
    cr["upper"] = json_num(rep.cond_R_upper);
    j["cond_R"] = std::move(cr);
  }
  j["best"] = json_num(rep.best);
  return j.dump();
}

}  // namespace reachbound
