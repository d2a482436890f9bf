#include "reachbound/random_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "reachbound/condition.hpp"
#include "reachbound/detail/json_util.hpp"
#include "reachbound/federer.hpp"
#include "reachbound/parallel.hpp"
#include "reachbound/reach.hpp"
#include "reachbound/rng.hpp"

namespace reachbound {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<MultiIndex> structural_support(int n, int d) {
  std::set<MultiIndex> s;
  MultiIndex zero(std::size_t(n), 0);
  // k = 0 block: constant and the linear monomials
  s.insert(zero);
  for (int l = 0; l < n; ++l) {
    MultiIndex e = zero;
    e[std::size_t(l)] = 1;
    s.insert(e);
  }
  for (int k = 0; k < n; ++k) {
    MultiIndex base = zero;
    base[std::size_t(k)] = d - 1;
    s.insert(base);  // l = 0
    for (int l = 0; l < n; ++l) {
      MultiIndex e = base;
      e[std::size_t(l)] += 1;
      s.insert(e);
    }
  }
  return {s.begin(), s.end()};
}

std::vector<MultiIndex> dense_support(int n, int d) {
  std::vector<MultiIndex> out;
  MultiIndex cur(std::size_t(n), 0);
  // graded-lex enumeration of all monomials of total degree <= d
  auto rec = [&](auto&& self, int k, int left) -> void {
    if (k == n) {
      out.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[std::size_t(k)] = e;
      self(self, k + 1, left - e);
      cur[std::size_t(k)] = 0;
    }
  };
  rec(rec, 0, d);
  std::sort(out.begin(), out.end(), graded_lex_less);
  return out;
}

std::vector<std::vector<MultiIndex>> resolve_supports(const RandomModelSpec& spec,
                                                      const Geometry& geom) {
  std::vector<std::vector<MultiIndex>> supports;
  if (spec.supports) {
    supports = *spec.supports;
    if (int(supports.size()) != geom.q)
      throw ConfigError("supports must list one set per polynomial");
    for (int i = 0; i < geom.q; ++i) {
      auto required = structural_support(geom.n, geom.degrees[std::size_t(i)]);
      for (const auto& r : required)
        if (std::find(supports[std::size_t(i)].begin(), supports[std::size_t(i)].end(), r) ==
            supports[std::size_t(i)].end())
          throw ConfigError("support of polynomial " + std::to_string(i) +
                            " misses a structural monomial");
    }
  } else {
    for (int i = 0; i < geom.q; ++i)
      supports.push_back(dense_support(geom.n, geom.degrees[std::size_t(i)]));
  }
  return supports;
}

ModelConstants model_constants(const RandomModelSpec& spec, const Geometry& geom) {
  const auto supports = resolve_supports(spec, geom);
  std::size_t mmax = 0;
  for (const auto& s : supports) mmax = std::max(mmax, s.size());
  ModelConstants c;
  switch (spec.kind) {
    case ModelKind::UniformContinuous:
      c.L = double(mmax);
      c.rho = 0.5;
      break;
    case ModelKind::Gaussian: {
      const bool standard = spec.mean_range == 0.0 && spec.sigma0 == 1.0 && spec.sigma1 == 1.0;
      if (standard) {
        c.L = std::sqrt(2.0) * double(mmax);
        c.rho = 1.0 / std::sqrt(2.0 * M_PI);
      } else {
        c.L = std::max(spec.mean_range, 2.0 * spec.sigma1) * double(mmax);
        c.rho = 1.0 / (std::sqrt(2.0 * M_PI) * spec.sigma0);
      }
      break;
    }
    case ModelKind::BitUniform: {
      const double states = std::exp2(double(spec.tau + 1)) + 1.0;
      c.w = 1.0 / states;
      c.u = std::log((1.0 + std::exp2(double(spec.tau + 1))) * c.w);
      break;
    }
    case ModelKind::BitGeneral: {
      if (spec.bit_table.empty()) throw ConfigError("bit_general requires a weight table");
      double wmin = kInf, total = 0.0;
      for (const auto& [v, prob] : spec.bit_table) {
        if (prob < 0.0 || std::abs(double(v)) > std::exp2(double(spec.tau)))
          throw ConfigError("bit_general table entry out of range");
        wmin = std::min(wmin, prob);
        total += prob;
      }
      if (std::abs(total - 1.0) > 1e-9) throw ConfigError("bit_general weights must sum to 1");
      c.w = wmin;
      c.u = std::log((1.0 + std::exp2(double(spec.tau + 1))) * c.w);
      break;
    }
  }
  return c;
}

PolyTuple sample_tuple(const RandomModelSpec& spec, const Geometry& geom, std::uint64_t seed) {
  const auto supports = resolve_supports(spec, geom);
  Rng rng(seed);
  std::vector<Polynomial> polys;
  bool integer = spec.kind == ModelKind::BitUniform || spec.kind == ModelKind::BitGeneral;
  for (int i = 0; i < geom.q; ++i) {
    std::vector<Term> terms;
    for (const auto& e : supports[std::size_t(i)]) {
      double coef = 0.0;
      switch (spec.kind) {
        case ModelKind::UniformContinuous:
          coef = rng.uniform(-1.0, 1.0);
          break;
        case ModelKind::Gaussian: {
          const double mu = spec.mean_range > 0.0 ? rng.uniform(-spec.mean_range, spec.mean_range)
                                                  : 0.0;
          const double sigma = spec.sigma1 > spec.sigma0 ? rng.uniform(spec.sigma0, spec.sigma1)
                                                         : spec.sigma0;
          coef = mu + sigma * rng.normal();
          break;
        }
        case ModelKind::BitUniform: {
          const long long bound = 1LL << spec.tau;
          coef = double(rng.uniform_int(-bound, bound));
          break;
        }
        case ModelKind::BitGeneral: {
          double uphill = rng.uniform();
          double acc = 0.0;
          long long chosen = spec.bit_table.back().first;
          for (const auto& [v, prob] : spec.bit_table) {
            acc += prob;
            if (uphill < acc) {
              chosen = v;
              break;
            }
          }
          coef = double(chosen);
          break;
        }
      }
      if (coef != 0.0) terms.push_back(Term{e, coef});
    }
    polys.emplace_back(geom.n, geom.degrees[std::size_t(i)], std::move(terms),
                       supports[std::size_t(i)]);
  }
  return PolyTuple(geom.n, std::move(polys), integer);
}

// --- tail bounds ----------------------------------------------------------

TailParams tail_params(const RandomModelSpec& spec, const Geometry& geom) {
  const ModelConstants c = model_constants(spec, geom);
  const auto supports = resolve_supports(spec, geom);
  std::size_t mmax = 0;
  for (const auto& s : supports) mmax = std::max(mmax, s.size());
  TailParams p;
  p.n = geom.n;
  p.q = geom.q;
  p.D = geom.max_degree();
  p.R = geom.R;
  p.p = spec.p;
  p.L = c.L;
  p.rho = c.rho;
  p.Mmax = double(mmax);
  p.u = c.u;
  p.tau = spec.tau;
  p.hx = geom.x.size() ? std::max(1.0, geom.x.lpNorm<Eigen::Infinity>()) : 1.0;
  return p;
}

TailValue tail_bound_cont(TailKind kind, const TailParams& pr, double t) {
  TailValue v;
  const double n = pr.n, q = pr.q, D = pr.D;
  switch (kind) {
    case TailKind::CondGlobal: {
      if (t < std::exp(n + 1.0)) return v;
      const double expo = (pr.p + 2.0) / (2.0 * pr.p) * n + q / pr.p + 1.0;
      v.raw = 8.0 * pr.R * std::pow(n + 1.0, expo) * std::pow(D, q + 2.0 * n) *
              std::pow(4.0 * pr.L * pr.rho, n + q) * std::pow(std::log(t), (n + q) / pr.p) / t;
      break;
    }
    case TailKind::CondLocal: {
      if (t < std::exp(n + 1.0)) return v;
      const double expo = (pr.p + 2.0) / (2.0 * pr.p) * n + q / pr.p;
      v.raw = 4.0 * pr.hx * std::pow(n + 1.0, expo) * std::pow(D, q + 2.0 * n) *
              std::pow(4.0 * pr.L * pr.rho, n + q) * std::pow(std::log(t), (n + q) / pr.p) /
              std::pow(t, n + 1.0);
      break;
    }
    case TailKind::Reach: {
      if (t < 2.0 * (n + 1.0)) return v;
      v.raw = 8.0 * pr.R * std::pow(n + 1.0, n / 2.0 + 1.0) * std::pow(D, q + 2.0 * n) *
              std::pow(4.0 * pr.Mmax, n + q) * std::pow(t, (n + q) / pr.p) * std::exp2(-t);
      break;
    }
  }
  v.in_range = true;
  v.clamped = std::min(v.raw, 1.0);
  return v;
}

TailValue tail_bound_cont_min_p(TailKind kind, const TailParams& pr, double t) {
  TailValue best = tail_bound_cont(kind, pr, t);
  if (!best.in_range) return best;
  for (double p : {1.0, 2.0, 4.0, 8.0, std::max(1.0, std::log(t))}) {
    TailParams alt = pr;
    alt.p = p;
    const TailValue cand = tail_bound_cont(kind, alt, t);
    if (cand.raw < best.raw) best = cand;
  }
  return best;
}

TailValue tail_bound_disc(TailKind kind, const TailParams& pr, double t) {
  TailValue v;
  const double n = pr.n, q = pr.q, D = pr.D;
  const double common = std::pow(std::sqrt(2.0) * pr.Mmax, q + n) * std::pow(D, q + 2.0 * n) *
                        std::exp(pr.u);
  switch (kind) {
    case TailKind::CondGlobal: {
      if (t < n || t > q * (n + 1.0) * pr.Mmax * std::exp2(double(pr.tau - 2))) return v;
      v.raw = 20.0 * pr.R * std::pow(n, n / 2.0 + 1.0) * common / t;
      break;
    }
    case TailKind::CondLocal: {
      if (!(t > 0.0) || t > q * (n + 1.0) * pr.Mmax * std::exp2(double(pr.tau - 1))) return v;
      v.raw = 6.0 * pr.hx * std::pow(n, n / 2.0) * common / std::pow(t, n + 1.0);
      break;
    }
    case TailKind::Reach: {
      const double t_lo = std::max(std::log2(D), std::log2(n));
      const double t_hi = std::log2(q * (n + 1.0) * pr.Mmax) + double(pr.tau) - 1.0;
      if (t < t_lo || t > t_hi) return v;
      v.raw = 20.0 * pr.R * std::pow(n, n / 2.0 + 1.0) * common * std::exp2(-t);
      break;
    }
  }
  v.in_range = true;
  v.clamped = std::min(v.raw, 1.0);
  return v;
}

// --- Monte Carlo -----------------------------------------------------------

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                          double z) {
  if (trials == 0) return {0.0, 1.0};
  const double nn = double(trials);
  const double phat = double(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (phat + z2 / (2.0 * nn)) / denom;
  const double rad = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  const double lo = successes == 0 ? 0.0 : std::max(0.0, center - rad);
  const double hi = successes == trials ? 1.0 : std::min(1.0, center + rad);
  return {lo, hi};
}

double TailCurve::empirical(std::size_t i) const {
  const std::uint64_t v = valid_trials();
  if (v == 0) return 0.0;
  return double(points[i].exceed + points[i].undecided) / double(v);
}

double TailCurve::wilson_lo(std::size_t i) const {
  return wilson_interval(points[i].exceed + points[i].undecided, valid_trials(), wilson_z).first;
}

double TailCurve::wilson_hi(std::size_t i) const {
  return wilson_interval(points[i].exceed + points[i].undecided, valid_trials(), wilson_z).second;
}

bool TailCurve::sound() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].theoretical.in_range) continue;
    const double bound = std::min(points[i].theoretical.raw, points[i].theoretical_min_p);
    if (wilson_lo(i) > bound) return false;
  }
  return true;
}

namespace {

struct TrialOutcome {
  bool excluded = false;
  bool empty_certified = false;
  double cond_lower = 0.0;
  double cond_upper = kInf;
  double cond_value = 0.0;   // CondLocal statistic
  double reach_lb = 0.0;     // certified lower bound on reach_R
  double reach_ub = kInf;    // pairwise quotient estimate (upper up to sampling)
};

// decide_threshold is 2^{t_min} for the reach statistic and t_min otherwise;
// once the certified bracket clears it, every grid point is decided.
TrialOutcome run_trial(const RandomModelSpec& spec, const Geometry& geom, Statistic statistic,
                       double decide_threshold, std::uint64_t trial_seed, const McOptions& opts) {
  TrialOutcome out;
  try {
    const PolyTuple f = sample_tuple(spec, geom, trial_seed);
    if (one_norm(f) == 0.0) {
      out.excluded = true;
      return out;
    }

    if (statistic == Statistic::CondLocal) {
      const Eigen::VectorXd x =
          geom.x.size() ? geom.x : Eigen::VectorXd::Zero(geom.n);
      out.cond_value = cond_local(f, x).value;
      return out;
    }

    GlobalCondOptions copts;
    copts.target_rel_err = opts.cond_rel_err;
    copts.cell_budget = opts.cond_budget;
    copts.cond_cap = opts.cond_cap;
    copts.stop_upper_below = decide_threshold;
    GlobalCondResult res;
    try {
      res = cond_global(f, geom.R, copts);
    } catch (const BudgetExceeded& e) {
      res = e.partial;
    }
    out.cond_lower = res.lower;
    out.cond_upper = res.upper;
    if (statistic == Statistic::CondR) return out;

    const double denom = std::max(double(geom.max_degree() - 2), out.cond_upper);
    out.reach_lb = std::isfinite(denom) ? 1.0 / std::max(denom, 1e-300) : 0.0;
    if (out.reach_lb * decide_threshold > 1.0) return out;  // non-exceedance at every t

    if (variety_emptiness(f, geom.R, opts.empty_budget) == Emptiness::Empty) {
      out.empty_certified = true;  // empty zero set: reach_R is infinite
      return out;
    }
    try {
      SampleOptions sopts;
      sopts.workers = 1;  // parallelism lives at the trial level
      const VarietySample s =
          sample_variety(f, geom.R, opts.federer_points, derive_seed(trial_seed, 0x5a5a), sopts);
      const double min_sep = opts.federer_min_sep > 0 ? opts.federer_min_sep : 1e-5 * geom.R;
      if (s.size() >= 2) out.reach_ub = estimate_reach(s, min_sep, 1).estimate;
    } catch (const Error&) {
      // no usable sample: stays undecided wherever the lower bound cannot decide
    }
    return out;
  } catch (const Error&) {
    out.excluded = true;
    return out;
  }
}

}  // namespace

TailCurve mc_tail_experiment(const RandomModelSpec& spec, const Geometry& geom,
                             Statistic statistic, const std::vector<double>& t_grid,
                             std::uint64_t trials, std::uint64_t seed, const McOptions& opts) {
  if (trials == 0) throw PreconditionViolated("tail experiments need at least one trial");
  if (t_grid.empty()) throw PreconditionViolated("t grid must not be empty");

  TailCurve curve;
  curve.statistic = statistic;
  curve.trials = trials;

  const double t_min = *std::min_element(t_grid.begin(), t_grid.end());
  // threshold the bracket must clear to decide every grid point
  const double decide_threshold =
      statistic == Statistic::LogInvReachR ? std::exp2(t_min) : t_min;

  std::vector<TrialOutcome> outcomes(trials);
  parallel_chunks(trials, 8, opts.workers, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k)
      outcomes[k] = run_trial(spec, geom, statistic, decide_threshold, derive_seed(seed, k), opts);
  });

  const TailParams params = tail_params(spec, geom);
  const bool cont =
      spec.kind == ModelKind::UniformContinuous || spec.kind == ModelKind::Gaussian;
  const TailKind kind = statistic == Statistic::CondR      ? TailKind::CondGlobal
                        : statistic == Statistic::CondLocal ? TailKind::CondLocal
                                                            : TailKind::Reach;

  for (double t : t_grid) {
    TailPoint pt;
    pt.t = t;
    for (const auto& o : outcomes) {
      if (o.excluded) continue;
      if (statistic == Statistic::CondLocal) {
        if (o.cond_value >= t) ++pt.exceed;
      } else if (statistic == Statistic::CondR) {
        if (o.cond_lower >= t)
          ++pt.exceed;
        else if (!(o.cond_upper < t))
          ++pt.undecided;
      } else {
        const double eps = std::exp2(-t);
        if (o.empty_certified || o.reach_lb > eps) continue;  // certified non-exceedance
        if (o.reach_ub <= eps)
          ++pt.exceed;
        else
          ++pt.undecided;
      }
    }
    pt.theoretical = cont ? tail_bound_cont(kind, params, t) : tail_bound_disc(kind, params, t);
    pt.theoretical_min_p =
        cont ? tail_bound_cont_min_p(kind, params, t).raw : pt.theoretical.raw;
    curve.points.push_back(pt);
  }
  for (const auto& o : outcomes)
    if (o.excluded) ++curve.excluded;
  return curve;
}

void export_curve_csv(const TailCurve& curve, std::ostream& os) {
  os << "t,empirical,wilson_lo,wilson_hi,theoretical,undecided\n";
  os.precision(17);
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    os << p.t << "," << curve.empirical(i) << "," << curve.wilson_lo(i) << ","
       << curve.wilson_hi(i) << "," << std::min(p.theoretical.raw, p.theoretical_min_p) << ","
       << p.undecided << "\n";
  }
}

std::string to_json(const TailCurve& curve) {
  nlohmann::ordered_json j;
  j["statistic"] = to_string(curve.statistic);
  j["trials"] = curve.trials;
  j["excluded"] = curve.excluded;
  j["sound"] = curve.sound();
  auto pts = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    nlohmann::ordered_json jp;
    jp["t"] = p.t;
    jp["empirical"] = curve.empirical(i);
    jp["wilson_lo"] = curve.wilson_lo(i);
    jp["wilson_hi"] = curve.wilson_hi(i);
    jp["theoretical"] = detail::json_num(std::min(p.theoretical.raw, p.theoretical_min_p));
    jp["in_range"] = p.theoretical.in_range;
    jp["exceed"] = p.exceed;
    jp["undecided"] = p.undecided;
    pts.push_back(std::move(jp));
  }
  j["points"] = std::move(pts);
  return j.dump();
}

const char* to_string(Statistic s) {
  switch (s) {
    case Statistic::CondR:
      return "cond_R";
    case Statistic::CondLocal:
      return "cond_local";
    case Statistic::LogInvReachR:
      return "log_inv_reach_R";
  }
  return "?";
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::UniformContinuous:
      return "uniform_continuous";
    case ModelKind::Gaussian:
      return "gaussian";
    case ModelKind::BitUniform:
      return "bit_uniform";
    case ModelKind::BitGeneral:
      return "bit_general";
  }
  return "?";
}

}  // namespace reachbound
