#include "reachbound/federer.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

#include "reachbound/detail/json_util.hpp"
#include "reachbound/norms.hpp"
#include "reachbound/parallel.hpp"
#include "reachbound/rng.hpp"

namespace reachbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// --- univariate helpers -------------------------------------------------------

double poly_eval(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
  return v;
}

double poly_eval_deriv(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) v = v * t + double(k) * c[k];
  return v;
}

// Coefficients of p(mid + half * u) in u; keeps companion roots well scaled.
std::vector<double> shift_scale(const std::vector<double>& c, double mid, double half) {
  const std::size_t d = c.size();
  // Horner in the substituted variable
  std::vector<double> acc{0.0};
  for (std::size_t k = d; k-- > 0;) {
    // acc <- acc * (mid + half*u) + c_k
    std::vector<double> next(acc.size() + 1, 0.0);
    for (std::size_t j = 0; j < acc.size(); ++j) {
      next[j] += acc[j] * mid;
      next[j + 1] += acc[j] * half;
    }
    next[0] += c[k];
    acc = std::move(next);
  }
  acc.resize(d, 0.0);
  return acc;
}

// Real roots of sum c_k t^k inside [lo, hi], found on the companion matrix of
// the affinely rescaled polynomial and polished by Newton.
std::vector<double> real_roots_in_interval(std::vector<double> c, double lo, double hi) {
  std::vector<double> roots;
  if (!(hi > lo)) return roots;
  double maxc = 0.0;
  for (double v : c) maxc = std::max(maxc, std::abs(v));
  if (maxc == 0.0) return roots;  // identically zero on the line: no isolated roots
  while (c.size() > 1 && std::abs(c.back()) <= 1e-13 * maxc) c.pop_back();
  const int deg = int(c.size()) - 1;
  if (deg <= 0) return roots;

  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  std::vector<double> s = shift_scale(c, mid, half);
  double maxs = 0.0;
  for (double v : s) maxs = std::max(maxs, std::abs(v));
  while (s.size() > 1 && std::abs(s.back()) <= 1e-12 * maxs) s.pop_back();
  const int sd = int(s.size()) - 1;
  if (sd <= 0) return roots;

  std::vector<double> us;
  if (sd == 1) {
    us.push_back(-s[0] / s[1]);
  } else {
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(sd, sd);
    for (int k = 0; k < sd; ++k) comp(0, k) = -s[std::size_t(sd - 1 - k)] / s[std::size_t(sd)];
    for (int k = 1; k < sd; ++k) comp(k, k - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
    for (int k = 0; k < sd; ++k) {
      const auto ev = es.eigenvalues()(k);
      if (std::abs(ev.imag()) <= 1e-6 * (1.0 + std::abs(ev.real()))) us.push_back(ev.real());
    }
  }

  for (double u : us) {
    if (u < -1.2 || u > 1.2) continue;
    double t = mid + half * u;
    for (int it = 0; it < 30; ++it) {  // Newton polish on the original scale
      const double p = poly_eval(c, t);
      const double dp = poly_eval_deriv(c, t);
      if (dp == 0.0) break;
      const double step = p / dp;
      t -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(t))) break;
    }
    if (t < lo - 1e-9 || t > hi + 1e-9) continue;
    t = std::clamp(t, lo, hi);
    bool dup = false;
    for (double r : roots)
      if (std::abs(r - t) <= 1e-10 * (1.0 + std::abs(t))) dup = true;
    if (!dup) roots.push_back(t);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

// Coefficients in t of p(a + b t).
std::vector<double> restrict_to_line(const Polynomial& p, const Eigen::VectorXd& a,
                                     const Eigen::VectorXd& b) {
  std::vector<double> out(std::size_t(p.degree()) + 1, 0.0);
  std::vector<double> mono, next;
  for (const auto& term : p.terms()) {
    mono.assign(1, term.coef);
    for (int k = 0; k < p.n(); ++k) {
      for (int e = 0; e < term.exp[std::size_t(k)]; ++e) {
        next.assign(mono.size() + 1, 0.0);
        for (std::size_t j = 0; j < mono.size(); ++j) {
          next[j] += mono[j] * a[k];
          next[j + 1] += mono[j] * b[k];
        }
        mono.swap(next);
      }
    }
    for (std::size_t j = 0; j < mono.size(); ++j) out[j] += mono[j];
  }
  return out;
}

// Parameter window for which every coordinate of a + b t stays inside the cube.
bool line_box_window(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double R, double& lo,
                     double& hi) {
  lo = -kInf;
  hi = kInf;
  for (int k = 0; k < int(a.size()); ++k) {
    if (std::abs(b[k]) < 1e-14) {
      if (std::abs(a[k]) > R) return false;
      continue;
    }
    double t0 = (-R - a[k]) / b[k];
    double t1 = (R - a[k]) / b[k];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  return hi > lo;
}

struct ProbeResult {
  std::vector<Eigen::VectorXd> points;
  std::uint64_t starts = 0;
};

// Random orthonormal n x q frame (rotation invariant via Gaussian + QR).
Eigen::MatrixXd random_frame(Rng& rng, int n, int q) {
  Eigen::MatrixXd G(n, q);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, q);
  return Q;
}

ProbeResult run_probe(const PolyTuple& f, double R, std::uint64_t probe_seed, double zero_tol,
                      int newton_iters) {
  ProbeResult res;
  Rng rng(probe_seed);
  const int n = f.n(), q = f.q();
  Eigen::VectorXd a(n);
  for (int k = 0; k < n; ++k) a[k] = rng.uniform(-R, R);

  if (q == 1) {
    Eigen::VectorXd b = random_frame(rng, n, 1).col(0);
    double lo, hi;
    if (!line_box_window(a, b, R, lo, hi)) return res;
    const std::vector<double> c = restrict_to_line(f.poly(0), a, b);
    res.starts = 1;
    for (double t : real_roots_in_interval(c, lo, hi)) res.points.push_back(a + t * b);
    return res;
  }

  // slice by an affine q-plane and run damped Newton on the square system
  Eigen::MatrixXd B = random_frame(rng, n, q);
  const double T = a.norm() + std::sqrt(double(n)) * R;
  const int grid = q == 2 ? 5 : 3;
  std::vector<int> idx(std::size_t(q), 0);
  Eigen::VectorXd t(q), x(n);
  for (;;) {
    for (int j = 0; j < q; ++j)
      t[j] = -T + 2.0 * T * (double(idx[std::size_t(j)]) + 0.5) / double(grid);
    ++res.starts;
    // Newton on g(t) = f(a + B t)
    Eigen::VectorXd tc = t;
    bool ok = false;
    for (int it = 0; it < newton_iters; ++it) {
      x = a + B * tc;
      const Eigen::VectorXd g = evaluate(f, x);
      if (g.lpNorm<Eigen::Infinity>() <= zero_tol) {
        ok = true;
        break;
      }
      const Eigen::MatrixXd Jg = jacobian(f, x) * B;
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(Jg);
      if (!lu.isInvertible()) break;
      const Eigen::VectorXd step = lu.solve(g);
      double lambda = 1.0;
      bool moved = false;
      const double gn = g.norm();
      for (int damp = 0; damp < 12; ++damp) {
        const Eigen::VectorXd cand = tc - lambda * step;
        if (evaluate(f, a + B * cand).norm() < gn) {
          tc = cand;
          moved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!moved) break;
    }
    if (ok) res.points.push_back(a + B * tc);

    int j = 0;
    while (j < q && ++idx[std::size_t(j)] == grid) idx[std::size_t(j++)] = 0;
    if (j == q) break;
  }
  return res;
}

}  // namespace

VarietySample sample_variety(const PolyTuple& f, double R, std::size_t target_count,
                             std::uint64_t seed, const SampleOptions& opts) {
  if (f.q() > f.n()) throw PreconditionViolated("sampling needs q <= n");
  if (!(R > 0.0)) throw PreconditionViolated("cube radius must be positive");
  if (target_count == 0) throw PreconditionViolated("target count must be positive");

  VarietySample sample;
  sample.R = R;
  sample.zero_tol = opts.zero_tol > 0
                        ? opts.zero_tol
                        : 1e-9 * (1.0 + one_norm(f) * std::pow(std::max(1.0, R),
                                                               double(f.max_degree())));

  const std::uint64_t budget =
      opts.probe_budget > 0 ? opts.probe_budget : std::max<std::uint64_t>(64, 16 * target_count);
  constexpr std::uint64_t kWave = 16;  // fixed so results ignore the worker count

  std::uint64_t probe = 0;
  int stale_waves = 0;
  while (probe < budget && sample.size() < target_count) {
    const std::uint64_t wave = std::min<std::uint64_t>(kWave, budget - probe);
    std::vector<ProbeResult> results(wave);
    parallel_chunks(wave, 2, opts.workers, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t w = b; w < e; ++w)
        results[w] = run_probe(f, R, derive_seed(seed, probe + w), sample.zero_tol,
                               opts.newton_iters);
    });
    const std::size_t before = sample.size();
    for (std::size_t w = 0; w < wave; ++w) {
      sample.stats.probes++;
      sample.stats.starts += results[w].starts;
      for (const auto& x : results[w].points) {
        if (sample.size() >= target_count) break;
        if (x.lpNorm<Eigen::Infinity>() > R + 1e-12) {
          sample.stats.rejects++;
          continue;
        }
        const double res = evaluate(f, x).lpNorm<Eigen::Infinity>();
        if (res > sample.zero_tol) {
          sample.stats.rejects++;
          continue;
        }
        bool dup = false;
        for (const auto& p : sample.points)
          if ((p - x).norm() < opts.dedup_dist) {
            dup = true;
            break;
          }
        if (dup) {
          sample.stats.dedups++;
          continue;
        }
        const Eigen::MatrixXd J = jacobian(f, x);
        const PinvResult pr = pseudoinverse_info(J);
        if (!pr.surjective) {
          sample.stats.rejects++;
          continue;
        }
        sample.points.push_back(x);
        sample.jacobians.push_back(J);
        sample.pinvs.push_back(pr.pinv);
        sample.residuals.push_back(res);
      }
    }
    probe += wave;
    stale_waves = sample.size() == before ? stale_waves + 1 : 0;
    // saturated: repeated waves add nothing new (finite zero sets, small slices)
    if (sample.size() > 0 && stale_waves >= 3) break;
  }

  if (sample.points.empty())
    throw EmptySample("no zeros found in the cube after " + std::to_string(probe) + " probes");
  return sample;
}

double tangent_distance(const VarietySample& sample, std::size_t i, std::size_t j) {
  if (i == j) throw PreconditionViolated("tangent distance needs distinct indices");
  const Eigen::VectorXd chord = sample.points[j] - sample.points[i];
  return (sample.pinvs[i] * (sample.jacobians[i] * chord)).norm();
}

namespace {

struct ScanAcc {
  double best = kInf;
  std::size_t bi = 0, bj = 0;
  std::uint64_t scanned = 0, pruned = 0, skipped = 0;
};

EstimateReport scan_pairs(const VarietySample& sample, const std::vector<std::size_t>& ids,
                          double min_sep, double cap, int workers) {
  const std::size_t m = ids.size();
  if (m < 2) throw NoAdmissiblePairs("need at least two sample points");

  const std::size_t chunk = 16;
  const std::size_t nchunks = (m + chunk - 1) / chunk;
  std::vector<ScanAcc> acc(nchunks);

  parallel_chunks(m, chunk, workers, [&](std::size_t c, std::size_t b, std::size_t e) {
    ScanAcc& a = acc[c];
    a.best = cap;  // chunk-local pruning keeps counts deterministic
    for (std::size_t ii = b; ii < e; ++ii) {
      const std::size_t i = ids[ii];
      for (std::size_t jj = 0; jj < m; ++jj) {
        if (jj == ii) continue;
        const std::size_t j = ids[jj];
        const double chord = (sample.points[j] - sample.points[i]).norm();
        if (chord < min_sep) continue;
        ++a.scanned;
        // quotient >= chord/2 always, so long chords cannot improve the min
        if (chord >= 2.0 * a.best) {
          ++a.pruned;
          continue;
        }
        const double td = (sample.pinvs[i] * (sample.jacobians[i] * (sample.points[j] - sample.points[i]))).norm();
        if (td < 1e-14) {
          ++a.skipped;
          continue;
        }
        const double quot = chord * chord / (2.0 * td);
        if (quot < a.best) {
          a.best = quot;
          a.bi = i;
          a.bj = j;
        }
      }
    }
  });

  EstimateReport rep;
  rep.estimate = cap;
  bool found = false;
  std::uint64_t scanned = 0;
  for (const auto& a : acc) {
    scanned += a.scanned;
    rep.pruned += a.pruned;
    rep.skipped_tangent += a.skipped;
    if (a.best < rep.estimate ||
        (a.best == rep.estimate && found &&
         (a.bi < rep.argmin_i || (a.bi == rep.argmin_i && a.bj < rep.argmin_j)))) {
      rep.estimate = a.best;
      rep.argmin_i = a.bi;
      rep.argmin_j = a.bj;
      found = true;
    }
  }
  rep.pairs_scanned = scanned;
  if (scanned == 0) throw NoAdmissiblePairs("no pair is separated by at least min_sep");
  return rep;
}

}  // namespace

EstimateReport estimate_reach(const VarietySample& sample, double min_sep, int workers) {
  if (sample.size() < 2) throw NoAdmissiblePairs("sample has fewer than two points");
  if (min_sep < 0) min_sep = 1e-3 * sample.R;
  std::vector<std::size_t> ids(sample.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return scan_pairs(sample, ids, min_sep, kInf, workers);
}

EstimateReport estimate_reach_local(const VarietySample& sample, const Eigen::VectorXd& center,
                                    double r, double min_sep, int workers) {
  if (min_sep < 0) min_sep = 1e-3 * sample.R;
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < sample.size(); ++i)
    if ((sample.points[i] - center).norm() <= r) ids.push_back(i);
  if (ids.size() < 2) throw NoAdmissiblePairs("fewer than two sample points in the ball");
  EstimateReport rep = scan_pairs(sample, ids, min_sep, kInf, workers);
  rep.estimate = std::min(rep.estimate, r);
  return rep;
}

std::string to_json(const EstimateReport& rep) {
  nlohmann::ordered_json j;
  j["estimate"] = detail::json_num(rep.estimate);
  j["argmin_pair"] = {rep.argmin_i, rep.argmin_j};
  j["pairs_scanned"] = rep.pairs_scanned;
  j["pruned"] = rep.pruned;
  j["skipped_tangent"] = rep.skipped_tangent;
  return j.dump();
}

void export_sample_csv(const VarietySample& sample, std::ostream& os) {
  const int n = sample.points.empty() ? 0 : int(sample.points[0].size());
  for (int k = 0; k < n; ++k) os << "x" << k << ",";
  os << "residual\n";
  os.precision(17);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (int k = 0; k < n; ++k) os << sample.points[i][k] << ",";
    os << sample.residuals[i] << "\n";
  }
}

Emptiness variety_emptiness(const PolyTuple& f, double R, std::uint64_t cell_budget) {
  struct Box {
    Eigen::VectorXd lo, hi;
  };
  const int n = f.n();
  const double norm1_scale = one_norm(f);
  if (norm1_scale == 0.0) return Emptiness::NonEmpty;  // the zero tuple vanishes everywhere

  std::deque<Box> queue;
  Box root;
  root.lo = Eigen::VectorXd::Constant(n, -R);
  root.hi = Eigen::VectorXd::Constant(n, R);
  queue.push_back(root);
  std::uint64_t used = 0;

  Eigen::VectorXd c(n);
  while (!queue.empty()) {
    if (++used > cell_budget) return Emptiness::Unknown;
    Box box = queue.front();
    queue.pop_front();
    double h = 0.0;
    for (int k = 0; k < n; ++k) {
      c[k] = 0.5 * (box.lo[k] + box.hi[k]);
      h = std::max(h, 0.5 * (box.hi[k] - box.lo[k]));
    }
    const double reach_scale = std::max(1.0, c.lpNorm<Eigen::Infinity>() + h);
    bool excluded = false;
    double fmax = 0.0;
    for (int i = 0; i < f.q() && !excluded; ++i) {
      const auto& p = f.poly(i);
      const double v = std::abs(p.eval(c));
      fmax = std::max(fmax, v);
      // |f_i| is Lipschitz with constant d_i |f_i|_1 max(1,|x|)^{d_i - 1} in sup norm
      const double lip =
          double(p.degree()) * p.coef_abs_sum() * std::pow(reach_scale, double(p.degree() - 1));
      if (v > lip * h) excluded = true;
    }
    if (excluded) continue;
    if (fmax <= 1e-12 * (1.0 + norm1_scale)) return Emptiness::NonEmpty;  // near-zero witness
    if (h < 1e-7) return Emptiness::Unknown;  // cannot separate from a zero

    int widest = 0;
    double w = 0.0;
    for (int k = 0; k < n; ++k)
      if (box.hi[k] - box.lo[k] > w) {
        w = box.hi[k] - box.lo[k];
        widest = k;
      }
    const double mid = 0.5 * (box.lo[widest] + box.hi[widest]);
    Box a = box, b = box;
    a.hi[widest] = mid;
    b.lo[widest] = mid;
    queue.push_back(a);
    queue.push_back(b);
  }
  return Emptiness::Empty;
}

}  // namespace reachbound
