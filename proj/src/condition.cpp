#include "reachbound/condition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "reachbound/detail/json_util.hpp"

namespace reachbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxFreeDims = 8;

double hinf(const Eigen::VectorXd& x) { return std::max(1.0, x.lpNorm<Eigen::Infinity>()); }

Polynomial partial(const Polynomial& p, int k) {
  std::vector<Term> terms;
  for (const auto& t : p.terms()) {
    const int e = t.exp[std::size_t(k)];
    if (e == 0) continue;
    Term nt;
    nt.exp = t.exp;
    --nt.exp[std::size_t(k)];
    nt.coef = t.coef * double(e);
    terms.push_back(std::move(nt));
  }
  return Polynomial(p.n(), std::max(0, p.degree() - 1), std::move(terms));
}

}  // namespace

CondEvaluator::CondEvaluator(const PolyTuple& f) : f_(f), fh_(homogenize(f)) {
  norm1_ = one_norm(f_);
  grad_.resize(std::size_t(f_.q()));
  grad_h_.resize(std::size_t(f_.q()));
  for (int i = 0; i < f_.q(); ++i) {
    if (f_.degrees()[std::size_t(i)] < 1)
      throw PreconditionViolated("condition numbers require degree >= 1 in every entry");
    for (int k = 0; k < f_.n(); ++k) grad_[std::size_t(i)].push_back(partial(f_.poly(i), k));
    for (int k = 0; k <= f_.n(); ++k)
      grad_h_[std::size_t(i)].push_back(partial(fh_.poly(i), k));
  }
}

ConditionReport CondEvaluator::local(const Eigen::VectorXd& x) const {
  if (int(x.size()) != f_.n()) throw DimensionMismatch("point dimension does not match tuple");
  ConditionReport rep;
  rep.point = x;
  const double hx = hinf(x);

  double res = 0.0;
  for (int i = 0; i < f_.q(); ++i) {
    const double di = double(f_.degrees()[std::size_t(i)]);
    res = std::max(res, std::abs(f_.poly(i).eval(x)) / (di * std::pow(hx, di)));
  }
  rep.residual_term = res;

  // scaled Jacobian whose pseudoinverse realizes the inverse term
  Eigen::MatrixXd B(f_.q(), f_.n());
  for (int i = 0; i < f_.q(); ++i) {
    const double di = double(f_.degrees()[std::size_t(i)]);
    const double s = 1.0 / (di * di * std::pow(hx, di - 1.0));
    for (int k = 0; k < f_.n(); ++k) B(i, k) = grad_[std::size_t(i)][std::size_t(k)].eval(x) * s;
  }
  rep.inverse_term = minvalue_inf_two(B);
  rep.surjective = rep.inverse_term > 0.0;

  const double denom = std::max(rep.residual_term, rep.inverse_term);
  rep.value = denom > 0.0 ? norm1_ / denom : kInf;
  return rep;
}

double CondEvaluator::homog_unchecked(const Eigen::VectorXd& z) const {
  const int n1 = fh_.n();
  double res = 0.0;
  for (int i = 0; i < f_.q(); ++i) {
    const double di = double(f_.degrees()[std::size_t(i)]);
    res = std::max(res, std::abs(fh_.poly(i).eval(z)) / di);
  }
  Eigen::MatrixXd B(f_.q(), n1);
  for (int i = 0; i < f_.q(); ++i) {
    const double di = double(f_.degrees()[std::size_t(i)]);
    const double s = 1.0 / (di * di);
    B(i, 0) = 0.0;  // P_0 drops the X_0 column
    for (int k = 1; k < n1; ++k) B(i, k) = grad_h_[std::size_t(i)][std::size_t(k)].eval(z) * s;
  }
  const double inv = minvalue_inf_two(B);
  const double denom = std::max(res, inv);
  return denom > 0.0 ? norm1_ / denom : kInf;
}

double CondEvaluator::homog(const Eigen::VectorXd& z) const {
  if (int(z.size()) != fh_.n())
    throw DimensionMismatch("homogeneous point must have dimension n+1");
  if (std::abs(z.lpNorm<Eigen::Infinity>() - 1.0) > 1e-12) throw NotOnBoundary();
  return homog_unchecked(z);
}

ConditionReport cond_local(const PolyTuple& f, const Eigen::VectorXd& x) {
  return CondEvaluator(f).local(x);
}

double cond_homog(const PolyTuple& f, const Eigen::VectorXd& z) {
  return CondEvaluator(f).homog(z);
}

// --- global bracket ---------------------------------------------------------

namespace {

// Axis-aligned box on one face of the boundary cube. `axis` is the frozen
// coordinate (value `sign`); lo/hi span the remaining n coordinates, in
// z-coordinate order with the frozen axis skipped.
struct Cell {
  double lo[kMaxFreeDims];
  double hi[kMaxFreeDims];
  double upper = kInf;
  std::uint64_t id = 0;
  int axis = 0;
  int sign = 1;
};

struct CellOrder {
  bool operator()(const Cell& a, const Cell& b) const {
    if (a.upper != b.upper) return a.upper < b.upper;  // max-heap on upper
    return a.id > b.id;                                // older cells first
  }
};

struct GridContext {
  const CondEvaluator* eval = nullptr;
  int n = 0;
  double R = 1.0;
  double lower = 0.0;
  Eigen::VectorXd witness;
  std::uint64_t evals = 0;
  std::uint64_t next_id = 0;

  void to_z(const Cell& c, const double* coords, Eigen::VectorXd& z) const {
    int j = 0;
    for (int k = 0; k <= n; ++k) {
      if (k == c.axis)
        z[k] = double(c.sign);
      else
        z[k] = coords[j++];
    }
  }

  bool feasible_point(const Eigen::VectorXd& z) const {
    const double z0 = z[0];
    if (z0 < 1.0 / R - 1e-12) return false;
    for (int k = 1; k <= n; ++k)
      if (std::abs(z[k]) > R * z0 + 1e-12) return false;
    return true;
  }

  // provably no feasible point in the cell
  bool infeasible_cell(const Cell& c) const {
    double z0_max;
    if (c.axis == 0) {
      z0_max = double(c.sign);
    } else {
      z0_max = c.hi[0];  // z0 is the first free coordinate on side faces
    }
    if (z0_max < 1.0 / R - 1e-12) return true;
    int j = 0;
    for (int k = 0; k <= n; ++k) {
      double amin;  // min |z_k| over the cell
      if (k == c.axis) {
        amin = 1.0;
      } else {
        const double lo = c.lo[j], hi = c.hi[j];
        ++j;
        if (k == 0) continue;
        amin = (lo > 0.0) ? lo : (hi < 0.0 ? -hi : 0.0);
      }
      if (k == 0) continue;
      if (amin > R * z0_max + 1e-12) return true;
    }
    return false;
  }

  // Lipschitz upper bound over the cell from its center value: 1/cond is
  // 1-Lipschitz in the sup norm on the cube boundary.
  double cell_upper(double center_value, double h) const {
    if (!std::isfinite(center_value)) return kInf;
    const double slack = center_value > 0.0 ? 1.0 / center_value : kInf;
    return slack > h ? 1.0 / (slack - h) : kInf;
  }

  double evaluate(Cell& c) {
    double coords[kMaxFreeDims];
    double h = 0.0;
    for (int j = 0; j < n; ++j) {
      coords[j] = 0.5 * (c.lo[j] + c.hi[j]);
      h = std::max(h, 0.5 * (c.hi[j] - c.lo[j]));
    }
    Eigen::VectorXd z(n + 1);
    to_z(c, coords, z);
    const double v = eval->homog_unchecked(z);
    ++evals;
    if (feasible_point(z) && v > lower) {
      lower = v;
      witness = z.tail(n) / z[0];
    }
    c.upper = cell_upper(v, h);
    c.id = next_id++;
    return v;
  }
};

}  // namespace

GlobalCondResult cond_global(const PolyTuple& f, double R, double target_rel_err) {
  GlobalCondOptions opts;
  opts.target_rel_err = target_rel_err;
  return cond_global(f, R, opts);
}

GlobalCondResult cond_global(const PolyTuple& f, double R, const GlobalCondOptions& opts) {
  if (R < 1.0) throw PreconditionViolated("cube radius must satisfy R >= 1");
  if (!(opts.target_rel_err > 0.0) || opts.target_rel_err >= 1.0)
    throw PreconditionViolated("target_rel_err must lie in (0,1)");
  if (f.n() > kMaxFreeDims)
    throw PreconditionViolated("cond_global supports dimension n <= 8");
  if (one_norm(f) == 0.0) throw PreconditionViolated("zero tuple has no condition number");

  CondEvaluator eval(f);
  GridContext ctx;
  ctx.eval = &eval;
  ctx.n = f.n();
  ctx.R = R;

  std::priority_queue<Cell, std::vector<Cell>, CellOrder> heap;
  auto push_cell = [&](Cell c) {
    if (ctx.infeasible_cell(c)) return;
    ctx.evaluate(c);
    heap.push(c);
  };

  {
    // face z0 = +1 covers |x|_inf <= 1
    Cell top;
    top.axis = 0;
    top.sign = 1;
    for (int j = 0; j < ctx.n; ++j) {
      top.lo[j] = -1.0;
      top.hi[j] = 1.0;
    }
    push_cell(top);
    // side faces cover 1 <= |x|_inf <= R; z0 is the first free coordinate
    if (1.0 / R < 1.0 - 1e-15) {
      for (int axis = 1; axis <= ctx.n; ++axis)
        for (int sign : {1, -1}) {
          Cell c;
          c.axis = axis;
          c.sign = sign;
          c.lo[0] = 1.0 / R;
          c.hi[0] = 1.0;
          for (int j = 1; j < ctx.n; ++j) {
            c.lo[j] = -1.0;
            c.hi[j] = 1.0;
          }
          push_cell(c);
        }
    }
  }

  double upper_floor = 0.0;  // cells too small to refine further
  auto result = [&](double upper) {
    GlobalCondResult r;
    r.R = R;
    r.lower = ctx.lower;
    r.upper = upper;
    r.cells = ctx.evals;
    r.max_witness = ctx.witness;
    return r;
  };

  while (!heap.empty()) {
    const double upper = std::max(heap.top().upper, upper_floor);
    if (ctx.lower >= opts.cond_cap) return result(kInf);
    if (ctx.lower > 0.0 && upper <= (1.0 + opts.target_rel_err) * ctx.lower)
      return result(upper);
    if (opts.stop_upper_below > 0.0 && upper < opts.stop_upper_below) return result(upper);
    if (ctx.evals >= opts.cell_budget) throw BudgetExceeded(result(upper));

    Cell cur = heap.top();
    heap.pop();
    int widest = 0;
    double w = 0.0;
    for (int j = 0; j < ctx.n; ++j) {
      const double wj = cur.hi[j] - cur.lo[j];
      if (wj > w) {
        w = wj;
        widest = j;
      }
    }
    if (w < 1e-12) {
      upper_floor = std::max(upper_floor, cur.upper);
      continue;
    }
    const double mid = 0.5 * (cur.lo[widest] + cur.hi[widest]);
    Cell a = cur, b = cur;
    a.hi[widest] = mid;
    b.lo[widest] = mid;
    push_cell(a);
    push_cell(b);
  }
  return result(std::max(upper_floor, ctx.lower));
}

std::pair<double, double> dist_to_singular_bounds(const PolyTuple& f, double R,
                                                  const GlobalCondOptions& opts) {
  const GlobalCondResult res = cond_global(f, R, opts);
  const double norm1 = one_norm(f);
  const double D = double(f.max_degree());
  const double lo = std::isfinite(res.upper) ? norm1 / res.upper : 0.0;
  const double hi = res.lower > 0.0 ? (1.0 + D) * norm1 / res.lower : kInf;
  return {lo, hi};
}

std::string to_json(const ConditionReport& rep) {
  nlohmann::ordered_json j;
  j["point"] = detail::json_vec(rep.point);
  j["residual_term"] = detail::json_num(rep.residual_term);
  j["inverse_term"] = detail::json_num(rep.inverse_term);
  j["cond"] = detail::json_num(rep.value);
  j["surjective"] = rep.surjective;
  return j.dump();
}

std::string to_json(const GlobalCondResult& res) {
  nlohmann::ordered_json j;
  j["R"] = res.R;
  j["lower"] = detail::json_num(res.lower);
  j["upper"] = detail::json_num(res.upper);
  j["cells"] = res.cells;
  j["witness"] = detail::json_vec(res.max_witness);
  return j.dump();
}

}  // namespace reachbound
