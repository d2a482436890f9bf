#include "reachbound/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "reachbound/rng.hpp"

namespace reachbound {

PinvResult pseudoinverse_info(const Eigen::MatrixXd& A, double rank_tol) {
  const int q = int(A.rows());
  const int n = int(A.cols());
  PinvResult r;
  if (q > n) {
    // cannot be surjective; report the smallest singular value anyway
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    r.sigma_max = svd.singularValues()(0);
    r.sigma_min = 0.0;
    r.surjective = false;
    return r;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  r.sigma_max = sv.size() ? sv(0) : 0.0;
  r.sigma_min = sv.size() ? sv(sv.size() - 1) : 0.0;
  if (rank_tol < 0)
    rank_tol = double(n) * std::numeric_limits<double>::epsilon() * r.sigma_max;
  if (r.sigma_min <= rank_tol) {
    r.surjective = false;
    return r;
  }
  r.surjective = true;
  Eigen::VectorXd inv = sv.cwiseInverse();
  r.pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return r;
}

Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& A, double rank_tol) {
  PinvResult r = pseudoinverse_info(A, rank_tol);
  if (!r.surjective) throw NonSurjective(r.sigma_min);
  return std::move(r.pinv);
}

OperatorNormBounds opnorm_inf_two(const Eigen::MatrixXd& A, int q_exact, std::uint64_t seed) {
  const int n = int(A.rows());
  const int q = int(A.cols());
  OperatorNormBounds b;
  if (q == 0 || n == 0) {
    b.exact = true;
    return b;
  }
  auto norm_at_signs = [&](std::uint64_t mask) {
    // v = sum_j s_j col_j accumulated in fixed order, then |v|_2
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < q; ++j) {
      const double s = (mask >> j) & 1 ? -1.0 : 1.0;
      v += s * A.col(j);
    }
    double sq = 0.0;
    for (int k = 0; k < n; ++k) sq += v[k] * v[k];
    return std::sqrt(sq);
  };
  if (q <= q_exact) {
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << q); ++mask)
      best = std::max(best, norm_at_signs(mask));
    b.lower = b.upper = best;
    b.exact = true;
    return b;
  }
  // certified bracket: sampled vertices below, column-norm sum above
  double lo = 0.0;
  Rng rng(seed);
  Eigen::VectorXd v(n);
  for (int it = 0; it < (1 << 16); ++it) {
    v.setZero();
    std::uint64_t bits = 0;
    int have = 0;
    for (int j = 0; j < q; ++j) {
      if (have == 0) {
        bits = rng.next();
        have = 64;
      }
      v += ((bits & 1) ? -1.0 : 1.0) * A.col(j);
      bits >>= 1;
      --have;
    }
    lo = std::max(lo, v.norm());
  }
  double hi = 0.0;
  for (int j = 0; j < q; ++j) hi += A.col(j).norm();
  b.lower = lo;
  b.upper = std::max(lo, hi);
  b.exact = false;
  return b;
}

double minvalue_inf_two(const Eigen::MatrixXd& A, int q_exact) {
  const int q = int(A.rows());
  if (q == 1) {
    // pinv of a row is r^T/|r|^2; its (inf,2)-norm is 1/|r|_2
    return A.row(0).norm();
  }
  PinvResult r = pseudoinverse_info(A);
  if (!r.surjective) return 0.0;
  const OperatorNormBounds b = opnorm_inf_two(r.pinv, q_exact);
  return b.upper > 0.0 ? 1.0 / b.upper : 0.0;
}

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.rows() == 0 || A.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(0);
}

namespace {

// Contracted tensor G: a x (k_1..k_ell), all indices of size n.
struct Contracted {
  int n = 0;
  int order = 0;
  std::vector<double> g;  // n^(order+1), output index slowest

  double& at(std::size_t flat) { return g[flat]; }
  std::size_t slots() const {
    std::size_t s = 1;
    for (int k = 0; k < order; ++k) s *= std::size_t(n);
    return s;
  }
};

Contracted contract_left(const Eigen::MatrixXd& left, const DerivativeTensor& T, double scale) {
  Contracted C;
  C.n = T.n;
  C.order = T.order;
  const std::size_t slots = C.slots();
  C.g.assign(std::size_t(left.rows()) * slots, 0.0);
  for (int a = 0; a < int(left.rows()); ++a)
    for (std::size_t s = 0; s < slots; ++s) {
      double acc = 0.0;
      for (int i = 0; i < T.q; ++i)
        acc += left(a, i) * T.entries[std::size_t(i) * slots + s];
      C.g[std::size_t(a) * slots + s] = acc * scale;
    }
  return C;
}

// w_a = G(v_1,..,v_ell)_a
void apply_all(const Contracted& C, const std::vector<Eigen::VectorXd>& v, Eigen::VectorXd& w) {
  const std::size_t slots = C.slots();
  const int n = C.n;
  w.setZero(n);
  std::vector<int> idx(std::size_t(C.order), 0);
  for (std::size_t s = 0; s < slots; ++s) {
    std::size_t rem = s;
    double weight = 1.0;
    for (int k = C.order - 1; k >= 0; --k) {
      const int ik = int(rem % std::size_t(n));
      rem /= std::size_t(n);
      weight *= v[std::size_t(k)][ik];
    }
    for (int a = 0; a < n; ++a) w[a] += C.g[std::size_t(a) * slots + s] * weight;
  }
}

// y_k = sum over everything but slot j of u_a G prod_{m != j} v_m
void apply_but(const Contracted& C, const Eigen::VectorXd& u, const std::vector<Eigen::VectorXd>& v,
               int j, Eigen::VectorXd& y) {
  const std::size_t slots = C.slots();
  const int n = C.n;
  y.setZero(n);
  for (std::size_t s = 0; s < slots; ++s) {
    std::size_t rem = s;
    double weight = 1.0;
    int kj = 0;
    for (int k = C.order - 1; k >= 0; --k) {
      const int ik = int(rem % std::size_t(n));
      rem /= std::size_t(n);
      if (k == j)
        kj = ik;
      else
        weight *= v[std::size_t(k)][ik];
    }
    double ug = 0.0;
    for (int a = 0; a < n; ++a) ug += u[a] * C.g[std::size_t(a) * slots + s];
    y[kj] += ug * weight;
  }
}

}  // namespace

OperatorNormBounds tensor_22_norm_bounds(const Eigen::MatrixXd& left, const DerivativeTensor& T,
                                         double scale, const TensorNormOptions& opts) {
  if (T.order < 2) throw PreconditionViolated("tensor norm requires order >= 2");
  OperatorNormBounds b;
  if (T.zero) {
    b.exact = true;
    return b;
  }
  if (T.q == 1 && T.order == 2) {
    // bilinear scalar form times a fixed output direction: exact value
    Eigen::MatrixXd M(T.n, T.n);
    for (int j = 0; j < T.n; ++j)
      for (int k = 0; k < T.n; ++k)
        M(j, k) = T.entries[std::size_t(j) * std::size_t(T.n) + std::size_t(k)] * scale;
    const double v = left.col(0).norm() * spectral_norm(M);
    b.lower = b.upper = v;
    b.exact = true;
    return b;
  }

  const Contracted C = contract_left(left, T, scale);
  double fro = 0.0;
  for (double g : C.g) fro += g * g;
  b.upper = std::sqrt(fro);

  // higher-order power iteration for a lower bound
  double best = 0.0;
  Rng rng(opts.seed);
  for (int restart = 0; restart < opts.restarts; ++restart) {
    std::vector<Eigen::VectorXd> v(std::size_t(T.order));
    for (auto& vk : v) {
      vk.resize(T.n);
      for (int k = 0; k < T.n; ++k) vk[k] = rng.normal();
      const double nv = vk.norm();
      if (nv == 0.0)
        vk.setConstant(1.0 / std::sqrt(double(T.n)));
      else
        vk /= nv;
    }
    Eigen::VectorXd u(T.n), w(T.n), y(T.n);
    apply_all(C, v, w);
    double value = w.norm();
    if (value == 0.0) continue;
    u = w / value;
    for (int it = 0; it < opts.iterations; ++it) {
      for (int j = 0; j < T.order; ++j) {
        apply_but(C, u, v, j, y);
        const double ny = y.norm();
        if (ny == 0.0) break;
        v[std::size_t(j)] = y / ny;
      }
      apply_all(C, v, w);
      const double nv = w.norm();
      if (nv == 0.0) break;
      u = w / nv;
      if (std::abs(nv - value) <= opts.tolerance * std::max(1.0, nv)) {
        value = nv;
        break;
      }
      value = nv;
    }
    best = std::max(best, value);
  }
  b.lower = std::min(best, b.upper);
  b.exact = false;
  return b;
}

std::pair<double, double> perturbation_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd pinvB = pseudoinverse(B);  // NonSurjective if B is not
  const double s = spectral_norm(pinvB * (A - B));
  if (s >= 1.0)
    throw PreconditionViolated("perturbation too large: |pinv(B)(A-B)| = " + std::to_string(s));
  const Eigen::MatrixXd pinvA = pseudoinverse(A);
  return {spectral_norm(pinvA * B), 1.0 / (1.0 - s)};
}

}  // namespace reachbound
