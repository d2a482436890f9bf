#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "reachbound/errors.hpp"
#include "reachbound/poly.hpp"

namespace reachbound {

struct OperatorNormBounds {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
};

struct PinvResult {
  Eigen::MatrixXd pinv;
  double sigma_min = 0.0;  // q-th singular value
  double sigma_max = 0.0;
  bool surjective = false;
};

// Pseudoinverse of a q x n matrix via full SVD. rank_tol < 0 selects the
// default n * eps * sigma_max.
PinvResult pseudoinverse_info(const Eigen::MatrixXd& A, double rank_tol = -1.0);

// Throwing variant: NonSurjective when sigma_q <= rank_tol.
Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& A, double rank_tol = -1.0);

// sup |A v|_2 / |v|_inf for an n x q matrix. Exact by sign-vector enumeration
// for q <= q_exact; above that a sampled lower bound and the column-norm sum
// as upper bound are reported with exact = false.
OperatorNormBounds opnorm_inf_two(const Eigen::MatrixXd& A, int q_exact = 16,
                                  std::uint64_t seed = 0x5eedULL);

// min |A v|_inf / |v|_2 over v orthogonal to ker A; zero when A is not
// surjective. Equals the reciprocal of the (inf,2)-norm of the pseudoinverse.
double minvalue_inf_two(const Eigen::MatrixXd& A, int q_exact = 16);

// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& A);

struct TensorNormOptions {
  int restarts = 8;
  int iterations = 200;
  double tolerance = 1e-10;
  std::uint64_t seed = 0x7a11ULL;
};

// (2,2)-spectral norm bounds of the multilinear map obtained by contracting
// `left` (n x q) with the order-ell tensor T (q x n^ell), both scaled by
// `scale`. Upper bound: Frobenius norm. Lower bound: higher-order power
// iteration. For q == 1, ell == 2 the value is a largest singular value and
// is returned exactly.
OperatorNormBounds tensor_22_norm_bounds(const Eigen::MatrixXd& left, const DerivativeTensor& T,
                                         double scale, const TensorNormOptions& opts = {});

// Returns (|pinv(A) B|_22, 1 / (1 - |pinv(B)(A-B)|_22)); the first component
// never exceeds the second. PreconditionViolated when the perturbation is
// too large, NonSurjective when B lacks full row rank.
std::pair<double, double> perturbation_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

}  // namespace reachbound
