#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "reachbound/errors.hpp"
#include "reachbound/poly.hpp"

namespace reachbound {

// Point cloud on the zero set inside the cube of radius R, with per-point
// Jacobians and pseudoinverses for tangent-space queries.
struct SampleStats {
  std::uint64_t probes = 0;
  std::uint64_t starts = 0;
  std::uint64_t rejects = 0;
  std::uint64_t dedups = 0;
};

struct VarietySample {
  double R = 0.0;
  double zero_tol = 0.0;
  std::vector<Eigen::VectorXd> points;
  std::vector<Eigen::MatrixXd> jacobians;
  std::vector<Eigen::MatrixXd> pinvs;
  std::vector<double> residuals;
  SampleStats stats;

  std::size_t size() const { return points.size(); }
};

struct SampleOptions {
  double zero_tol = -1.0;          // < 0: scale-aware default
  std::uint64_t probe_budget = 0;  // 0: derived from N
  int newton_iters = 50;
  int workers = 0;                 // <= 0: default_workers()
  double dedup_dist = 1e-8;
};

// Draws random affine slices of complementary dimension and solves the
// restricted square system on each; q = 1 slices are lines solved by
// univariate root finding, higher q by damped Newton from a coarse grid.
VarietySample sample_variety(const PolyTuple& f, double R, std::size_t target_count,
                             std::uint64_t seed, const SampleOptions& opts = {});

// Distance from the chord z_j - z_i to the tangent space at z_i, computed as
// the norm of the orthogonal projection onto the normal space.
double tangent_distance(const VarietySample& sample, std::size_t i, std::size_t j);

struct EstimateReport {
  double estimate = 0.0;
  std::size_t argmin_i = 0, argmin_j = 0;
  std::uint64_t pairs_scanned = 0;
  std::uint64_t pruned = 0;
  std::uint64_t skipped_tangent = 0;
};

// min over ordered pairs of |z_j - z_i|^2 / (2 dist(z_j - z_i, T_i)); pairs
// closer than min_sep are ignored, near-tangent chords count as +infinity.
// min_sep < 0 selects 1e-3 * R.
EstimateReport estimate_reach(const VarietySample& sample, double min_sep = -1.0,
                              int workers = 0);

// Same scan restricted to the ball B(center, r); the result is capped at r.
EstimateReport estimate_reach_local(const VarietySample& sample, const Eigen::VectorXd& center,
                                    double r, double min_sep = -1.0, int workers = 0);

// One row per point: coordinates then residual.
void export_sample_csv(const VarietySample& sample, std::ostream& os);

// {"estimate":..,"argmin_pair":[i,j],"pairs_scanned":..,"pruned":..,
//  "skipped_tangent":..}
std::string to_json(const EstimateReport& rep);

enum class Emptiness { Empty, NonEmpty, Unknown };

// Branch-and-bound emptiness certificate for the zero set inside the cube,
// using the degree-scaled coefficient norm as a Lipschitz constant per cell.
Emptiness variety_emptiness(const PolyTuple& f, double R, std::uint64_t cell_budget = 20000);

}  // namespace reachbound
