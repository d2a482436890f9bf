#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reachbound/errors.hpp"
#include "reachbound/poly.hpp"

namespace reachbound {

enum class ModelKind { UniformContinuous, Gaussian, BitUniform, BitGeneral };

// Coefficient distribution for random tuples. Supports default to all
// monomials up to the degree bound; custom supports must contain the
// structural monomials returned by structural_support().
struct RandomModelSpec {
  ModelKind kind = ModelKind::UniformContinuous;
  double p = 2.0;          // subexponential order for continuous kinds
  double mean_range = 0.0; // Gaussian: means drawn from [-mean_range, mean_range]
  double sigma0 = 1.0;     // Gaussian: sigma drawn from [sigma0, sigma1]
  double sigma1 = 1.0;
  int tau = 0;             // bit kinds: coefficients bounded by 2^tau
  std::vector<std::pair<long long, double>> bit_table;  // BitGeneral: value -> prob
  std::optional<std::vector<std::vector<MultiIndex>>> supports;  // per polynomial
};

struct ModelConstants {
  double L = 0.0;    // tail constant
  double rho = 0.0;  // anti-concentration constant
  double w = 0.0;    // weight (bit kinds)
  double u = 0.0;    // uniformity (bit kinds)
};

struct Geometry {
  int n = 1;
  int q = 1;
  std::vector<int> degrees{2};
  double R = 1.0;
  Eigen::VectorXd x;  // base point for local-condition statistics (default 0)

  int max_degree() const {
    int d = 0;
    for (int di : degrees) d = std::max(d, di);
    return d;
  }
};

// Monomials every admissible support must contain: the constant, the linear
// monomials, and (d-1)e_k + e_l for all axes k and l.
std::vector<MultiIndex> structural_support(int n, int d);
std::vector<MultiIndex> dense_support(int n, int d);

// Support sets actually in force for a spec/geometry combination.
std::vector<std::vector<MultiIndex>> resolve_supports(const RandomModelSpec& spec,
                                                      const Geometry& geom);

ModelConstants model_constants(const RandomModelSpec& spec, const Geometry& geom);

PolyTuple sample_tuple(const RandomModelSpec& spec, const Geometry& geom, std::uint64_t seed);

// --- closed-form tail bounds ---------------------------------------------

enum class TailKind { CondGlobal, CondLocal, Reach };

struct TailParams {
  int n = 1, q = 1, D = 2;
  double R = 1.0;
  double p = 2.0;
  double L = 0.0, rho = 0.0;  // continuous kinds
  double Mmax = 0.0;          // max_i |M_i|
  double u = 0.0;             // bit kinds
  int tau = 0;                // bit kinds
  double hx = 1.0;            // |x|_hinf for local statements
};

TailParams tail_params(const RandomModelSpec& spec, const Geometry& geom);

struct TailValue {
  double raw = 1.0;      // formula value (1 when out of range)
  double clamped = 1.0;  // min(raw, 1)
  bool in_range = false;
};

// Continuous-coefficient bounds. Reach evaluates the t-form bound on
// log2(1/reach_R) with the subexponential order p left as a parameter.
TailValue tail_bound_cont(TailKind kind, const TailParams& params, double t);
// Sharpest valid variant: minimum over p in {1, 2, 4, 8, ln t}.
TailValue tail_bound_cont_min_p(TailKind kind, const TailParams& params, double t);

// Integer-coefficient (bit model) bounds; Reach again in the t-form.
TailValue tail_bound_disc(TailKind kind, const TailParams& params, double t);

// --- Monte Carlo harness ----------------------------------------------------

enum class Statistic { CondR, CondLocal, LogInvReachR };

struct TailPoint {
  double t = 0.0;
  std::uint64_t exceed = 0;     // certified exceedances
  std::uint64_t undecided = 0;  // bracket straddles the threshold
  TailValue theoretical;
  double theoretical_min_p = 1.0;  // continuous reach only; otherwise = raw
};

struct TailCurve {
  Statistic statistic = Statistic::LogInvReachR;
  std::uint64_t trials = 0;
  std::uint64_t excluded = 0;  // failed trials (zero tuple, internal errors)
  double wilson_z = 1.959963984540054;
  std::vector<TailPoint> points;

  std::uint64_t valid_trials() const { return trials - excluded; }
  // conservative exceedance proportion: undecided trials count as exceedances
  double empirical(std::size_t i) const;
  double wilson_lo(std::size_t i) const;
  double wilson_hi(std::size_t i) const;
  // wilson_lo <= theoretical bound at every in-range t
  bool sound() const;
};

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                          double z = 1.959963984540054);

struct McOptions {
  int workers = 0;
  double cond_rel_err = 0.5;
  std::uint64_t cond_budget = 60000;
  double cond_cap = 1e13;
  std::size_t federer_points = 96;
  double federer_min_sep = -1.0;  // < 0: 1e-5 * R
  std::uint64_t empty_budget = 4000;
};

TailCurve mc_tail_experiment(const RandomModelSpec& spec, const Geometry& geom,
                             Statistic statistic, const std::vector<double>& t_grid,
                             std::uint64_t trials, std::uint64_t seed,
                             const McOptions& opts = {});

void export_curve_csv(const TailCurve& curve, std::ostream& os);

// {"statistic":..,"trials":..,"excluded":..,"sound":..,"points":[..]}
std::string to_json(const TailCurve& curve);

const char* to_string(Statistic s);
const char* to_string(ModelKind k);

}  // namespace reachbound
