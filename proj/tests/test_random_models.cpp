#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reachbound/random_models.hpp"
#include "test_util.hpp"

using namespace reachbound;

TEST_CASE("structural and dense supports") {
  const auto s = structural_support(2, 2);
  const auto d = dense_support(2, 2);
  CHECK(d.size() == 6);  // binom(4,2)
  CHECK(s.size() == 6);  // degree 2 in the plane: structural = dense
  for (const auto& e : s) CHECK(std::find(d.begin(), d.end(), e) != d.end());

  CHECK(dense_support(3, 3).size() == 20);  // binom(6,3)
  const auto s3 = structural_support(2, 3);
  // contains (2,0),(3,0),(2,1) and (0,2),(1,2),(0,3) plus the affine block
  CHECK(std::find(s3.begin(), s3.end(), MultiIndex{2, 0}) != s3.end());
  CHECK(std::find(s3.begin(), s3.end(), MultiIndex{2, 1}) != s3.end());
  CHECK(std::find(s3.begin(), s3.end(), MultiIndex{0, 0}) != s3.end());
  CHECK(std::find(s3.begin(), s3.end(), MultiIndex{1, 1}) == s3.end());  // not structural
}

TEST_CASE("model_constants") {
  Geometry geom;
  geom.n = 2;
  geom.q = 1;
  geom.degrees = {2};

  RandomModelSpec uni;
  uni.kind = ModelKind::UniformContinuous;
  const ModelConstants cu = model_constants(uni, geom);
  CHECK(cu.L == 6.0);
  CHECK(cu.rho == 0.5);

  RandomModelSpec gauss;
  gauss.kind = ModelKind::Gaussian;
  const ModelConstants cg = model_constants(gauss, geom);
  CHECK(cg.L == doctest::Approx(6.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(cg.rho == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));

  RandomModelSpec bit;
  bit.kind = ModelKind::BitUniform;
  bit.tau = 4;
  const ModelConstants cb = model_constants(bit, geom);
  CHECK(cb.w == doctest::Approx(1.0 / 33.0).epsilon(1e-14));
  CHECK(cb.u == doctest::Approx(0.0));

  // anti-concentration product bound for the continuous kinds
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Geometry g;
    g.n = int(rng.uniform_int(1, 4));
    g.q = int(rng.uniform_int(1, std::min(3, g.n)));
    for (int i = 0; i < g.q; ++i) g.degrees.resize(std::size_t(g.q), int(rng.uniform_int(1, 4)));
    const ModelConstants c = model_constants(uni, g);
    auto sup = resolve_supports(uni, g);
    std::size_t mmax = 0;
    for (auto& s : sup) mmax = std::max(mmax, s.size());
    CHECK(c.L * c.rho >= double(mmax) / 4.0 - 1e-12);
  }
}

TEST_CASE("sample_tuple: support, ranges, determinism") {
  Geometry geom;
  geom.n = 2;
  geom.q = 2;
  geom.degrees = {2, 3};

  RandomModelSpec bit;
  bit.kind = ModelKind::BitUniform;
  bit.tau = 2;
  const PolyTuple f = sample_tuple(bit, geom, 99);
  CHECK(f.integer_coeffs());
  for (int i = 0; i < f.q(); ++i) {
    for (const auto& t : f.poly(i).terms()) {
      CHECK(t.coef == std::floor(t.coef));
      CHECK(std::abs(t.coef) <= 4.0);
    }
    // support retains the structural monomials even when coefficients vanish
    for (const auto& e : structural_support(geom.n, geom.degrees[std::size_t(i)]))
      CHECK(std::find(f.poly(i).support().begin(), f.poly(i).support().end(), e) !=
            f.poly(i).support().end());
  }

  RandomModelSpec uni;
  uni.kind = ModelKind::UniformContinuous;
  const PolyTuple g = sample_tuple(uni, geom, 7);
  for (int i = 0; i < g.q(); ++i)
    for (const auto& t : g.poly(i).terms()) CHECK(std::abs(t.coef) <= 1.0);

  const PolyTuple g2 = sample_tuple(uni, geom, 7);
  CHECK(to_json(g) == to_json(g2));
  const PolyTuple g3 = sample_tuple(uni, geom, 8);
  CHECK(to_json(g) != to_json(g3));
}

TEST_CASE("tail_bound_cont: frozen example and range handling") {
  TailParams p;
  p.n = 1;
  p.q = 1;
  p.D = 2;
  p.R = 1.0;
  p.p = 2.0;
  p.Mmax = 3.0;  // binom(3,1)
  const TailValue v = tail_bound_cont(TailKind::Reach, p, 4.0);
  CHECK(v.in_range);
  const double expected = 8.0 * std::pow(2.0, 1.5) * 8.0 * 144.0 * 4.0 / 16.0;
  CHECK(v.raw == doctest::Approx(expected).epsilon(1e-12));
  CHECK(v.clamped == 1.0);

  const TailValue below = tail_bound_cont(TailKind::Reach, p, 3.9);  // needs t >= 2(n+1)
  CHECK_FALSE(below.in_range);
  CHECK(below.raw == 1.0);

  // monotone decrease past the threshold
  double prev = tail_bound_cont(TailKind::Reach, p, 6.0).raw;
  for (double t = 7.0; t <= 40.0; t += 1.0) {
    const double cur = tail_bound_cont(TailKind::Reach, p, t).raw;
    CHECK(cur <= prev * (1.0 + 1e-12));
    prev = cur;
  }

  // the p-scan can only sharpen the bound
  const TailValue scan = tail_bound_cont_min_p(TailKind::Reach, p, 12.0);
  CHECK(scan.raw <= tail_bound_cont(TailKind::Reach, p, 12.0).raw * (1.0 + 1e-12));

  // condition bounds need t >= e^{n+1}
  p.L = 3.0;
  p.rho = 0.5;
  CHECK_FALSE(tail_bound_cont(TailKind::CondGlobal, p, 7.0).in_range);
  CHECK(tail_bound_cont(TailKind::CondGlobal, p, 7.5).in_range);
  CHECK(tail_bound_cont(TailKind::CondLocal, p, 7.5).in_range);
}

TEST_CASE("tail_bound_disc: frozen example and window handling") {
  TailParams p;
  p.n = 1;
  p.q = 1;
  p.D = 2;
  p.R = 1.0;
  p.Mmax = 3.0;
  p.tau = 20;
  p.u = 0.0;
  const TailValue v = tail_bound_disc(TailKind::Reach, p, 10.0);
  CHECK(v.in_range);
  CHECK(v.raw == doctest::Approx(2.8125).epsilon(1e-13));

  // window: [max(log2 D, log2 n), log2(q (n+1) |M|) + tau - 1]
  const double hi = std::log2(1.0 * 2.0 * 3.0) + 20.0 - 1.0;
  CHECK(tail_bound_disc(TailKind::Reach, p, hi - 0.01).in_range);
  CHECK_FALSE(tail_bound_disc(TailKind::Reach, p, hi + 0.01).in_range);
  CHECK_FALSE(tail_bound_disc(TailKind::Reach, p, 0.5).in_range);

  CHECK(tail_bound_disc(TailKind::CondGlobal, p, 2.0).in_range);
  CHECK_FALSE(tail_bound_disc(TailKind::CondGlobal, p, 0.5).in_range);
  CHECK(tail_bound_disc(TailKind::CondLocal, p, 100.0).in_range);
}

TEST_CASE("wilson_interval basic behavior") {
  const auto [lo0, hi0] = wilson_interval(0, 100);
  CHECK(lo0 == 0.0);
  CHECK(hi0 > 0.0);
  const auto [lo1, hi1] = wilson_interval(100, 100);
  CHECK(hi1 == 1.0);
  CHECK(lo1 < 1.0);
  const auto [lo, hi] = wilson_interval(10, 100);
  CHECK(lo < 0.1);
  CHECK(hi > 0.1);
  CHECK(lo >= 0.0);
  CHECK(hi <= 1.0);
}

TEST_CASE("mc_tail_experiment: small runs, determinism, soundness") {
  RandomModelSpec uni;
  uni.kind = ModelKind::UniformContinuous;
  Geometry geom;
  geom.n = 1;
  geom.q = 1;
  geom.degrees = {2};
  geom.R = 1.0;

  McOptions w1;
  w1.workers = 1;
  McOptions w4;
  w4.workers = 4;
  const std::vector<double> grid{4, 8, 12};
  const TailCurve a = mc_tail_experiment(uni, geom, Statistic::LogInvReachR, grid, 400, 5, w1);
  const TailCurve b = mc_tail_experiment(uni, geom, Statistic::LogInvReachR, grid, 400, 5, w4);
  REQUIRE(a.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.points[i].exceed == b.points[i].exceed);
    CHECK(a.points[i].undecided == b.points[i].undecided);
  }
  CHECK(a.excluded == b.excluded);
  CHECK(a.sound());

  // conservative exceedance is monotone nonincreasing in t
  for (std::size_t i = 1; i < a.points.size(); ++i)
    CHECK(a.empirical(i) <= a.empirical(i - 1) + 1e-15);

  // tiny runs produce wide intervals and no assertion
  const TailCurve tiny = mc_tail_experiment(uni, geom, Statistic::LogInvReachR, {3.0}, 10, 1);
  CHECK_FALSE(tiny.points[0].theoretical.in_range);
  CHECK(tiny.wilson_hi(0) - tiny.wilson_lo(0) > 0.2);

  // cond_R statistic against its own bound
  const TailCurve cond = mc_tail_experiment(uni, geom, Statistic::CondR, {8.0, 20.0, 50.0}, 300, 9);
  CHECK(cond.sound());
  // cond exceedance counts are monotone too
  for (std::size_t i = 1; i < cond.points.size(); ++i)
    CHECK(cond.empirical(i) <= cond.empirical(i - 1) + 1e-15);

  // csv export shape
  std::ostringstream os;
  export_curve_csv(a, os);
  const std::string csv = os.str();
  CHECK(csv.rfind("t,empirical,wilson_lo,wilson_hi,theoretical,undecided\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("tail curve serialization") {
  RandomModelSpec uni;
  uni.kind = ModelKind::UniformContinuous;
  Geometry geom;
  geom.n = 1;
  geom.q = 1;
  geom.degrees = {2};
  const TailCurve curve =
      mc_tail_experiment(uni, geom, Statistic::LogInvReachR, {4.0, 8.0}, 200, 13);
  const auto j = nlohmann::json::parse(to_json(curve));
  CHECK(j["statistic"] == "log_inv_reach_R");
  CHECK(j["trials"] == 200);
  CHECK(j["points"].size() == 2);
  CHECK(j["points"][0].contains("wilson_lo"));
  CHECK(j["points"][0]["in_range"] == true);
  CHECK(j.contains("sound"));
}

TEST_CASE("mc_tail_experiment: bit model runs inside its window") {
  RandomModelSpec bit;
  bit.kind = ModelKind::BitUniform;
  bit.tau = 16;
  Geometry geom;
  geom.n = 1;
  geom.q = 1;
  geom.degrees = {2};
  const TailCurve curve =
      mc_tail_experiment(bit, geom, Statistic::LogInvReachR, {4, 8, 12}, 300, 77);
  CHECK(curve.sound());
  for (const auto& p : curve.points) CHECK(p.theoretical.in_range);
}
