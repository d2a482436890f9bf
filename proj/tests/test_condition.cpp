#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "reachbound/condition.hpp"
#include "test_util.hpp"

using namespace reachbound;
using rbtest::point;

TEST_CASE("cond_local: hand values") {
  const ConditionReport circle = cond_local(rbtest::circle(), point({1, 0}));
  CHECK(circle.residual_term == doctest::Approx(0.0));
  CHECK(circle.inverse_term == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(circle.value == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(circle.surjective);

  const PolyTuple line = parse_poly_text("x0", 1, {1});
  CHECK(cond_local(line, point({0})).value == doctest::Approx(1.0).epsilon(1e-14));

  const PolyTuple sq = parse_poly_text("x0^2", 1, {2});
  const ConditionReport singular = cond_local(sq, point({0}));
  CHECK(std::isinf(singular.value));
  CHECK_FALSE(singular.surjective);
  CHECK(singular.residual_term == 0.0);
  CHECK(singular.inverse_term == 0.0);
}

TEST_CASE("cond_homog: hand values and the boundary check") {
  const PolyTuple f = rbtest::circle();
  CHECK(cond_homog(f, point({1, 1, 0})) == doctest::Approx(6.0).epsilon(1e-14));
  // point at infinity: residual |f^h|/d = 1/2, gradient term |(0,2,0)|/4 = 1/2
  CHECK(cond_homog(f, point({0, 1, 0})) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK_THROWS_AS(cond_homog(f, point({0.5, 0.5, 0})), NotOnBoundary);

  // scaling both sides leaves the value fixed
  const PolyTuple f2 = rbtest::scale_tuple(f, 2.0);
  CHECK(cond_homog(f2, point({1, 0.3, -0.4})) ==
        doctest::Approx(cond_homog(f, point({1, 0.3, -0.4}))).epsilon(1e-12));
}

TEST_CASE("cond_local equals cond_homog at the normalized point") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const PolyTuple f = rbtest::random_tuple(rng, 3, 2, 4);
    const Eigen::VectorXd x = rbtest::random_point(rng, f.n(), 3.0);
    const double hx = std::max(1.0, x.lpNorm<Eigen::Infinity>());
    Eigen::VectorXd z(f.n() + 1);
    z[0] = 1.0 / hx;
    z.tail(f.n()) = x / hx;
    const double a = cond_local(f, x).value;
    const double b = cond_homog(f, z);
    if (std::isinf(a) || std::isinf(b)) {
      CHECK(std::isinf(a) == std::isinf(b));
    } else {
      CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
  }
}

TEST_CASE("condition properties on random instances") {
  Rng rng(2025);
  int lipschitz_pairs = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const PolyTuple f = rbtest::random_tuple(rng, 3, 2, 4);
    const Eigen::VectorXd x = rbtest::random_point(rng, f.n(), 2.0);
    const ConditionReport rf = cond_local(f, x);

    // value >= 1
    CHECK(rf.value >= 1.0 - 1e-9);

    // one of the two terms realizes the reciprocal value
    const double norm1 = one_norm(f);
    if (std::isfinite(rf.value) && norm1 > 0) {
      const double inv_value = norm1 / rf.value;
      CHECK(std::max(rf.residual_term, rf.inverse_term) ==
            doctest::Approx(inv_value).epsilon(1e-12));
    }

    // |f|_1/cond is 1-Lipschitz in the degree-scaled coefficients
    const PolyTuple g = rbtest::random_tuple(rng, f.n(), f.q(), f.degrees());
    const ConditionReport rg = cond_local(g, x);
    PolyTuple diff = g;
    {
      std::vector<Polynomial> polys;
      for (int i = 0; i < f.q(); ++i) {
        std::vector<Term> terms;
        for (const auto& t : g.poly(i).terms()) terms.push_back(t);
        for (const auto& t : f.poly(i).terms()) terms.push_back(Term{t.exp, -t.coef});
        polys.emplace_back(f.n(), f.degrees()[std::size_t(i)], std::move(terms));
      }
      diff = PolyTuple(f.n(), std::move(polys));
    }
    double scaled_diff = 0.0;
    for (int i = 0; i < f.q(); ++i)
      scaled_diff = std::max(scaled_diff, diff.poly(i).coef_abs_sum() /
                                              double(f.degrees()[std::size_t(i)]));
    const double vf = std::max(rf.residual_term, rf.inverse_term);
    const double vg = std::max(rg.residual_term, rg.inverse_term);
    CHECK(std::abs(vg - vf) <= scaled_diff * (1.0 + 1e-9) + 1e-12);
    ++lipschitz_pairs;

    // reciprocal value is Lipschitz in the point away from the origin
    if (x.lpNorm<Eigen::Infinity>() >= 0.5) {
      Eigen::VectorXd y = x + rbtest::random_point(rng, f.n(), 0.3);
      const double ry = 1.0 / cond_local(f, y).value;
      const double rx = 1.0 / rf.value;
      const double rhs = 2.0 * (y - x).lpNorm<Eigen::Infinity>() / x.lpNorm<Eigen::Infinity>();
      CHECK(std::abs(ry - rx) <= rhs * (1.0 + 1e-9) + 1e-9);
    }
  }
  CHECK(lipschitz_pairs == 1000);
}

TEST_CASE("homogeneous reciprocal value is 1-Lipschitz on the cube boundary") {
  Rng rng(404);
  for (int trial = 0; trial < 400; ++trial) {
    PolyTuple f = rbtest::random_tuple(rng, 3, 2, 3);
    const double norm1 = one_norm(f);
    if (norm1 == 0.0) continue;
    f = rbtest::scale_tuple(f, 1.0 / norm1);
    const CondEvaluator eval(f);
    // random pair on the same face
    const int axis = int(rng.uniform_int(0, f.n()));
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Eigen::VectorXd z1(f.n() + 1), z2(f.n() + 1);
    for (int k = 0; k <= f.n(); ++k) {
      z1[k] = rng.uniform(-1.0, 1.0);
      z2[k] = rng.uniform(-1.0, 1.0);
    }
    z1[axis] = sign;
    z2[axis] = sign;
    const double v1 = eval.homog(z1), v2 = eval.homog(z2);
    const double r1 = std::isinf(v1) ? 0.0 : 1.0 / v1;
    const double r2 = std::isinf(v2) ? 0.0 : 1.0 / v2;
    CHECK(std::abs(r1 - r2) <= (z1 - z2).lpNorm<Eigen::Infinity>() * (1.0 + 1e-9) + 1e-9);
  }
}

TEST_CASE("cond_global: circle bracket against a dense grid") {
  const PolyTuple f = rbtest::circle();
  const GlobalCondResult res = cond_global(f, 2.0, 0.05);
  CHECK(res.lower <= res.upper);
  CHECK(res.lower >= 6.0 * (1.0 - 1e-9));  // attained at the zeros

  // witness realizes the reported lower bound
  CHECK(cond_local(f, res.max_witness).value == doctest::Approx(res.lower).epsilon(1e-9));

  // dense-grid sweep stays inside the certified bracket
  const CondEvaluator eval(f);
  double grid_max = 0.0;
  const int G = 401;
  for (int i = 0; i < G; ++i)
    for (int j = 0; j < G; ++j) {
      Eigen::VectorXd x(2);
      x << -2.0 + 4.0 * i / (G - 1), -2.0 + 4.0 * j / (G - 1);
      grid_max = std::max(grid_max, eval.local(x).value);
    }
  CHECK(grid_max <= res.upper * (1.0 + 1e-9));
  CHECK(res.lower <= grid_max * (1.0 + 0.02));
}

TEST_CASE("cond_global grows without bound for projectively singular curves") {
  const PolyTuple lines = rbtest::parallel_lines_plane();
  const double c4 = cond_global(lines, 4.0, 0.1).upper;
  const double c16 = cond_global(lines, 16.0, 0.1).upper;
  const double c64 = cond_global(lines, 64.0, 0.1).upper;
  CHECK(c16 > 1.8 * c4);
  CHECK(c64 > 1.8 * c16);

  const PolyTuple par = rbtest::parabola();
  const double p4 = cond_global(par, 4.0, 0.1).upper;
  const double p64 = cond_global(par, 64.0, 0.1).upper;
  CHECK(p64 > 1.5 * p4);
}

TEST_CASE("cond_global reports an infinite upper bound at singular zeros") {
  const PolyTuple sq = parse_poly_text("x0^2", 1, {2});
  const GlobalCondResult res = cond_global(sq, 1.0, 0.1);
  CHECK(std::isinf(res.upper));
  CHECK(res.lower > 1e10);
}

TEST_CASE("cond_global budget exhaustion carries the achieved bracket") {
  GlobalCondOptions opts;
  opts.target_rel_err = 1e-6;
  opts.cell_budget = 20;
  try {
    cond_global(rbtest::circle(), 2.0, opts);
    FAIL("expected BudgetExceeded");
  } catch (const BudgetExceeded& e) {
    CHECK(e.partial.cells >= 20);
    CHECK(e.partial.lower <= e.partial.upper);
    CHECK(e.partial.lower > 0.0);
  }
}

TEST_CASE("report serialization") {
  const auto jr = nlohmann::json::parse(to_json(cond_local(rbtest::circle(), point({1, 0}))));
  CHECK(jr["cond"] == 6.0);
  CHECK(jr["residual_term"] == 0.0);
  CHECK(jr["inverse_term"] == 0.5);
  CHECK(jr["point"] == nlohmann::json::array({1.0, 0.0}));

  // singular values serialize as the string form
  const PolyTuple sq = parse_poly_text("x0^2", 1, {2});
  const auto js = nlohmann::json::parse(to_json(cond_local(sq, point({0}))));
  CHECK(js["cond"] == "inf");

  const auto jg = nlohmann::json::parse(to_json(cond_global(rbtest::circle(), 2.0, 0.05)));
  CHECK(jg["R"] == 2.0);
  CHECK(jg["lower"].get<double>() <= jg["upper"].get<double>());
  CHECK(jg["cells"].get<std::uint64_t>() > 0);
  CHECK(jg["witness"].size() == 2);
}

TEST_CASE("dist_to_singular_bounds") {
  const PolyTuple f = rbtest::circle();
  const auto [lo, hi] = dist_to_singular_bounds(f, 2.0);
  CHECK(lo > 0.0);
  CHECK(lo <= hi);
  // f + 1 has the singular zero (0,0), so the distance is at most |1/2| = 0.5
  CHECK(lo <= 0.5 * (1.0 + 1e-9));

  // doubling the tuple doubles both endpoints
  const auto [lo2, hi2] = dist_to_singular_bounds(rbtest::scale_tuple(f, 2.0), 2.0);
  CHECK(lo2 == doctest::Approx(2.0 * lo).epsilon(1e-12));
  CHECK(hi2 == doctest::Approx(2.0 * hi).epsilon(1e-12));

  // singular instance: the interval collapses toward zero
  const PolyTuple sq = parse_poly_text("x0^2", 1, {2});
  const auto [slo, shi] = dist_to_singular_bounds(sq, 1.0);
  CHECK(slo == 0.0);
  CHECK(shi <= 1e-9);
}
