#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stratfib/errors.hpp"
#include "stratfib/problem.hpp"
#include "stratfib/trivialize.hpp"
#include "support.hpp"

using namespace stratfib;
using test::pt;

namespace {

const auto X = test::x_coord();
const auto Y = test::y_coord();
const Polynomial one = Polynomial::constant(2, 1.0);

ProblemFile bundled(const char* name) {
  return load_problem(std::string(STRATFIB_PROBLEMS) + "/" + name + ".json");
}

// Upper half of the unit circle over its endpoint (1,0).
Stratification half_circle() {
  std::vector<Stratum> s;
  s.push_back(test::stratum("end", 2, {X - one, Y}, {}, 0));
  s.push_back(test::stratum("arc", 2, {X * X + Y * Y - one}, {Y}, 1));
  return Stratification(2, std::move(s), {{"end", "arc"}});
}

Stratification cubic() {
  std::vector<Stratum> s;
  s.push_back(test::stratum("origin", 2, {X, Y}, {}, 0));
  s.push_back(test::stratum("curve", 2, {Y - X * X * X}, {X * X}, 1));
  return Stratification(2, std::move(s), {{"origin", "curve"}});
}

Stratification parabola() {
  std::vector<Stratum> s;
  s.push_back(test::stratum("origin", 2, {X, Y}, {}, 0));
  s.push_back(test::stratum("parabola", 2, {Y - X * X}, {X * X}, 1));
  return Stratification(2, std::move(s), {{"origin", "parabola"}});
}

std::vector<ScaleRow> rows(std::initializer_list<double> values) {
  std::vector<ScaleRow> out;
  double r = 0.1;
  for (double v : values) {
    out.push_back({r, v, 8});
    r *= 0.5;
  }
  return out;
}

}  // namespace

TEST_CASE("bounded_ratio_verdict") {
  CHECK(bounded_ratio_verdict({}, 2.0) == Verdict::Inconclusive);
  auto missing = rows({1, 1, 1, 1});
  missing[2].samples = 0;
  CHECK(bounded_ratio_verdict(missing, 2.0) == Verdict::Inconclusive);
  CHECK(bounded_ratio_verdict(rows({1, 1.2, 1.1, 1.5}), 2.0) == Verdict::Pass);
  CHECK(bounded_ratio_verdict(rows({0, 0, 0, 0}), 2.0) == Verdict::Pass);
  CHECK(bounded_ratio_verdict(rows({5, 2, 1, 0.5}), 2.0) == Verdict::Pass);
  CHECK(bounded_ratio_verdict(rows({1, 2, 4, 8}), 2.0) == Verdict::Fail);
  // Tangents rotating like x^{-1/2}: the ratio delta/distance grows like r^{-1/2}.
  std::vector<ScaleRow> synthetic;
  for (double r = 0.1; synthetic.size() < 4; r *= 0.5) synthetic.push_back({r, std::pow(r, -0.5), 8});
  CHECK(bounded_ratio_verdict(synthetic, 2.0) == Verdict::Fail);
}

TEST_CASE("check_verdier_w examples") {
  const auto a = check_verdier_w(test::punctured(), "rest", "origin", pt({0, 0}), 8, 1);
  CHECK(a.verdict == Verdict::Pass);
  CHECK(a.c_estimate < 1e-12);
  CHECK(a.vacuous);

  const auto b = check_verdier_w(half_circle(), "arc", "end", pt({1, 0}), 8, 1);
  CHECK(b.verdict == Verdict::Pass);
  CHECK(std::isfinite(b.c_estimate));

  const auto c = check_verdier_w(cubic(), "curve", "origin", pt({0, 0}), 8, 1);
  CHECK(c.verdict == Verdict::Pass);
}

TEST_CASE("check_verdier_w on a frontier of positive dimension") {
  // Sheet z = x y^2 over the x-axis. Oracle: delta(e1, T) = y^2 / |normal| while the
  // distance to the foot on the axis is about |y|, so the ratio is at most |y|.
  const auto sheet = bundled("sheet");
  const auto r = check_verdier_w(sheet.stratification, "sheet", "axis", pt({1, 0, 0}), 8, 1);
  CHECK(r.verdict == Verdict::Pass);
  CHECK_FALSE(r.vacuous);
  for (const auto& row : r.rows) {
    CHECK(row.samples > 0);
    CHECK(row.value <= 2.0 * row.scale + 1e-9);
  }

  const auto h = check_verdier_w(test::halfplanes(), "upper", "line", pt({0.5, 0}), 8, 1);
  CHECK(h.verdict == Verdict::Pass);
  CHECK(h.c_estimate < 1e-12);
}

TEST_CASE("negative control: the Whitney umbrella fails at the origin") {
  const auto umbrella = bundled("umbrella");
  const auto& W = umbrella.stratification;
  const auto v = check_verdier_w(W, "canopy", "handle", pt({0, 0, 0}), 8, 1);
  CHECK(v.verdict == Verdict::Fail);
  CHECK(v.rows.back().value > 2.0 * v.rows.front().value);
  const auto b = check_whitney_b(W, "canopy", "handle", pt({0, 0, 0}), 8, 1);
  CHECK(b.verdict == Verdict::Fail);
}

TEST_CASE("positive controls pass every audit") {
  const auto sheet = bundled("sheet");
  const auto& W = sheet.stratification;
  const PolyMap g(3, {*sheet.config.audit.wf_function});
  for (const auto& y : {pt({0, 0, 0}), pt({1, 0, 0})}) {
    CHECK(check_whitney_b(W, "sheet", "axis", y, 8, 2).verdict == Verdict::Pass);
    CHECK(check_verdier_w(W, "sheet", "axis", y, 8, 3).verdict == Verdict::Pass);
    CHECK(check_wf(W, "sheet", "axis", g, y, 8, 4).verdict == Verdict::Pass);
  }
}

TEST_CASE("check_wf examples") {
  const auto a = check_wf(test::cross(), "east", "origin", test::map1(X), pt({0, 0}), 8, 1);
  CHECK(a.verdict == Verdict::Pass);
  CHECK(a.vacuous);

  const auto rho = X * X + Y * Y;
  const auto b = check_wf(parabola(), "parabola", "origin", test::map1(rho), pt({0, 0}), 8, 1);
  CHECK(b.verdict == Verdict::Pass);
  CHECK(std::isfinite(b.c_estimate));

  // g = x on the half-plane pair: the kernels are {0} on the line and the y-axis on the
  // half-plane, so every ratio is zero.
  const auto c = check_wf(test::halfplanes(), "upper", "line", test::map1(X), pt({0.5, 0}), 8, 1);
  CHECK(c.verdict == Verdict::Pass);
  CHECK(c.c_estimate < 1e-12);

  CHECK_THROWS_AS(check_wf(test::cross(), "east", "origin", PolyMap(2, {X, Y}), pt({0, 0}), 8, 1), InputError);
}

TEST_CASE("check_wf reports a rank change of g on a stratum") {
  // g = x^2 on the x-axis has rank 0 where |2x| falls below rank_tol and rank 1 elsewhere.
  AuditOptions options;
  options.rank_tol = 0.05;
  CHECK_THROWS_AS(check_wf(test::halfplanes(), "upper", "line", test::map1(X * X), pt({0, 0}), 8, 1, options),
                  ConstantRankError);
}

TEST_CASE("audit reports are deterministic") {
  const auto sheet = bundled("sheet");
  const auto a = check_verdier_w(sheet.stratification, "sheet", "axis", pt({0, 0, 0}), 8, 9);
  const auto b = check_verdier_w(sheet.stratification, "sheet", "axis", pt({0, 0, 0}), 8, 9);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].value == b.rows[k].value);
    CHECK(a.rows[k].samples == b.rows[k].samples);
  }
}

TEST_CASE("rugosity_check trivial fields") {
  const FieldFn constant = [](const Point&) { return Eigen::VectorXd(Eigen::Vector2d(1, 0)); };
  const auto a = rugosity_check(constant, test::cross(), "east", "origin", pt({0, 0}), 8, 1);
  CHECK(a.verdict == Verdict::Pass);
  CHECK(a.c_estimate == 0.0);

  const FieldFn identity = [](const Point& x) { return Eigen::VectorXd(x); };
  const auto W = trivial_stratification(2);
  const auto id = W.strata().front().id();
  const auto b = rugosity_check(identity, W, id, id, pt({0.3, -0.2}), 8, 1);
  CHECK(b.verdict == Verdict::Pass);
  for (const auto& row : b.rows) CHECK(row.value <= 1.0 + 1e-9);
}

TEST_CASE("rugosity of the glued field on the half-plane stratification") {
  // f = x + y^2: lifts are (1,0) on the line and grad f / |grad f|^2 on the half-planes.
  const auto f = test::map1(X + Y * Y);
  const auto W = test::halfplanes();
  const FieldFn H = [&](const Point& x) { return glued_field(f, W, x, 0, 2.0, 3.0); };
  for (const char* side : {"upper", "lower"}) {
    const auto r = rugosity_check(H, W, side, "line", pt({1.5, 0}), 8, 1);
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.skipped == 0);
    // Oracle: the lift (1,2y)/(1+4y^2) is 2-Lipschitz in y.
    CHECK(r.c_estimate <= 2.0 + 1e-9);
  }
}

TEST_CASE("rugosity skips samples where the field is undefined") {
  // On the 0-dimensional origin of the cross d(f|origin) is not onto: every pair is skipped.
  const auto f = test::map1(X + Y);
  const auto W = test::cross();
  const FieldFn H = [&](const Point& x) { return glued_field(f, W, x, 0, 2.0, 3.0); };
  const auto r = rugosity_check(H, W, "east", "origin", pt({0, 0}), 8, 1);
  CHECK(r.skipped == 32);
  CHECK(r.verdict == Verdict::Inconclusive);
  CHECK_THROWS_AS(rugosity_check(H, W, "east", "north", pt({0, 1}), 8, 1), InputError);
}
