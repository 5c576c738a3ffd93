#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stratfib/critical.hpp"
#include "stratfib/errors.hpp"
#include "stratfib/problem.hpp"
#include "support.hpp"

using namespace stratfib;
using test::pt;

namespace {

const auto X = test::x_coord();
const auto Y = test::y_coord();

ProblemFile bundled(const std::string& name) {
  return load_problem(std::string(STRATFIB_PROBLEMS) + "/" + name + ".json");
}

const Stratum& plane() {
  static const Stratification W = trivial_stratification(2);
  return W.strata().front();
}

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }

Box interval(double lo, double hi) { return Box{v1(lo), v1(hi)}; }

void check_evidence(const LimitValueSet& set) {
  for (const auto& a : set.atoms()) {
    CHECK_FALSE(a.evidence.empty());
    CHECK(a.radius >= 0.0);
    for (const auto& e : a.evidence) CHECK((e.value - a.center).norm() <= a.radius + 1e-12);
  }
}

// Each atom of `a` lies within tol of some atom of `b`.
bool included(const LimitValueSet& a, const LimitValueSet& b, double tol) {
  for (const auto& atom : a.atoms())
    if (!(b.distance(atom.center) <= tol + atom.radius)) return false;
  return true;
}

}  // namespace

TEST_CASE("milnor_sample examples") {
  const auto lin = milnor_sample(test::map1(X), plane(), Box::cube(2, 8), 16, 1);
  CHECK(lin.points.size() > 0);
  for (const auto& p : lin.points) CHECK(std::abs(p(1)) < 1e-8);

  // Oracle: the determinant of the stacked Jacobian [[1+2xy, x^2], [2x, 2y]] is
  // proportional to y + 2xy^2 - x^3.
  const auto br = milnor_sample(test::map1(test::broughton()), plane(), Box::cube(2, 4), 16, 1);
  CHECK(br.points.size() > 0);
  for (const auto& p : br.points) {
    const double x = p(0), y = p(1);
    CHECK(std::abs(y + 2 * x * y * y - x * x * x) < 1e-7);
  }
  REQUIRE(br.points.size() == br.residuals.size());

  const auto cross = test::cross();
  const auto ray = milnor_sample(test::map1(X + Y), cross.stratum("east"), Box::cube(2, 2), 10, 1);
  CHECK(ray.points.size() == 10);
  for (const auto& p : ray.points) CHECK(cross.stratum("east").contains(p, 1e-9));
}

TEST_CASE("milnor certificate on known points") {
  const auto f = test::map1(test::broughton());
  // (1, 1) is off the determinant curve: 1 + 2 - 1 != 0.
  CHECK_FALSE(is_milnor_point(f, plane(), pt({1, 1})));
  // On the x-axis y = 0 the curve reduces to x^3 = 0: only the origin.
  CHECK(is_milnor_point(f, plane(), pt({0, 0})));
  CHECK(is_milnor_point(test::map1(X), plane(), pt({3, 0})));
  CHECK_FALSE(is_milnor_point(test::map1(X), plane(), pt({3, 1})));
}

TEST_CASE("sing_values_sample examples") {
  const auto br = sing_values_sample(test::map1(test::broughton()), plane(), Box::cube(2, 8), 32, 1);
  CHECK(br.empty());

  const auto line = trivial_stratification(1);
  const auto sq = sing_values_sample(test::map1(test::poly(1, {{1, {2}}})), line.strata().front(),
                                     Box::cube(1, 4), 16, 1);
  REQUIRE(sq.atoms().size() == 1);
  CHECK(std::abs(sq.atoms()[0].center(0)) < 1e-8);

  const auto cross = test::cross();
  const auto origin = sing_values_sample(test::map1(X + Y), cross.stratum("origin"), Box::cube(2, 1), 4, 1);
  REQUIRE(origin.atoms().size() == 1);
  CHECK(origin.atoms()[0].center(0) == 0.0);
  check_evidence(origin);
}

TEST_CASE("s_infinity_estimate examples") {
  const auto W = trivial_stratification(2);
  CHECK(s_infinity_estimate(test::map1(X), W.strata().front(), W, default_schedule(), 1).empty());

  const auto br = s_infinity_estimate(test::map1(test::broughton()), W.strata().front(), W, default_schedule(), 1);
  REQUIRE(br.atoms().size() == 1);
  CHECK(std::abs(br.atoms()[0].center(0)) < 1e-2);
  check_evidence(br);

  // Milnor set of x on the punctured plane is {y = 0, x != 0}, accumulating at the origin.
  const auto P = test::punctured();
  const auto fr = s_infinity_estimate(test::map1(X), P.stratum("rest"), P, default_schedule(), 1);
  REQUIRE(fr.atoms().size() == 1);
  CHECK(std::abs(fr.atoms()[0].center(0)) < 1e-3);
  CHECK(fr.atoms()[0].radius < 1e-3);
  CHECK(fr.atoms()[0].source.find("frontier") != std::string::npos);
}

TEST_CASE("Broughton branch values follow the asymptotic oracle") {
  // Along the branch x ~ -1/(2y) of the determinant curve f ~ -1/(4y) tends to 0.
  const auto W = trivial_stratification(2);
  const auto scan = s_infinity_scan(test::map1(test::broughton()), W.strata().front(), W, default_schedule(), 1);
  int checked = 0;
  for (const auto& level : scan.norm_levels) {
    for (std::size_t k = 0; k < level.points.size(); ++k) {
      const auto& p = level.points[k];
      if (std::abs(p(1)) < 0.9 * level.radius) continue;
      CHECK(std::abs(p(0) + 1.0 / (2.0 * p(1))) < 0.2 / std::abs(p(1)));
      CHECK(std::abs(level.values[k](0)) < 1.0 / std::abs(p(1)));
      ++checked;
    }
  }
  CHECK(checked >= 5);
}

TEST_CASE("k_infinity_estimate examples") {
  CHECK(k_infinity_estimate(test::map1(X), default_schedule(), 1).empty());
  CHECK(k_infinity_estimate(test::map1(X * X + Y * Y), default_schedule(), 1).empty());
  const auto br = k_infinity_estimate(test::map1(test::broughton()), default_schedule(), 1);
  REQUIRE(br.atoms().size() == 1);
  CHECK(std::abs(br.atoms()[0].center(0)) < 1e-2);
  check_evidence(br);
}

TEST_CASE("sigma_set examples") {
  const auto br = sigma_set(test::map1(test::broughton()), trivial_stratification(2), default_schedule(), 1);
  REQUIRE(br.atoms().size() == 1);
  CHECK(std::abs(br.atoms()[0].center(0)) < 1e-2);

  const auto cross = sigma_set(test::map1(X + Y), test::cross(), default_schedule(), 1);
  REQUIRE(cross.atoms().size() == 1);
  CHECK(std::abs(cross.atoms()[0].center(0)) < 1e-3);

  CHECK(sigma_set(test::map1(X), trivial_stratification(2), default_schedule(), 1).empty());
}

TEST_CASE("sigma_set atoms carry evidence on every bundled problem") {
  for (const char* name : {"broughton", "linear", "cross", "punctured", "halfplanes", "sheet", "umbrella"}) {
    const auto p = bundled(name);
    const auto s = sigma_set(p.map, p.stratification, p.config.schedule, p.config.seed, critical_options(p.config));
    INFO(name);
    check_evidence(s);
  }
}

TEST_CASE("half-plane frontier atom matches the Milnor set x = 1/2") {
  // f = x + y^2 on y > 0: det [[1, 2y], [2x, 2y]] = 2y(1 - 2x), so M = {x = 1/2} and f -> 1/2 at the line.
  const auto p = bundled("halfplanes");
  const auto s = sigma_set(p.map, p.stratification, p.config.schedule, p.config.seed, critical_options(p.config));
  REQUIRE(s.atoms().size() == 1);
  CHECK(std::abs(s.atoms()[0].center(0) - 0.5) < 1e-3);
  CHECK(s.atoms()[0].source == "frontier");
}

TEST_CASE("sigma atoms lie in K-infinity or the singular values") {
  // Bundled problems where the frontier route adds no value outside K-infinity; see README.
  for (const char* name : {"broughton", "linear", "cross", "punctured", "sheet", "umbrella"}) {
    const auto p = bundled(name);
    const auto opts = critical_options(p.config);
    const auto sigma = sigma_set(p.map, p.stratification, p.config.schedule, p.config.seed, opts);
    LimitValueSet k = k_infinity_estimate(p.map, p.config.schedule, p.config.seed, opts);
    for (const auto& s : p.stratification.strata())
      k.absorb(sing_values_sample(p.map, s, Box::cube(p.nvars, opts.sing_radius), opts.sing_count, 7, opts));
    INFO(name);
    CHECK(included(sigma, k, 5e-2));
  }
}

TEST_CASE("enlarging the schedule keeps converged atoms") {
  const auto f = test::map1(test::broughton());
  const auto W = trivial_stratification(2);
  Ladder longer = default_schedule();
  longer.count += 1;
  const auto a = sigma_set(f, W, default_schedule(), 1);
  const auto b = sigma_set(f, W, longer, 1);
  CHECK(included(a, b, 1e-3));
  const auto ka = k_infinity_estimate(f, default_schedule(), 1);
  const auto kb = k_infinity_estimate(f, longer, 1);
  CHECK(included(ka, kb, 1e-3));
}

TEST_CASE("find_safe_radius on Broughton") {
  const auto f = test::map1(test::broughton());
  const auto W = trivial_stratification(2);
  const Box B = interval(0.5, 1.5);
  const auto safe = find_safe_radius(f, W, B, default_schedule(), 1);
  CHECK(std::isfinite(safe.R));
  CHECK(safe.R > 0.0);
  for (const auto& c : safe.certificate)
    if (c.radius >= safe.R) CHECK(c.min_distance > 0.0);

  // Oracle: on 2x y^2 + y - x^3 = 0, y = (-1 +- sqrt(1 + 8x^4)) / (4x). Points outside the
  // R-ball have f-values outside B.
  int outside = 0;
  for (int k = -4000; k <= 4000; ++k) {
    const double x = k / 100.0;
    if (x == 0.0) continue;
    for (double sign : {-1.0, 1.0}) {
      const double y = (-1.0 + sign * std::sqrt(1.0 + 8.0 * std::pow(x, 4))) / (4.0 * x);
      if (std::hypot(x, y) <= safe.R) continue;
      const double v = x + x * x * y;
      CHECK_FALSE((v >= 0.5 && v <= 1.5));
      ++outside;
    }
  }
  CHECK(outside > 1000);
}

TEST_CASE("find_safe_radius on the linear projection") {
  const auto safe = find_safe_radius(test::map1(X), trivial_stratification(2), interval(-1, 1), default_schedule(), 1);
  // M cap f^{-1}(B) = {(x, 0) : |x| < 1} lies in the first shell.
  CHECK(safe.R == doctest::Approx(default_schedule().r0));
}

TEST_CASE("find_safe_radius rejects boxes meeting sigma") {
  const auto f = test::map1(test::broughton());
  CHECK_THROWS_AS(find_safe_radius(f, trivial_stratification(2), interval(-0.5, 0.5), default_schedule(), 1),
                  PreconditionError);
}

TEST_CASE("LimitValueSet representation") {
  LimitValueSet s(1);
  Evidence e{1.0, v1(0.0), "all"};
  CHECK_THROWS_AS(s.add(Atom{v1(0.0), -1.0, {e}, false, "x"}), InputError);
  CHECK_THROWS_AS(s.add(Atom{v1(0.0), 0.0, {}, false, "x"}), InputError);
  CHECK_THROWS_AS(s.add(Atom{Eigen::VectorXd::Zero(2), 0.0, {e}, false, "x"}), InputError);
  s.add(Atom{v1(0.0), 0.1, {e}, false, "a"});
  s.add(Atom{v1(0.15), 0.1, {Evidence{2.0, v1(0.15), "all"}}, false, "b"});
  s.add(Atom{v1(3.0), 0.0, {Evidence{2.0, v1(3.0), "all"}}, false, "c"});
  s.merge(1e-9);
  REQUIRE(s.atoms().size() == 2);
  // The enclosing ball of [-0.1, 0.1] and [0.05, 0.25].
  CHECK(s.atoms()[0].center(0) == doctest::Approx(0.075));
  CHECK(s.atoms()[0].radius == doctest::Approx(0.175));
  CHECK(s.atoms()[0].evidence.size() == 2);
  CHECK(s.contains(v1(-0.1)));
  CHECK(s.contains(v1(3.0)));
  CHECK_FALSE(s.contains(v1(1.0)));
  CHECK(s.distance(v1(2.0)) == doctest::Approx(1.0));
  CHECK(LimitValueSet(1).distance(v1(0.0)) == std::numeric_limits<double>::infinity());
  check_evidence(s);
}

TEST_CASE("critical estimates are deterministic in the seed") {
  const auto f = test::map1(test::broughton());
  const auto a = sigma_set(f, trivial_stratification(2), default_schedule(), 5);
  const auto b = sigma_set(f, trivial_stratification(2), default_schedule(), 5);
  REQUIRE(a.atoms().size() == b.atoms().size());
  for (std::size_t k = 0; k < a.atoms().size(); ++k) {
    CHECK(a.atoms()[k].center == b.atoms()[k].center);
    CHECK(a.atoms()[k].radius == b.atoms()[k].radius);
  }
}
