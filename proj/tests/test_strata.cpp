#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stratfib/errors.hpp"
#include "stratfib/problem.hpp"
#include "support.hpp"

using namespace stratfib;
using test::poly;
using test::pt;

namespace {

const auto X = test::x_coord();
const auto Y = test::y_coord();
const Polynomial one = Polynomial::constant(2, 1.0);

// Unit circle minus p = (1,0), over {p}.
Stratification circle_minus_point() {
  std::vector<Stratum> s;
  s.push_back(test::stratum("p", 2, {X - one, Y}, {}, 0));
  s.push_back(test::stratum("arc", 2, {X * X + Y * Y - one}, {(X - one) * (X - one) + Y * Y}, 1));
  return Stratification(2, std::move(s), {{"p", "arc"}});
}

// {y = x^3, x != 0} over the origin.
Stratification cubic() {
  std::vector<Stratum> s;
  s.push_back(test::stratum("origin", 2, {X, Y}, {}, 0));
  s.push_back(test::stratum("curve", 2, {Y - X * X * X}, {X * X}, 1));
  return Stratification(2, std::move(s), {{"origin", "curve"}});
}

Box square(double h) { return Box::cube(2, h); }

}  // namespace

TEST_CASE("locate_stratum examples") {
  const auto W = test::cross();
  CHECK(locate_stratum(W, pt({0, 0}), 1e-9) == std::optional<std::string>("origin"));
  CHECK(locate_stratum(W, pt({2, 0}), 1e-9) == std::optional<std::string>("east"));
  CHECK_FALSE(locate_stratum(W, pt({1, 1}), 1e-9).has_value());
  CHECK_THROWS_AS(locate_stratum(W, pt({0, 0}), 0.0), InputError);
  CHECK_THROWS_AS(locate_stratum(W, pt({0, 0, 0}), 1e-9), InputError);
}

TEST_CASE("locate_stratum reports overlapping strata") {
  std::vector<Stratum> s;
  s.push_back(test::stratum("axis", 2, {Y}, {}, 1));
  s.push_back(test::stratum("ray", 2, {Y}, {X}, 1));
  const Stratification W(2, std::move(s), {});
  CHECK_THROWS_AS(locate_stratum(W, pt({1, 0}), 1e-9), ConsistencyError);
  CHECK(locate_stratum(W, pt({-1, 0}), 1e-9) == std::optional<std::string>("axis"));
}

TEST_CASE("sample_stratum examples") {
  const auto circle = test::stratum("circle", 2, {X * X + Y * Y - one}, {}, 1);
  const auto a = sample_stratum(circle, square(2), 100, 1);
  CHECK(a.points.size() == 100);
  for (const auto& p : a.points) CHECK(std::abs(p.norm() - 1.0) < 1e-9);

  const auto origin = test::cross().stratum("origin");
  const auto b = sample_stratum(origin, square(1), 5, 1);
  REQUIRE(b.points.size() == 5);
  for (const auto& p : b.points) CHECK(p.norm() < 1e-12);

  // Oracle: the parametrization t -> (t, t^2) has norm in [10, 20] for t^2 (1 + t^2) in [100, 400].
  const auto parabola = test::stratum("parabola", 2, {Y - X * X}, {}, 1);
  const auto c = sample_stratum(parabola, Shell{Eigen::VectorXd(), 10.0, 20.0}, 50, 3);
  CHECK(c.points.size() > 0);
  for (const auto& p : c.points) {
    CHECK(std::abs(p(1) - p(0) * p(0)) < 1e-9);
    CHECK(p.norm() >= 10.0);
    CHECK(p.norm() <= 20.0);
    const double t = p(0);
    const double n2 = t * t * (1 + t * t);
    CHECK(n2 >= 100.0 * (1 - 1e-9));
    CHECK(n2 <= 400.0 * (1 + 1e-9));
  }
}

TEST_CASE("sample_stratum warns instead of failing on empty regions") {
  const auto circle = test::stratum("circle", 2, {X * X + Y * Y - one}, {}, 1);
  Box far{pt({5, 5}), pt({6, 6})};
  const auto r = sample_stratum(circle, far, 10, 1);
  CHECK(r.points.empty());
  CHECK(r.warning.has_value());
  CHECK_THROWS_AS(sample_stratum(circle, square(1), 0, 1), InputError);
}

TEST_CASE("sample_stratum is deterministic in the seed") {
  const auto parabola = test::stratum("parabola", 2, {Y - X * X}, {}, 1);
  const auto a = sample_stratum(parabola, square(3), 20, 42);
  const auto b = sample_stratum(parabola, square(3), 20, 42);
  const auto c = sample_stratum(parabola, square(3), 20, 43);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i] == b.points[i]);
  CHECK_FALSE(a.points.front() == c.points.front());
}

TEST_CASE("sampled points respect declared dimension and strict inequalities") {
  const auto W = test::cross();
  for (const auto& s : W.strata()) {
    const auto r = sample_stratum(s, square(2), 50, 9);
    for (const auto& p : r.points) {
      CHECK(s.equation_residual(p) < 1e-9);
      CHECK(s.inequalities_hold(p));
      CHECK(s.dimension_at(p) == s.declared_dim());
    }
  }
}

TEST_CASE("locate_stratum inverts sample_stratum on bundled problems") {
  int total = 0;
  for (const char* name : {"broughton", "linear", "cross", "punctured", "halfplanes", "sheet", "umbrella"}) {
    const auto problem = load_problem(std::string(STRATFIB_PROBLEMS) + "/" + name + ".json");
    const auto& W = problem.stratification;
    const int per = 10000 / (7 * static_cast<int>(W.strata().size())) + 1;
    for (const auto& s : W.strata()) {
      const auto r = sample_stratum(s, Box::cube(W.nvars(), 2.0), per, 17);
      for (const auto& p : r.points) {
        const auto id = locate_stratum(W, p, 1e-8);
        INFO(name, " ", s.id(), " ", p.transpose(), " -> ", id.value_or("none"));
        CHECK(id == std::optional<std::string>(s.id()));
        ++total;
      }
    }
  }
  CHECK(total >= 10000);
}

TEST_CASE("check_frontier examples") {
  const auto cross = check_frontier(test::cross(), 8, 1, square(2));
  CHECK(cross.entries.size() == 4);
  for (const auto& e : cross.entries) {
    CHECK(e.declared);
    CHECK(e.confirmed);
    CHECK(e.min_distance < 1e-6);
  }
  CHECK(cross.all_confirmed());
  CHECK_FALSE(cross.has_undeclared());

  std::vector<Stratum> s;
  s.push_back(test::stratum("top", 2, {Y - one}, {}, 1));
  s.push_back(test::stratum("bottom", 2, {Y + one}, {}, 1));
  const auto lines = check_frontier(Stratification(2, std::move(s), {}), 8, 1, square(2));
  CHECK(lines.all_confirmed());
  CHECK_FALSE(lines.has_undeclared());

  const auto punct = check_frontier(test::punctured(), 8, 1, square(2));
  REQUIRE(punct.entries.size() == 1);
  CHECK(punct.entries[0].confirmed);
}

TEST_CASE("check_frontier flags undeclared adjacency") {
  std::vector<Stratum> s;
  s.push_back(test::stratum("origin", 2, {X, Y}, {}, 0));
  s.push_back(test::stratum("rest", 2, {}, {X * X + Y * Y}, 2));
  const auto r = check_frontier(Stratification(2, std::move(s), {}), 4, 1, square(2));
  CHECK(r.has_undeclared());
}

TEST_CASE("check_whitney_b examples") {
  const auto a = check_whitney_b(test::punctured(), "rest", "origin", pt({0, 0}), 8, 1);
  CHECK(a.verdict == Verdict::Pass);
  CHECK(a.c_estimate < 1e-12);

  // Oracle: on the unit circle the secant from p and the tangent at x differ by half the arc
  // angle, so the deviation is half the chord length.
  const auto b = check_whitney_b(circle_minus_point(), "arc", "p", pt({1, 0}), 8, 1);
  CHECK(b.verdict == Verdict::Pass);
  for (const auto& row : b.rows) CHECK(row.value <= 0.5 * row.scale + 1e-9);

  // Oracle: secant slope x^2 against tangent slope 3x^2.
  const auto c = check_whitney_b(cubic(), "curve", "origin", pt({0, 0}), 8, 1);
  CHECK(c.verdict == Verdict::Pass);
  for (const auto& row : c.rows) CHECK(row.value <= 2.0 * row.scale * row.scale + 1e-9);
}

TEST_CASE("check_whitney_b preconditions") {
  CHECK_THROWS_AS(check_whitney_b(test::punctured(), "origin", "rest", pt({0, 0}), 4, 1), InputError);
  CHECK_THROWS_AS(check_whitney_b(test::punctured(), "rest", "origin", pt({1, 0}), 4, 1), InputError);
  CHECK_THROWS_AS(check_whitney_b(test::punctured(), "rest", "nowhere", pt({0, 0}), 4, 1), InputError);
}

TEST_CASE("stratification validation") {
  auto origin = [] { return test::stratum("origin", 2, {X, Y}, {}, 0); };
  auto rest = [] { return test::stratum("rest", 2, {}, {X * X + Y * Y}, 2); };
  CHECK_THROWS_AS(Stratification(2, {}, {}), InputError);
  CHECK_THROWS_AS(Stratification(2, {origin(), origin()}, {}), InputError);
  CHECK_THROWS_AS(Stratification(2, {origin(), rest()}, {{"origin", "origin"}}), InputError);
  CHECK_THROWS_AS(Stratification(2, {origin(), rest()}, {{"origin", "nowhere"}}), InputError);
  CHECK_THROWS_AS(Stratification(2, {origin(), rest()}, {{"rest", "origin"}}), InputError);
  CHECK_THROWS_AS(test::stratum("bad", 2, {X}, {}, 3), InputError);
  CHECK_THROWS_AS(test::stratum("", 2, {X}, {}, 1), InputError);

  // Transitivity: a < b < c requires (a, c).
  std::vector<Stratum> s;
  s.push_back(test::stratum("a", 3, {Polynomial::variable(3, 0), Polynomial::variable(3, 1), Polynomial::variable(3, 2)}, {}, 0));
  s.push_back(test::stratum("b", 3, {Polynomial::variable(3, 0), Polynomial::variable(3, 1)}, {}, 1));
  s.push_back(test::stratum("c", 3, {Polynomial::variable(3, 0)}, {}, 2));
  CHECK_THROWS_AS(Stratification(3, s, {{"a", "b"}, {"b", "c"}}), InputError);
  CHECK_NOTHROW(Stratification(3, s, {{"a", "b"}, {"b", "c"}, {"a", "c"}}));
}

TEST_CASE("audits are deterministic in the seed") {
  const auto a = check_whitney_b(cubic(), "curve", "origin", pt({0, 0}), 6, 5);
  const auto b = check_whitney_b(cubic(), "curve", "origin", pt({0, 0}), 6, 5);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) CHECK(a.rows[k].value == b.rows[k].value);
  const auto fa = check_frontier(test::cross(), 4, 5, square(2));
  const auto fb = check_frontier(test::cross(), 4, 5, square(2));
  REQUIRE(fa.entries.size() == fb.entries.size());
  for (std::size_t k = 0; k < fa.entries.size(); ++k) CHECK(fa.entries[k].min_distance == fb.entries[k].min_distance);
}
