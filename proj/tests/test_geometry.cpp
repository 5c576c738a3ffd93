#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stratfib/errors.hpp"
#include "stratfib/geometry.hpp"
#include "stratfib/random.hpp"
#include "support.hpp"

using namespace stratfib;
using test::poly;
using test::pt;

namespace {

Subspace line(std::initializer_list<double> v) {
  Eigen::MatrixXd b(static_cast<Eigen::Index>(v.size()), 1);
  b.col(0) = test::pt(v).normalized();
  return Subspace(b.rows(), b);
}

// Containment oracle: every basis vector of V1 is reproduced from V2's basis by least squares.
bool contained(const Subspace& V1, const Subspace& V2) {
  for (int j = 0; j < V1.dim(); ++j) {
    const Eigen::VectorXd a = V1.basis().col(j);
    if (V2.dim() == 0) return false;
    const Eigen::VectorXd c = V2.basis().colPivHouseholderQr().solve(a);
    if ((V2.basis() * c - a).norm() > 1e-10) return false;
  }
  return true;
}

Subspace random_subspace(int n, int k, Rng& rng) {
  Eigen::MatrixXd M(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) M(i, j) = rng.normal();
  return Subspace::span(M);
}

}  // namespace

TEST_CASE("subspace_delta examples") {
  CHECK(subspace_delta(line({1, 0}), Subspace::full(2)) < 1e-15);
  CHECK(subspace_delta(line({1, 0}), line({0, 1})) == doctest::Approx(1.0).epsilon(1e-14));
  const Eigen::Vector2d u = Eigen::Vector2d(1, 1).normalized();
  const double oracle = (Eigen::Vector2d(1, 0) - u(0) * u).norm();
  CHECK(std::abs(subspace_delta(line({1, 0}), line({1, 1})) - oracle) < 1e-8);
  CHECK(std::abs(oracle - 0.70710678) < 1e-8);
}

TEST_CASE("subspace_delta trivial subspaces and errors") {
  CHECK(subspace_delta(Subspace::trivial(3), line({1, 2, 3})) == 0.0);
  CHECK(subspace_delta(line({1, 2, 3}), Subspace::trivial(3)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(subspace_delta(line({1, 0}), line({1, 0, 0})), InputError);
}

TEST_CASE("subspace_delta is not symmetric") {
  Eigen::MatrixXd plane(3, 2);
  plane << 1, 0, 0, 1, 0, 0;
  const Subspace P(3, plane);
  const Subspace L = line({1, 0, 0});
  CHECK(subspace_delta(L, P) < 1e-15);
  CHECK(subspace_delta(P, L) == doctest::Approx(1.0));
}

TEST_CASE("subspace_delta lies in [0,1] and vanishes exactly on containment") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 4;
    const int k1 = 1 + static_cast<int>(rng.uniform() * n);
    const int k2 = static_cast<int>(rng.uniform() * (n + 1));
    const Subspace V1 = random_subspace(n, std::min(k1, n), rng);
    const Subspace V2 = random_subspace(n, std::min(k2, n), rng);
    const double d = subspace_delta(V1, V2);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0 + 1e-12);
    CHECK((d < 1e-9) == contained(V1, V2));
  }
  // Nested pairs: a random subspace inside a larger one.
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + trial % 3;
    const Subspace big = random_subspace(n, n - 1, rng);
    Eigen::MatrixXd c(n - 1, 1);
    for (int i = 0; i < n - 1; ++i) c(i, 0) = rng.normal();
    const Subspace small = Subspace::span(big.basis() * c);
    REQUIRE(contained(small, big));
    CHECK(subspace_delta(small, big) < 1e-9);
  }
}

TEST_CASE("Subspace rejects non-orthonormal bases") {
  Eigen::MatrixXd b(2, 1);
  b << 1, 1;
  CHECK_THROWS_AS(Subspace(2, b), InputError);
  Eigen::MatrixXd c(2, 3);
  c.setZero();
  CHECK_THROWS_AS(Subspace(2, c), InputError);
}

TEST_CASE("tangent_space examples") {
  const auto circle = poly(2, {{1, {2, 0}}, {1, {0, 2}}, {-1, {0, 0}}});
  const Subspace T = tangent_space(PolySystem(2, {circle}), pt({1, 0}));
  REQUIRE(T.dim() == 1);
  CHECK(subspace_delta(T, line({0, 1})) < 1e-12);

  const Subspace open = tangent_space(PolySystem(2), pt({0, 0}));
  CHECK(open.dim() == 2);

  // Oracle: the normal of {y = x^2} at (1,1) is (-2,1); the tangent is its complement.
  const auto parabola = poly(2, {{1, {0, 1}}, {-1, {2, 0}}});
  const Subspace P = tangent_space(PolySystem(2, {parabola}), pt({1, 1}));
  REQUIRE(P.dim() == 1);
  const Eigen::Vector2d normal(-2, 1);
  CHECK(std::abs(P.basis().col(0).dot(normal)) < 1e-12);
  CHECK(subspace_delta(P, line({1, 2})) < 1e-12);

  CHECK_THROWS_AS(tangent_space(PolySystem(2, {circle}), pt({2, 0})), InputError);
}

TEST_CASE("sphere_tangent_intersection examples") {
  const Subspace a = sphere_tangent_intersection(Subspace::full(2), pt({0, 3}));
  REQUIRE(a.dim() == 1);
  CHECK(subspace_delta(a, line({1, 0})) < 1e-12);

  CHECK(sphere_tangent_intersection(line({1, 0}), pt({2, 0})).is_trivial());

  Eigen::MatrixXd h(3, 2);
  h << 1, 0, 0, 1, 0, 0;
  const Subspace c = sphere_tangent_intersection(Subspace::full(3), pt({0, 0, 5}));
  REQUIRE(c.dim() == 2);
  CHECK(subspace_delta(c, Subspace(3, h)) < 1e-12);
  CHECK(subspace_delta(Subspace(3, h), c) < 1e-12);

  CHECK_THROWS_AS(sphere_tangent_intersection(Subspace::full(2), pt({0, 0})), DomainError);
}

TEST_CASE("sphere_tangent_intersection is orthogonal to x and inside T") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 4;
    const Subspace T = random_subspace(n, 1 + trial % n, rng);
    Point x(n);
    for (int j = 0; j < n; ++j) x(j) = rng.uniform(-3, 3);
    const Subspace S = sphere_tangent_intersection(T, x);
    for (int j = 0; j < S.dim(); ++j) CHECK(std::abs(S.basis().col(j).dot(x)) < 1e-12 * (1 + x.norm()));
    CHECK(contained(S, T));
    CHECK(S.dim() >= T.dim() - 1);
  }
}

TEST_CASE("nu_min_singular examples and errors") {
  CHECK(nu_min_singular(Eigen::Matrix2d::Identity()) == doctest::Approx(1.0));
  CHECK(nu_min_singular(Eigen::MatrixXd::Zero(1, 2)) == 0.0);
  Eigen::MatrixXd d(2, 2);
  d << 3, 0, 0, 4;
  CHECK(nu_min_singular(d) == doctest::Approx(3.0));
  CHECK_THROWS_AS(nu_min_singular(Eigen::MatrixXd::Ones(3, 2)), InputError);
}

TEST_CASE("nu_min_singular matches brute-force minimum over unit covectors") {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::MatrixXd J(2, 3);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) J(i, j) = rng.uniform(-2, 2);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
      Eigen::Vector2d phi(rng.normal(), rng.normal());
      phi.normalize();
      best = std::min(best, (J.transpose() * phi).norm());
    }
    const double nu = nu_min_singular(J);
    CHECK(nu <= best + 1e-12);
    CHECK(best <= 1.05 * nu + 1e-12);
  }
}

TEST_CASE("null_space") {
  Eigen::MatrixXd A(1, 3);
  A << 1, 1, 0;
  const Eigen::MatrixXd N = null_space(A);
  CHECK(N.cols() == 2);
  CHECK((A * N).norm() < 1e-12);
  CHECK((N.transpose() * N - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK(null_space(Eigen::MatrixXd::Zero(2, 3)).cols() == 3);
}
