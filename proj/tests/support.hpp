#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "stratfib/algebra.hpp"
#include "stratfib/strata.hpp"

namespace test {

using stratfib::Point;
using stratfib::PolyMap;
using stratfib::Polynomial;
using stratfib::PolySystem;
using stratfib::Stratification;
using stratfib::Stratum;

inline Polynomial poly(int n, std::initializer_list<std::pair<double, std::vector<int>>> terms) {
  std::vector<stratfib::Term> ts;
  for (const auto& [c, e] : terms) ts.push_back({c, e});
  return Polynomial(n, std::move(ts));
}

inline Point pt(std::initializer_list<double> v) {
  Point x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x(i++) = c;
  return x;
}

inline PolyMap map1(const Polynomial& p) { return PolyMap(p.nvars(), {p}); }

inline Stratum stratum(const std::string& id, int n, std::vector<Polynomial> eqs,
                       std::vector<Polynomial> ineqs, int dim) {
  return Stratum(id, PolySystem(n, std::move(eqs)), PolySystem(n, std::move(ineqs)), dim);
}

// f = x + x^2 y
inline Polynomial broughton() { return poly(2, {{1, {1, 0}}, {1, {2, 1}}}); }
inline Polynomial x_coord(int n = 2) { return Polynomial::variable(n, 0); }
inline Polynomial y_coord(int n = 2) { return Polynomial::variable(n, 1); }

// {xy = 0} as the origin and four open rays.
inline Stratification cross() {
  const auto x = x_coord(), y = y_coord();
  std::vector<Stratum> s;
  s.push_back(stratum("origin", 2, {x, y}, {}, 0));
  s.push_back(stratum("east", 2, {y}, {x}, 1));
  s.push_back(stratum("west", 2, {y}, {x * -1.0}, 1));
  s.push_back(stratum("north", 2, {x}, {y}, 1));
  s.push_back(stratum("south", 2, {x}, {y * -1.0}, 1));
  return Stratification(2, std::move(s),
                        {{"origin", "east"}, {"origin", "west"}, {"origin", "north"}, {"origin", "south"}});
}

// {0} and the punctured plane.
inline Stratification punctured() {
  const auto x = x_coord(), y = y_coord();
  std::vector<Stratum> s;
  s.push_back(stratum("origin", 2, {x, y}, {}, 0));
  s.push_back(stratum("rest", 2, {}, {x * x + y * y}, 2));
  return Stratification(2, std::move(s), {{"origin", "rest"}});
}

// The x-axis and the two open half-planes.
inline Stratification halfplanes() {
  const auto y = y_coord();
  std::vector<Stratum> s;
  s.push_back(stratum("line", 2, {y}, {}, 1));
  s.push_back(stratum("upper", 2, {}, {y}, 2));
  s.push_back(stratum("lower", 2, {}, {y * -1.0}, 2));
  return Stratification(2, std::move(s), {{"line", "upper"}, {"line", "lower"}});
}

}  // namespace test
