#include "stratfib/strata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "stratfib/errors.hpp"

namespace stratfib {

Stratum::Stratum(std::string id, PolySystem equations, PolySystem inequalities, int declared_dim)
    : id_(std::move(id)),
      equations_(std::move(equations)),
      inequalities_(std::move(inequalities)),
      declared_dim_(declared_dim) {
  if (id_.empty()) throw InputError("stratum: empty id");
  if (equations_.nvars() != inequalities_.nvars())
    throw InputError("stratum " + id_ + ": equations and inequalities disagree on nvars");
  if (declared_dim_ < 0 || declared_dim_ > equations_.nvars())
    throw InputError("stratum " + id_ + ": declared dimension out of range");
  if (equations_.empty() && declared_dim_ != equations_.nvars())
    throw InputError("stratum " + id_ + ": a stratum without equations is open");
}

double Stratum::equation_residual(const Point& x) const {
  if (equations_.empty()) return 0.0;
  return equations_.eval(x).lpNorm<Eigen::Infinity>();
}

bool Stratum::inequalities_hold(const Point& x) const {
  if (inequalities_.empty()) return true;
  return (inequalities_.eval(x).array() > 0.0).all();
}

double Stratum::inequality_margin(const Point& x) const {
  double margin = std::numeric_limits<double>::infinity();
  if (inequalities_.empty()) return margin;
  const Eigen::VectorXd g = inequalities_.eval(x);
  const Eigen::MatrixXd J = inequalities_.jacobian(x);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!(g(i) > 0.0)) return -std::numeric_limits<double>::infinity();
    const double grad = J.row(i).norm();
    if (grad > 0.0) margin = std::min(margin, g(i) / grad);
  }
  return margin;
}

bool Stratum::contains(const Point& x, double tol) const {
  if (equation_residual(x) > tol) return false;
  // Strict inequalities are read through the first-order distance to {g = 0}, with the
  // same tolerance, so boundary points belong to one stratum.
  return inequality_margin(x) > tol;
}

Subspace Stratum::tangent(const Point& x, double rank_tol) const {
  if (equations_.empty()) return Subspace::full(nvars());
  return Subspace(nvars(), null_space(equations_.jacobian(x), rank_tol));
}

int Stratum::dimension_at(const Point& x, double rank_tol) const { return tangent(x, rank_tol).dim(); }

// Stratification

Stratification::Stratification(int nvars, std::vector<Stratum> strata,
                               std::vector<FrontierPair> frontier)
    : nvars_(nvars), strata_(std::move(strata)), frontier_(std::move(frontier)) {
  if (nvars_ <= 0) throw InputError("stratification: nvars must be positive");
  if (strata_.empty()) throw InputError("stratification: needs at least one stratum");
  std::set<std::string> ids;
  for (const auto& s : strata_) {
    if (s.nvars() != nvars_) throw InputError("stratification: stratum " + s.id() + " has wrong nvars");
    if (!ids.insert(s.id()).second) throw InputError("stratification: duplicate stratum id " + s.id());
  }
  for (const auto& p : frontier_) {
    if (!ids.count(p.sub)) throw InputError("frontier: unknown stratum " + p.sub);
    if (!ids.count(p.super)) throw InputError("frontier: unknown stratum " + p.super);
    if (p.sub == p.super) throw InputError("frontier: pair (" + p.sub + ", " + p.super + ") is reflexive");
    if (stratum(p.sub).declared_dim() >= stratum(p.super).declared_dim())
      throw InputError("frontier: " + p.sub + " must have smaller dimension than " + p.super);
  }
  for (const auto& a : frontier_) {
    for (const auto& b : frontier_) {
      if (a.super == b.sub && !declared(a.sub, b.super))
        throw InputError("frontier: not transitive, (" + a.sub + ", " + b.super + ") missing");
    }
  }
}

int Stratification::max_dim() const {
  int d = 0;
  for (const auto& s : strata_) d = std::max(d, s.declared_dim());
  return d;
}

std::size_t Stratification::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < strata_.size(); ++i)
    if (strata_[i].id() == id) return i;
  throw InputError("unknown stratum id " + id);
}

const Stratum& Stratification::stratum(const std::string& id) const { return strata_[index_of(id)]; }

bool Stratification::declared(const std::string& sub, const std::string& super) const {
  return std::any_of(frontier_.begin(), frontier_.end(),
                     [&](const FrontierPair& p) { return p.sub == sub && p.super == super; });
}

std::vector<std::string> Stratification::frontier_of(const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& p : frontier_)
    if (p.super == id) out.push_back(p.sub);
  return out;
}

Stratification trivial_stratification(int nvars) {
  return Stratification(nvars, {Stratum("X", PolySystem(nvars), PolySystem(nvars), nvars)}, {});
}

std::optional<std::string> locate_stratum(const Stratification& W, const Point& x, double tol) {
  if (!(tol > 0.0)) throw InputError("locate_stratum: tol must be positive");
  if (x.size() != W.nvars()) throw InputError("locate_stratum: dimension mismatch");
  std::optional<std::string> found;
  for (const auto& s : W.strata()) {
    if (!s.contains(x, tol)) continue;
    if (found) {
      std::ostringstream msg;
      msg << "strata " << *found << " and " << s.id() << " both contain the point";
      throw ConsistencyError(msg.str());
    }
    found = s.id();
  }
  return found;
}

// Regions

Box Box::cube(int n, double half_width) {
  return Box{Eigen::VectorXd::Constant(n, -half_width), Eigen::VectorXd::Constant(n, half_width)};
}

bool Box::contains(const Eigen::VectorXd& x) const {
  return x.size() == lo.size() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

Eigen::VectorXd Shell::center_or_origin(int n) const {
  return center.size() == 0 ? Eigen::VectorXd::Zero(n) : center;
}

bool Shell::contains(const Eigen::VectorXd& x) const {
  const double r = (x - center_or_origin(static_cast<int>(x.size()))).norm();
  const double slack = 1e-9 * (1.0 + rmax);
  return r >= rmin - slack && r <= rmax + slack;
}

bool region_contains(const Region& region, const Point& x) {
  return std::visit([&](const auto& r) { return r.contains(x); }, region);
}

namespace {

int region_dim(const Region& region) {
  return std::visit(
      [](const auto& r) -> int {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Box>)
          return r.dim();
        else
          return static_cast<int>(r.center.size());
      },
      region);
}

}  // namespace

SampleResult sample_stratum(const Stratum& s, const Region& region, int count, std::uint64_t seed,
                            const SamplingOptions& options) {
  if (count <= 0) throw InputError("sample_stratum: count must be positive");
  const int n = s.nvars();
  const int rdim = region_dim(region);
  if (rdim != 0 && rdim != n) throw InputError("sample_stratum: region dimension mismatch");

  Rng rng(seed);
  SampleResult result;
  const long budget = static_cast<long>(count) * options.attempts_per_point;
  for (long attempt = 0; attempt < budget && static_cast<int>(result.points.size()) < count;
       ++attempt) {
    Point u(n);
    std::optional<Polynomial> sphere;
    if (const auto* box = std::get_if<Box>(&region)) {
      for (int j = 0; j < n; ++j) u(j) = rng.uniform(box->lo(j), box->hi(j));
    } else {
      const auto& shell = std::get<Shell>(region);
      const Eigen::VectorXd c = shell.center_or_origin(n);
      const double r = rng.uniform(shell.rmin, shell.rmax);
      u = c + r * rng.unit_vector(n);
      // Alternate plain projection with projection onto the sphere of the drawn radius,
      // which keeps far shells reachable for strata of positive dimension.
      if (!s.equations().empty() && s.declared_dim() > 0 && (attempt % 2 == 0))
        sphere = sphere_polynomial(c, r);
    }
    Point x;
    try {
      if (sphere) {
        const Polynomial extra[] = {*sphere};
        x = newton_project(s.equations().with(extra), u, options.tol * (1.0 + u.squaredNorm()),
                           options.max_iter);
      } else {
        x = newton_project(s.equations(), u, options.tol, options.max_iter);
      }
    } catch (const ProjectionError&) {
      continue;
    }
    if (!x.allFinite() || !(s.inequality_margin(x) > options.tol) || !region_contains(region, x)) continue;
    if (s.equation_residual(x) > std::max(options.tol, 1e-12 * (1.0 + x.squaredNorm()))) {
      try {
        x = newton_project(s.equations(), x, options.tol, options.max_iter);
      } catch (const ProjectionError&) {
        continue;
      }
      if (!(s.inequality_margin(x) > options.tol) || !region_contains(region, x)) continue;
    }
    result.points.push_back(std::move(x));
  }
  if (result.points.empty()) {
    result.warning = "empty sample: no point of stratum " + s.id() + " found in region";
  } else if (static_cast<int>(result.points.size()) < count) {
    std::ostringstream msg;
    msg << "coverage: " << result.points.size() << " of " << count << " points found on stratum "
        << s.id();
    result.warning = msg.str();
  }
  return result;
}

std::optional<Point> sample_near(const Stratum& s, const Point& y, double radius, Rng& rng,
                                 const SamplingOptions& options, int tries) {
  const int n = s.nvars();
  for (int k = 0; k < tries; ++k) {
    const Point u = y + radius * rng.uniform(0.2, 1.0) * rng.unit_vector(n);
    Point x;
    try {
      x = newton_project(s.equations(), u, options.tol, options.max_iter);
    } catch (const ProjectionError&) {
      continue;
    }
    if (!s.inequalities_hold(x)) continue;
    const double d = (x - y).norm();
    if (d <= radius && d > 0.0) return x;
    if (d == 0.0 && s.declared_dim() == 0) return x;
  }
  return std::nullopt;
}

}  // namespace stratfib
