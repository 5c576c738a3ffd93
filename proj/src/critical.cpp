#include "stratfib/critical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "branches.hpp"
#include "stratfib/errors.hpp"

namespace stratfib {

std::vector<double> Ladder::radii() const {
  if (!(r0 > 0.0) || !(factor > 0.0) || factor == 1.0 || count < 1)
    throw InputError("ladder: needs r0 > 0, factor > 0 and != 1, count >= 1");
  std::vector<double> out;
  double r = r0;
  for (int k = 0; k < count; ++k, r *= factor) out.push_back(r);
  return out;
}

// LimitValueSet

void LimitValueSet::add(Atom atom) {
  if (atom.center.size() != dim_) throw InputError("atom: center has wrong dimension");
  if (!(atom.radius >= 0.0)) throw InputError("atom: radius must be non-negative");
  if (atom.evidence.empty()) throw InputError("atom: needs at least one evidence entry");
  atoms_.push_back(std::move(atom));
}

void LimitValueSet::absorb(const LimitValueSet& other) {
  if (other.dim_ != dim_) throw InputError("limit value sets of different dimension");
  for (const auto& a : other.atoms_) atoms_.push_back(a);
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

namespace {

Atom enclose(const Atom& a, const Atom& b) {
  Atom out;
  const double d = (b.center - a.center).norm();
  if (d + b.radius <= a.radius) {
    out.center = a.center;
    out.radius = a.radius;
  } else if (d + a.radius <= b.radius) {
    out.center = b.center;
    out.radius = b.radius;
  } else {
    out.radius = 0.5 * (d + a.radius + b.radius);
    out.center = a.center + (out.radius - a.radius) / d * (b.center - a.center);
  }
  out.evidence = a.evidence;
  out.evidence.insert(out.evidence.end(), b.evidence.begin(), b.evidence.end());
  // Widen slightly so evidence stays inside after rounding.
  double reach = out.radius;
  for (const auto& e : out.evidence) reach = std::max(reach, (e.value - out.center).norm());
  out.radius = reach;
  out.low_confidence = a.low_confidence || b.low_confidence;
  if (a.source == b.source || b.source.empty())
    out.source = a.source;
  else if (a.source.empty())
    out.source = b.source;
  else
    out.source = a.source < b.source ? a.source + "+" + b.source : b.source + "+" + a.source;
  return out;
}

bool center_less(const Atom& a, const Atom& b) {
  for (Eigen::Index i = 0; i < a.center.size(); ++i)
    if (a.center(i) != b.center(i)) return a.center(i) < b.center(i);
  return a.radius < b.radius;
}

}  // namespace

void LimitValueSet::merge(double tol) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < atoms_.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < atoms_.size() && !changed; ++j) {
        const double d = (atoms_[i].center - atoms_[j].center).norm();
        if (d <= atoms_[i].radius + atoms_[j].radius + tol) {
          atoms_[i] = enclose(atoms_[i], atoms_[j]);
          atoms_.erase(atoms_.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
        }
      }
    }
  }
  std::sort(atoms_.begin(), atoms_.end(), center_less);
}

bool LimitValueSet::contains(const Eigen::VectorXd& v, double tol) const {
  return distance(v) <= tol;
}

double LimitValueSet::distance(const Eigen::VectorXd& v) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : atoms_) best = std::min(best, std::max(0.0, (v - a.center).norm() - a.radius));
  return best;
}

double distance_to_box(const Eigen::VectorXd& v, const Box& B) {
  if (v.size() != B.dim()) throw InputError("distance_to_box: dimension mismatch");
  return (v - v.cwiseMax(B.lo).cwiseMin(B.hi)).norm();
}

// Certificates

namespace {

struct Singulars {
  double min = 0.0;
  double max = 0.0;
};

Singulars milnor_singulars(const PolyMap& f, const Stratum& s, const Point& x, double rank_tol) {
  const Eigen::MatrixXd Q = s.tangent(x, rank_tol).basis();
  const int m = f.dim();
  const Eigen::Index d = Q.cols();
  const double xn = x.norm();
  if (d == 0 || xn == 0.0 || m + 1 > d) return {0.0, 1.0};
  const Eigen::MatrixXd J = f.jacobian(x);
  Eigen::MatrixXd A(m + 1, d);
  for (int i = 0; i < m; ++i) {
    const double gn = J.row(i).norm();
    if (gn == 0.0) return {0.0, 1.0};
    A.row(i) = (J.row(i) * Q) / gn;
  }
  A.row(m) = (x.transpose() / xn) * Q;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  return {sv(m), sv(0)};
}

Singulars sing_singulars(const PolyMap& f, const Stratum& s, const Point& x, double rank_tol) {
  const Eigen::MatrixXd Q = s.tangent(x, rank_tol).basis();
  const int m = f.dim();
  const Eigen::Index d = Q.cols();
  if (m > d) return {0.0, 0.0};
  const Eigen::MatrixXd A = f.jacobian(x) * Q;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  return {sv(m - 1), sv(0)};
}

}  // namespace

double milnor_certificate(const PolyMap& f, const Stratum& s, const Point& x, double rank_tol) {
  return milnor_singulars(f, s, x, rank_tol).min;
}

bool is_milnor_point(const PolyMap& f, const Stratum& s, const Point& x,
                     const CriticalOptions& options) {
  const auto sv = milnor_singulars(f, s, x, 1e-8);
  return sv.min < options.rank_threshold * (1.0 + sv.max);
}

double sing_certificate(const PolyMap& f, const Stratum& s, const Point& x, double rank_tol) {
  return sing_singulars(f, s, x, rank_tol).min;
}

bool is_singular_point(const PolyMap& f, const Stratum& s, const Point& x,
                       const CriticalOptions& options) {
  const auto sv = sing_singulars(f, s, x, 1e-8);
  return sv.min < options.rank_threshold * (1.0 + sv.max);
}

// Refinement

namespace {

// Unknowns z = (x, lambda, [mu], nu); residuals
//   E(x) = 0, J_f^T lambda + mu x + J_E^T nu = 0, (|lambda|^2 + mu^2 - 1)/2 = 0,
//   and |x - c| - r = 0 on a sphere.
struct CriticalSystem {
  const PolyMap& f;
  const PolySystem& E;
  bool with_rho;
  const std::optional<SphereConstraint>& sphere;

  int n() const { return f.nvars(); }
  int m() const { return f.dim(); }
  int k() const { return E.size(); }
  int nmu() const { return with_rho ? 1 : 0; }
  int unknowns() const { return n() + m() + nmu() + k(); }
  int residuals() const { return k() + n() + 1 + (sphere ? 1 : 0); }

  void eval(const Eigen::VectorXd& z, Eigen::VectorXd& F, Eigen::MatrixXd* Jz) const {
    const int n_ = n(), m_ = m(), k_ = k(), q = nmu();
    const Point x = z.head(n_);
    const Eigen::VectorXd lam = z.segment(n_, m_);
    const double mu = with_rho ? z(n_ + m_) : 0.0;
    const Eigen::VectorXd nu = z.tail(k_);
    const Eigen::MatrixXd Jf = f.jacobian(x);

    F.setZero(residuals());
    int row = 0;
    Eigen::MatrixXd JE;
    if (k_ > 0) {
      F.head(k_) = E.eval(x);
      JE = E.jacobian(x);
      row = k_;
    }
    Eigen::VectorXd L = Jf.transpose() * lam;
    if (with_rho) L += mu * x;
    if (k_ > 0) L += JE.transpose() * nu;
    F.segment(row, n_) = L;
    F(row + n_) = 0.5 * (lam.squaredNorm() + mu * mu - 1.0);
    if (sphere) F(row + n_ + 1) = (x - sphere->center).norm() - sphere->radius;

    if (!Jz) return;
    Jz->setZero(residuals(), unknowns());
    if (k_ > 0) Jz->block(0, 0, k_, n_) = JE;
    Eigen::MatrixXd Lx = Eigen::MatrixXd::Zero(n_, n_);
    for (int i = 0; i < m_; ++i) Lx += lam(i) * f.hessian(i, x);
    if (with_rho) Lx += mu * Eigen::MatrixXd::Identity(n_, n_);
    for (int j = 0; j < k_; ++j) Lx += nu(j) * E.hessian(j, x);
    Jz->block(row, 0, n_, n_) = Lx;
    Jz->block(row, n_, n_, m_) = Jf.transpose();
    if (with_rho) Jz->block(row, n_ + m_, n_, 1) = x;
    if (k_ > 0) Jz->block(row, n_ + m_ + q, n_, k_) = JE.transpose();
    Jz->block(row + n_, n_, 1, m_) = lam.transpose();
    if (with_rho) (*Jz)(row + n_, n_ + m_) = mu;
    if (sphere) {
      const Eigen::VectorXd d = x - sphere->center;
      const double dn = d.norm();
      if (dn > 0.0) Jz->block(row + n_ + 1, 0, 1, n_) = d.transpose() / dn;
    }
  }
};

std::optional<Point> project_with(const Stratum& s, const Point& x,
                                  const std::optional<SphereConstraint>& sphere, int max_iter) {
  std::vector<Polynomial> extra;
  if (sphere) extra.push_back(sphere_polynomial(sphere->center, sphere->radius));
  const PolySystem sys = s.equations().with(extra);
  const double scale = 1.0 + x.squaredNorm() + (sphere ? sphere->radius * sphere->radius : 0.0);
  try {
    return newton_project(sys, x, 1e-12 * scale, max_iter);
  } catch (const ProjectionError&) {
    return std::nullopt;
  }
}

}  // namespace

std::optional<Point> refine_critical(const PolyMap& f, const Stratum& s, const Point& seed,
                                     bool with_rho, const std::optional<SphereConstraint>& sphere,
                                     const CriticalOptions& options) {
  const int n = f.nvars();
  const int m = f.dim();
  if (seed.size() != n || s.nvars() != n) throw InputError("refine_critical: dimension mismatch");
  require_finite(seed, "refine_critical");

  Point x = project_with(s, seed, sphere, options.max_iter).value_or(seed);
  const CriticalSystem sys{f, s.equations(), with_rho, sphere};
  const int k = sys.k();

  // Multipliers from the smallest left singular vector of the restricted gradients.
  Eigen::VectorXd z(sys.unknowns());
  z.head(n) = x;
  {
    const Eigen::MatrixXd Q = s.equations().empty() ? Eigen::MatrixXd::Identity(n, n)
                                                    : null_space(s.equations().jacobian(x), 1e-8);
    const int rows = m + sys.nmu();
    Eigen::MatrixXd A(rows, n);
    A.topRows(m) = f.jacobian(x);
    if (with_rho) A.row(m) = x.transpose();
    Eigen::VectorXd w = Eigen::VectorXd::Unit(rows, 0);
    if (Q.cols() > 0) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(A * Q, Eigen::ComputeFullU);
      w = svd.matrixU().col(rows - 1);
    }
    z.segment(n, rows) = w;
    if (k > 0) {
      const Eigen::MatrixXd JE = s.equations().jacobian(x);
      z.tail(k) = -pseudo_inverse(JE.transpose()) * (A.transpose() * w);
    }
  }

  Eigen::VectorXd F;
  Eigen::MatrixXd Jz;
  sys.eval(z, F, &Jz);
  double res = F.norm();
  for (int it = 0; it < options.max_iter; ++it) {
    if (!(res > 0.0)) break;
    Eigen::VectorXd step = pseudo_inverse(Jz, 1e-13) * F;
    // Trust region on the x-part keeps refinement on the branch nearest the seed.
    const double cap = 0.1 * (1.0 + z.head(n).norm());
    const double dx = step.head(n).norm();
    if (dx > cap) step *= cap / dx;
    double a = 1.0;
    bool accepted = false;
    Eigen::VectorXd Ft;
    for (int h = 0; h < 30; ++h, a *= 0.5) {
      const Eigen::VectorXd zt = z - a * step;
      if (!zt.allFinite()) continue;
      sys.eval(zt, Ft, nullptr);
      if (Ft.norm() < res) {
        z = zt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    sys.eval(z, F, &Jz);
    res = F.norm();
    if (a * step.norm() <= 1e-16 * (1.0 + z.norm())) break;
  }

  x = z.head(n);
  if (!x.allFinite()) return std::nullopt;
  const auto projected = project_with(s, x, sphere, options.max_iter);
  if (!projected) return std::nullopt;
  x = *projected;
  if (!s.inequalities_hold(x)) return std::nullopt;
  if (sphere && std::abs((x - sphere->center).norm() - sphere->radius) > 1e-8 * (1.0 + sphere->radius))
    return std::nullopt;
  const bool ok = with_rho ? is_milnor_point(f, s, x, options) : is_singular_point(f, s, x, options);
  if (!ok) return std::nullopt;
  return x;
}

namespace {

void check_dimension(const PolyMap& f, const Stratum& s) {
  if (f.nvars() != s.nvars()) throw InputError("map and stratum disagree on nvars");
}

bool has_near(const std::vector<Point>& pts, const Point& x, double tol) {
  return std::any_of(pts.begin(), pts.end(), [&](const Point& p) { return (p - x).norm() <= tol; });
}

}  // namespace

MilnorSample milnor_sample(const PolyMap& f, const Stratum& s, const Region& region, int count,
                           std::uint64_t seed, const CriticalOptions& options) {
  check_dimension(f, s);
  if (count <= 0) throw InputError("milnor_sample: count must be positive");
  MilnorSample out{s.id(), {}, {}};
  const int m = f.dim();
  if (s.declared_dim() <= m) {
    // The whole stratum is Milnor when its dimension does not exceed m.
    for (auto& p : sample_stratum(s, region, count, seed, options.sampling).points) {
      out.residuals.push_back(milnor_certificate(f, s, p));
      out.points.push_back(std::move(p));
    }
    return out;
  }
  Rng rng(seed);
  for (int batch = 0; batch < 8 && static_cast<int>(out.points.size()) < count; ++batch) {
    const auto seeds = sample_stratum(s, region, count, rng.next(), options.sampling).points;
    if (seeds.empty()) break;
    for (const auto& sd : seeds) {
      if (static_cast<int>(out.points.size()) >= count) break;
      const auto x = refine_critical(f, s, sd, true, std::nullopt, options);
      if (!x || !region_contains(region, *x)) continue;
      if (has_near(out.points, *x, 1e-9 * (1.0 + x->norm()))) continue;
      out.residuals.push_back(milnor_certificate(f, s, *x));
      out.points.push_back(*x);
    }
  }
  return out;
}

namespace {

// Single-linkage clusters of values; each becomes one atom.
void cluster_values(const std::vector<Point>& points, const PolyMap& f, const std::string& stratum,
                    const std::string& source, LimitValueSet& out) {
  std::vector<Eigen::VectorXd> values;
  for (const auto& p : points) values.push_back(f(p));
  const std::size_t N = values.size();
  std::vector<int> label(N, -1);
  int next = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (label[i] >= 0) continue;
    label[i] = next;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < N; ++b) {
        if (label[b] >= 0) continue;
        if ((values[a] - values[b]).norm() <= 1e-6 * (1.0 + values[a].norm())) {
          label[b] = next;
          stack.push_back(b);
        }
      }
    }
    ++next;
  }
  for (int c = 0; c < next; ++c) {
    Atom atom;
    atom.source = source;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(f.dim());
    int cnt = 0;
    for (std::size_t i = 0; i < N; ++i) {
      if (label[i] != c) continue;
      sum += values[i];
      ++cnt;
      atom.evidence.push_back({points[i].norm(), values[i], stratum});
    }
    atom.center = sum / cnt;
    for (const auto& e : atom.evidence)
      atom.radius = std::max(atom.radius, (e.value - atom.center).norm());
    out.add(std::move(atom));
  }
}

}  // namespace

LimitValueSet sing_values_sample(const PolyMap& f, const Stratum& s, const Region& region,
                                 int count, std::uint64_t seed, const CriticalOptions& options) {
  check_dimension(f, s);
  if (count <= 0) throw InputError("sing_values_sample: count must be positive");
  const int m = f.dim();
  LimitValueSet out(m);
  std::vector<Point> points;
  if (s.declared_dim() < m) {
    for (auto& p : sample_stratum(s, region, count, seed, options.sampling).points)
      if (!has_near(points, p, 1e-9 * (1.0 + p.norm()))) points.push_back(std::move(p));
  } else {
    const auto seeds = sample_stratum(s, region, count, seed, options.sampling).points;
    for (const auto& sd : seeds) {
      const auto x = refine_critical(f, s, sd, false, std::nullopt, options);
      if (!x || !region_contains(region, *x)) continue;
      if (!has_near(points, *x, 1e-9 * (1.0 + x->norm()))) points.push_back(*x);
    }
  }
  cluster_values(points, f, s.id(), "sing", out);
  out.merge(0.0);
  return out;
}

// S-infinity

namespace {

struct NormScan {
  detail::TrackResult track;
  std::vector<double> radii;
};

NormScan norm_scan(const PolyMap& f, const Stratum& s, const Ladder& schedule, std::uint64_t seed,
                   const CriticalOptions& options) {
  NormScan out;
  out.radii = schedule.radii();
  for (std::size_t i = 1; i < out.radii.size(); ++i)
    if (!(out.radii[i] > out.radii[i - 1])) throw InputError("schedule radii must increase");
  out.track.levels.resize(out.radii.size());
  if (s.declared_dim() == 0) return out;

  const int n = f.nvars();
  const bool whole = s.declared_dim() <= f.dim();
  SamplingOptions seeding = options.sampling;
  seeding.attempts_per_point = 20;

  detail::TrackHooks hooks;
  hooks.radii = out.radii;
  hooks.dedupe_rel = 1e-6;
  hooks.fresh = [&](int level, Rng& rng) {
    const double R = out.radii[static_cast<std::size_t>(level)];
    return sample_stratum(s, Shell{Eigen::VectorXd::Zero(n), R, R}, options.seeds_per_level,
                          rng.next(), seeding)
        .points;
  };
  hooks.solve = [&](int level, const Point& sd) -> std::optional<Point> {
    const SphereConstraint sphere{Eigen::VectorXd::Zero(n), out.radii[static_cast<std::size_t>(level)]};
    if (whole) {
      auto x = project_with(s, sd, sphere, options.max_iter);
      if (!x || !s.inequalities_hold(*x)) return std::nullopt;
      return x;
    }
    return refine_critical(f, s, sd, true, sphere, options);
  };
  hooks.predict = [&](int level, const detail::Branch& b) {
    return detail::predict_shell(out.radii, level, b);
  };
  Rng rng(seed);
  out.track = detail::track_branches(hooks, rng);
  return out;
}

void emit_branch_atoms(const detail::TrackResult& track, const PolyMap& f, const std::string& stratum,
                       const std::string& source, const CriticalOptions& options,
                       LimitValueSet& out) {
  for (const auto& b : track.branches) {
    std::vector<Eigen::VectorXd> values;
    for (const auto& p : b.points) values.push_back(f(p));
    const auto lim = detail::sequence_limit(values, options.convergence_ratio,
                                            options.convergence_window);
    if (!lim) continue;
    Atom atom;
    atom.center = lim->first;
    atom.radius = lim->second;
    atom.evidence.push_back({b.points.back().norm(), values.back(), stratum});
    atom.low_confidence = b.ambiguous || b.lost;
    atom.source = source;
    out.add(std::move(atom));
  }
}

}  // namespace

InfinityScan s_infinity_scan(const PolyMap& f, const Stratum& s, const Stratification& W,
                             const Ladder& schedule, std::uint64_t seed,
                             const CriticalOptions& options) {
  check_dimension(f, s);
  if (W.nvars() != f.nvars()) throw InputError("map and stratification disagree on nvars");
  const int n = f.nvars();
  const int m = f.dim();
  InfinityScan out{LimitValueSet(m), {}};

  const NormScan ns = norm_scan(f, s, schedule, derive_seed(seed, 0), options);
  for (std::size_t i = 0; i < ns.radii.size(); ++i) {
    ScanLevel lvl{ns.radii[i], ns.track.levels[i], {}};
    for (const auto& p : lvl.points) lvl.values.push_back(f(p));
    out.norm_levels.push_back(std::move(lvl));
  }
  emit_branch_atoms(ns.track, f, s.id(), "norm", options, out.atoms);

  // Escape toward the frontier: Milnor points on shrinking tubes around each frontier stratum.
  const auto tubes = options.tube.radii();
  for (std::size_t i = 1; i < tubes.size(); ++i)
    if (!(tubes[i] < tubes[i - 1])) throw InputError("tube radii must decrease");
  const bool whole = s.declared_dim() <= m;
  std::uint64_t salt = 1;
  for (const auto& beta_id : W.frontier_of(s.id())) {
    const Stratum& beta = W.stratum(beta_id);
    std::vector<Point> bases;
    for (auto& p : sample_stratum(beta, Box::cube(n, options.frontier_box), options.frontier_points,
                                  derive_seed(seed, 1000 + salt), options.sampling)
                       .points)
      if (!has_near(bases, p, 1e-9 * (1.0 + p.norm()))) bases.push_back(std::move(p));
    if (bases.empty()) {
      out.atoms.warnings.push_back("no base points sampled on frontier stratum " + beta_id);
      continue;
    }
    auto onto_beta = [&](const Point& x) -> std::optional<Point> {
      try {
        Point c = newton_project(beta.equations(), x, options.sampling.tol, options.max_iter);
        if (!beta.inequalities_hold(c)) return std::nullopt;
        return c;
      } catch (const ProjectionError&) {
        return std::nullopt;
      }
    };
    detail::TrackHooks hooks;
    hooks.radii = tubes;
    hooks.dedupe_rel = 1e-6;
    hooks.solve = [&](int level, const Point& sd) -> std::optional<Point> {
      const double r = tubes[static_cast<std::size_t>(level)];
      Point x = sd;
      for (int j = 0; j < 6; ++j) {
        const auto c = onto_beta(x);
        if (!c) return std::nullopt;
        const SphereConstraint sphere{*c, r};
        std::optional<Point> y;
        if (whole) {
          y = project_with(s, x, sphere, options.max_iter);
          if (y && !s.inequalities_hold(*y)) y.reset();
        } else {
          y = refine_critical(f, s, x, true, sphere, options);
        }
        if (!y) return std::nullopt;
        const auto c2 = onto_beta(*y);
        if (!c2) return std::nullopt;
        if (std::abs((*y - *c2).norm() - r) <= 1e-6 * r) return y;
        x = *y;
      }
      return std::nullopt;
    };
    hooks.fresh = [&](int level, Rng& rng) {
      const double r = tubes[static_cast<std::size_t>(level)];
      std::vector<Point> seeds;
      const int per_base = std::max(1, options.seeds_per_level / static_cast<int>(bases.size()));
      for (const auto& p : bases) {
        for (int j = 0; j < per_base; ++j) {
          Point sd = p + r * rng.unit_vector(n);
          seeds.push_back(sd);
          // Unconstrained refinement lands on Milnor branches meeting the frontier away from p.
          if (!whole && level == 0) {
            if (auto x = refine_critical(f, s, sd, true, std::nullopt, options)) seeds.push_back(*x);
          }
        }
      }
      return seeds;
    };
    hooks.predict = [&](int level, const detail::Branch& b) {
      const Point& last = b.points.back();
      const Point c = onto_beta(last).value_or(last);
      const double ratio = tubes[static_cast<std::size_t>(level)] / tubes[static_cast<std::size_t>(level - 1)];
      return Point(c + ratio * (last - c));
    };
    Rng rng(derive_seed(seed, 2000 + salt));
    const auto track = detail::track_branches(hooks, rng);
    emit_branch_atoms(track, f, s.id(), "frontier", options, out.atoms);
    ++salt;
  }
  out.atoms.merge(options.merge_tol);
  return out;
}

LimitValueSet s_infinity_estimate(const PolyMap& f, const Stratum& s, const Stratification& W,
                                  const Ladder& schedule, std::uint64_t seed,
                                  const CriticalOptions& options) {
  return s_infinity_scan(f, s, W, schedule, seed, options).atoms;
}

// K-infinity

namespace {

double nu_and_covector(const PolyMap& F, const Point& x, Eigen::VectorXd* u) {
  const Eigen::MatrixXd J = F.jacobian(x);
  const int m = F.dim();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU);
  if (u) *u = svd.matrixU().col(m - 1);
  return svd.singularValues()(m - 1);
}

// Local descent of nu(d_x F) on the sphere of radius R through x0.
Point minimize_nu(const PolyMap& F, const Point& x0, double R, int max_iter) {
  const int n = F.nvars();
  const int m = F.dim();
  Point x = x0 * (R / x0.norm());
  Eigen::VectorXd u;
  double nu = nu_and_covector(F, x, &u);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd J = F.jacobian(x);
    const Eigen::VectorXd r = J.transpose() * u;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < m; ++i) M += u(i) * F.hessian(i, x);
    const Eigen::MatrixXd P = null_space(x.transpose(), 1e-8);
    const Eigen::MatrixXd Pu = null_space(u.transpose(), 1e-8);
    Eigen::MatrixXd A(n, P.cols() + Pu.cols());
    A.leftCols(P.cols()) = M * P;
    if (Pu.cols() > 0) A.rightCols(Pu.cols()) = J.transpose() * Pu;
    const Eigen::VectorXd step = -pseudo_inverse(A, 1e-12) * r;
    Eigen::VectorXd dx = P * step.head(P.cols());
    if (dx.norm() > 0.25 * R) dx *= 0.25 * R / dx.norm();
    bool improved = false;
    for (int h = 0; h < 30; ++h, dx *= 0.5) {
      const Point trial = (x + dx) * (R / (x + dx).norm());
      Eigen::VectorXd ut;
      const double nt = nu_and_covector(F, trial, &ut);
      if (nt < nu) {
        const double gain = nu - nt;
        x = trial;
        u = ut;
        nu = nt;
        improved = gain > 1e-15 * nu;
        break;
      }
    }
    if (!improved) break;
  }
  return x;
}

}  // namespace

LimitValueSet k_infinity_estimate(const PolyMap& F, const Ladder& schedule, std::uint64_t seed,
                                  const CriticalOptions& options) {
  const int n = F.nvars();
  const int m = F.dim();
  if (m > n) throw InputError("k_infinity_estimate: nu degenerates when m > n");
  LimitValueSet out(m);
  const auto radii = schedule.radii();
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw InputError("schedule radii must increase");

  detail::TrackHooks hooks;
  hooks.radii = radii;
  hooks.dedupe_rel = 1e-5;
  hooks.fresh = [&](int level, Rng& rng) {
    std::vector<Point> seeds;
    for (int j = 0; j < options.seeds_per_level; ++j)
      seeds.push_back(radii[static_cast<std::size_t>(level)] * rng.unit_vector(n));
    return seeds;
  };
  hooks.solve = [&](int level, const Point& sd) -> std::optional<Point> {
    if (sd.norm() == 0.0) return std::nullopt;
    Point x = minimize_nu(F, sd, radii[static_cast<std::size_t>(level)], options.max_iter);
    if (!x.allFinite()) return std::nullopt;
    return x;
  };
  hooks.predict = [&](int level, const detail::Branch& b) {
    return detail::predict_shell(radii, level, b);
  };
  Rng rng(seed);
  const auto track = detail::track_branches(hooks, rng);

  const int w = options.convergence_window;
  for (const auto& b : track.branches) {
    const int len = static_cast<int>(b.points.size());
    if (len < w + 1) continue;
    std::vector<double> prod;
    std::vector<Eigen::VectorXd> values;
    for (int i = 0; i < len; ++i) {
      const Point& x = b.points[static_cast<std::size_t>(i)];
      prod.push_back(x.norm() * nu_and_covector(F, x, nullptr));
      values.push_back(F(x));
    }
    bool vanishing = prod.back() <= 1e-8;
    if (!vanishing) {
      vanishing = true;
      for (int i = len - w; i < len; ++i)
        vanishing = vanishing && prod[static_cast<std::size_t>(i - 1)] >=
                                     options.convergence_ratio * prod[static_cast<std::size_t>(i)];
    }
    if (!vanishing) continue;
    const auto lim = detail::sequence_limit(values, options.convergence_ratio, w);
    if (!lim) continue;
    Atom atom;
    atom.center = lim->first;
    atom.radius = lim->second;
    atom.evidence.push_back({b.points.back().norm(), values.back(), "X"});
    atom.low_confidence = b.ambiguous || b.lost;
    atom.source = "kinf";
    out.add(std::move(atom));
  }
  out.merge(options.merge_tol);
  return out;
}

// Sigma and the safe radius

LimitValueSet sigma_set(const PolyMap& f, const Stratification& W, const Ladder& schedule,
                        std::uint64_t seed, const CriticalOptions& options) {
  if (W.nvars() != f.nvars()) throw InputError("map and stratification disagree on nvars");
  if (W.max_dim() < f.dim()) throw InputError("sigma_set: needs dim X >= m");
  LimitValueSet out(f.dim());
  const Box sing_box = Box::cube(f.nvars(), options.sing_radius);
  for (std::size_t i = 0; i < W.strata().size(); ++i) {
    const Stratum& s = W.strata()[i];
    out.absorb(sing_values_sample(f, s, sing_box, options.sing_count, derive_seed(seed, 2 * i), options));
    out.absorb(s_infinity_estimate(f, s, W, schedule, derive_seed(seed, 2 * i + 1), options));
  }
  out.merge(options.merge_tol);
  return out;
}

SafeRadius find_safe_radius(const PolyMap& f, const Stratification& W, const Box& B,
                            const Ladder& schedule, std::uint64_t seed,
                            const CriticalOptions& options, const LimitValueSet* sigma) {
  const int n = f.nvars();
  const int m = f.dim();
  if (B.dim() != m) throw InputError("find_safe_radius: box dimension must equal m");
  if (!(B.lo.array() < B.hi.array()).all()) throw InputError("find_safe_radius: empty box");

  std::optional<LimitValueSet> own;
  if (!sigma) {
    own = sigma_set(f, W, schedule, seed, options);
    sigma = &*own;
  }
  for (const auto& a : sigma->atoms()) {
    if (distance_to_box(a.center, B) <= a.radius + options.box_margin) {
      std::ostringstream msg;
      msg << "box closure meets the non-regular value estimate (atom at distance "
          << distance_to_box(a.center, B) << ", radius " << a.radius << ")";
      throw PreconditionError(msg.str());
    }
  }

  const auto radii = schedule.radii();
  SafeRadius out;
  for (double R : radii)
    out.certificate.push_back({R, 0, std::numeric_limits<double>::infinity()});
  double floor_R = 0.0;
  for (std::size_t i = 0; i < W.strata().size(); ++i) {
    const Stratum& s = W.strata()[i];
    if (s.declared_dim() == 0) {
      // Isolated points: the radius must enclose those mapped into closure(B).
      for (const auto& p : sample_stratum(s, Box::cube(n, 1e6), 4, derive_seed(seed, 7 * i), options.sampling).points)
        if (distance_to_box(f(p), B) <= options.box_margin) floor_R = std::max(floor_R, p.norm());
      continue;
    }
    const auto ns = norm_scan(f, s, schedule, derive_seed(derive_seed(seed, 2 * i + 1), 0), options);
    for (std::size_t k = 0; k < radii.size(); ++k) {
      for (const auto& p : ns.track.levels[k]) {
        auto& c = out.certificate[k];
        ++c.samples;
        c.min_distance = std::min(c.min_distance, distance_to_box(f(p), B));
      }
    }
  }
  std::size_t j = radii.size();
  for (std::size_t k = radii.size(); k-- > 0;) {
    if (!(out.certificate[k].min_distance > options.box_margin)) break;
    j = k;
  }
  while (j < radii.size() && radii[j] <= floor_R) ++j;
  if (j == radii.size())
    throw SafeRadiusNotFound("no scheduled radius keeps Milnor values away from the box");
  out.R = radii[j];
  return out;
}

}  // namespace stratfib
