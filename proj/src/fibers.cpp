#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "stratfib/errors.hpp"
#include "stratfib/trivialize.hpp"

namespace stratfib {

namespace {

class UnionFind {
 public:
  std::size_t add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }
  int roots() {
    int c = 0;
    for (std::size_t i = 0; i < parent_.size(); ++i)
      if (find(i) == i) ++c;
    return c;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Integer cell coordinates packed into one key (each coordinate below 2^20 cells).
using CellKey = std::uint64_t;

CellKey pack(const std::vector<long>& c) {
  CellKey k = 0;
  for (long v : c) k = (k << 21) | static_cast<CellKey>(v & 0x1FFFFF);
  return k;
}

// Connected groups of occupied cells under full (3^n) adjacency.
int count_cells(const std::vector<std::vector<long>>& cells) {
  std::unordered_map<CellKey, std::size_t> index;
  UnionFind uf;
  for (const auto& c : cells) {
    const CellKey k = pack(c);
    if (!index.count(k)) index.emplace(k, uf.add());
  }
  const std::size_t n = cells.empty() ? 0 : cells.front().size();
  for (const auto& c : cells) {
    const std::size_t self = index.at(pack(c));
    std::vector<long> nb(c);
    const long total = static_cast<long>(std::pow(3.0, static_cast<double>(n)));
    for (long code = 0; code < total; ++code) {
      long rest = code;
      for (std::size_t j = 0; j < n; ++j) {
        nb[j] = c[j] + (rest % 3) - 1;
        rest /= 3;
      }
      const auto it = index.find(pack(nb));
      if (it != index.end()) uf.unite(self, it->second);
    }
  }
  return uf.roots();
}

bool is_plain_plane(const Stratification& W) {
  return W.nvars() == 2 && W.strata().size() == 1 && W.strata()[0].equations().empty() &&
         W.strata()[0].inequalities().empty();
}

std::optional<Point> onto_fiber(const Stratum& s, const PolyMap& f, const Eigen::VectorXd& t,
                                const Point& seed) {
  std::vector<Polynomial> extra;
  for (int i = 0; i < f.dim(); ++i)
    extra.push_back(f.component(i) - Polynomial::constant(f.nvars(), t(i)));
  try {
    Point x = newton_project(s.equations().with(extra), seed, 1e-11 * (1.0 + seed.squaredNorm()), 30);
    if (!s.inequalities_hold(x)) return std::nullopt;
    return x;
  } catch (const ProjectionError&) {
    return std::nullopt;
  }
}

bool in_window(const Point& x, double window) { return x.lpNorm<Eigen::Infinity>() <= window; }

// First-order distance estimate from v to {g = 0}; used to skip vertices far from the fiber.
bool maybe_near(const PolySystem& sys, const Point& v, double reach) {
  const Eigen::VectorXd r = sys.eval(v);
  const Eigen::MatrixXd J = sys.jacobian(v);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double g = J.row(i).norm();
    if (std::abs(r(i)) > 3.0 * reach * g && std::abs(r(i)) > 1e-12) return false;
  }
  return true;
}

}  // namespace

int count_fiber_components(const PolyMap& f, const Stratification& W, const Eigen::VectorXd& t,
                           double window, double spacing, const std::vector<Point>& extra) {
  if (!(window > 0.0) || !(spacing > 0.0)) throw InputError("fiber count: window and spacing must be positive");
  if (t.size() != f.dim()) throw InputError("fiber count: target has wrong dimension");
  const int n = f.nvars();

  if (is_plain_plane(W) && f.dim() == 1) {
    // Cells of the grid where f - t changes sign, joined through edges and corners.
    const long N = std::lround(2.0 * window / spacing);
    const double h = 2.0 * window / static_cast<double>(N);
    std::vector<std::vector<long>> cells;
    std::vector<double> prev(static_cast<std::size_t>(N + 1)), cur(static_cast<std::size_t>(N + 1));
    Point x(2);
    const Polynomial& g = f.component(0);
    for (long j = 0; j <= N; ++j) {
      x(1) = -window + h * static_cast<double>(j);
      for (long i = 0; i <= N; ++i) {
        x(0) = -window + h * static_cast<double>(i);
        cur[static_cast<std::size_t>(i)] = g(x) - t(0);
      }
      if (j > 0) {
        for (long i = 0; i < N; ++i) {
          const std::size_t a = static_cast<std::size_t>(i);
          const bool s0 = prev[a] >= 0.0, s1 = prev[a + 1] >= 0.0, s2 = cur[a] >= 0.0,
                     s3 = cur[a + 1] >= 0.0;
          if (!(s0 == s1 && s1 == s2 && s2 == s3)) cells.push_back({i, j - 1});
        }
      }
      std::swap(prev, cur);
    }
    for (const auto& p : extra) {
      if (!in_window(p, window)) continue;
      cells.push_back({std::min(N - 1, static_cast<long>(std::floor((p(0) + window) / h))),
                       std::min(N - 1, static_cast<long>(std::floor((p(1) + window) / h)))});
    }
    return count_cells(cells);
  }

  // General case: grid vertices projected onto the fiber of each stratum, then
  // clustered on cells of twice the spacing.
  const long cap = 200000;
  long per_axis = std::lround(2.0 * window / spacing) + 1;
  double h = spacing;
  if (std::pow(static_cast<double>(per_axis), n) > static_cast<double>(cap)) {
    per_axis = static_cast<long>(std::floor(std::pow(static_cast<double>(cap), 1.0 / n)));
    h = 2.0 * window / static_cast<double>(per_axis - 1);
  }
  std::vector<Point> pts;
  for (const auto& s : W.strata()) {
    if (s.declared_dim() < f.dim()) continue;
    if (s.declared_dim() == f.dim()) {
      // Finite fiber on this stratum: random seeds suffice.
      Rng rng(derive_seed(0x5eed, W.index_of(s.id())));
      for (int k = 0; k < 400; ++k) {
        Point seed(n);
        for (int j = 0; j < n; ++j) seed(j) = rng.uniform(-window, window);
        if (auto x = onto_fiber(s, f, t, seed); x && in_window(*x, window)) pts.push_back(*x);
      }
      continue;
    }
    std::vector<Polynomial> level;
    for (int i = 0; i < f.dim(); ++i) level.push_back(f.component(i) - Polynomial::constant(n, t(i)));
    const PolySystem fiber_sys = s.equations().with(level);
    std::vector<long> idx(static_cast<std::size_t>(n), 0);
    const double reach = h * std::sqrt(static_cast<double>(n));
    while (true) {
      Point v(n);
      for (int j = 0; j < n; ++j) v(j) = -window + h * static_cast<double>(idx[static_cast<std::size_t>(j)]);
      if (maybe_near(fiber_sys, v, reach))
        if (auto x = onto_fiber(s, f, t, v); x && (*x - v).norm() <= reach && in_window(*x, window))
          pts.push_back(*x);
      int j = 0;
      while (j < n && ++idx[static_cast<std::size_t>(j)] == per_axis) idx[static_cast<std::size_t>(j++)] = 0;
      if (j == n) break;
    }
  }
  for (const auto& p : extra)
    if (in_window(p, window)) pts.push_back(p);
  std::vector<std::vector<long>> cells;
  for (const auto& p : pts) {
    std::vector<long> c(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) c[static_cast<std::size_t>(j)] = static_cast<long>(std::floor((p(j) + window) / (2.0 * h)));
    cells.push_back(std::move(c));
  }
  return count_cells(cells);
}

std::vector<Point> sample_fiber(const PolyMap& f, const Stratification& W, const Eigen::VectorXd& t,
                                double window, int budget, std::uint64_t seed) {
  if (budget <= 0) throw InputError("sample_fiber: budget must be positive");
  const int n = f.nvars();
  std::vector<const Stratum*> strata;
  for (const auto& s : W.strata())
    if (s.declared_dim() >= f.dim()) strata.push_back(&s);
  std::vector<Point> out;
  if (strata.empty()) return out;
  Rng rng(seed);
  const int attempts = 50 * budget;
  for (int a = 0; a < attempts && static_cast<int>(out.size()) < budget; ++a) {
    const Stratum& s = *strata[static_cast<std::size_t>(a) % strata.size()];
    Point u(n);
    for (int j = 0; j < n; ++j) u(j) = rng.uniform(-window, window);
    auto x = onto_fiber(s, f, t, u);
    if (!x || !in_window(*x, window)) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Point& p) { return (p - *x).norm() < 1e-6; });
    if (!dup) out.push_back(*x);
  }
  return out;
}

}  // namespace stratfib
