#include "branches.hpp"

#include <cmath>

namespace stratfib::detail {

namespace {

bool near_any(const std::vector<Point>& pts, const Point& x, double tol, std::size_t* which) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if ((pts[i] - x).norm() <= tol) {
      if (which) *which = i;
      return true;
    }
  }
  return false;
}

}  // namespace

TrackResult track_branches(const TrackHooks& hooks, Rng& rng) {
  TrackResult out;
  const int L = static_cast<int>(hooks.radii.size());
  out.levels.resize(static_cast<std::size_t>(L));

  for (int level = 0; level < L; ++level) {
    const double r = hooks.radii[static_cast<std::size_t>(level)];
    const double tol = hooks.dedupe_rel * r;
    auto& accepted = out.levels[static_cast<std::size_t>(level)];
    std::vector<std::size_t> owner;

    // Continue branches alive at the previous level.
    for (std::size_t bi = 0; bi < out.branches.size(); ++bi) {
      Branch& b = out.branches[bi];
      if (b.lost || b.born + static_cast<int>(b.points.size()) != level) continue;
      const Point pred = hooks.predict(level, b);
      const auto x = hooks.solve(level, pred);
      if (!x) {
        b.lost = true;
        continue;
      }
      const double prev_r = hooks.radii[static_cast<std::size_t>(level - 1)];
      const double match = std::abs(r - prev_r);
      if ((*x - pred).norm() > match) b.ambiguous = true;
      std::size_t hit = 0;
      if (near_any(accepted, *x, tol, &hit)) {
        b.ambiguous = true;
        b.lost = true;
        out.branches[owner[hit]].ambiguous = true;
        continue;
      }
      b.points.push_back(*x);
      accepted.push_back(*x);
      owner.push_back(bi);
    }

    // Fresh seeds open new branches.
    for (const auto& seed : hooks.fresh(level, rng)) {
      const auto x = hooks.solve(level, seed);
      if (!x || near_any(accepted, *x, tol, nullptr)) continue;
      Branch b;
      b.born = level;
      b.points.push_back(*x);
      accepted.push_back(*x);
      owner.push_back(out.branches.size());
      out.branches.push_back(std::move(b));
    }
  }
  for (auto& b : out.branches)
    if (b.born + static_cast<int>(b.points.size()) != L) b.lost = true;
  return out;
}

Point predict_shell(const std::vector<double>& radii, int level, const Branch& b) {
  const std::size_t k = b.points.size();
  const double r_new = radii[static_cast<std::size_t>(level)];
  const Point& x1 = b.points[k - 1];
  Point pred = x1;
  if (k >= 2) {
    const Point& x0 = b.points[k - 2];
    const double r1 = radii[static_cast<std::size_t>(level - 1)];
    const double r0 = radii[static_cast<std::size_t>(level - 2)];
    const double g = std::log(r_new / r1) / std::log(r1 / r0);
    for (Eigen::Index j = 0; j < x1.size(); ++j) {
      if (x0(j) != 0.0 && x1(j) != 0.0 && (x0(j) > 0.0) == (x1(j) > 0.0))
        pred(j) = x1(j) * std::pow(x1(j) / x0(j), g);
      else
        pred(j) = x1(j) + (x1(j) - x0(j)) * (r_new - r1) / (r1 - r0);
    }
  }
  const double nrm = pred.norm();
  if (nrm > 0.0 && std::isfinite(nrm)) return pred * (r_new / nrm);
  return x1 * (r_new / x1.norm());
}

std::optional<std::pair<Eigen::VectorXd, double>> sequence_limit(
    const std::vector<Eigen::VectorXd>& values, double ratio, int window, double floor) {
  const int k = static_cast<int>(values.size());
  if (k < window + 1) return std::nullopt;
  std::vector<double> diffs;
  for (int i = k - window; i < k; ++i)
    diffs.push_back((values[static_cast<std::size_t>(i)] - values[static_cast<std::size_t>(i - 1)]).norm());
  const double scale = 1.0 + values.back().norm();
  for (std::size_t i = 0; i + 1 < diffs.size(); ++i) {
    if (diffs[i + 1] <= floor * scale) continue;
    if (!(diffs[i] >= ratio * diffs[i + 1])) return std::nullopt;
  }
  if (!std::isfinite(diffs.back())) return std::nullopt;
  return std::make_pair(values.back(), std::max(diffs.back(), 1e-12));
}

}  // namespace stratfib::detail
