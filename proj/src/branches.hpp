#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "stratfib/critical.hpp"
#include "stratfib/random.hpp"

namespace stratfib::detail {

struct Branch {
  int born = 0;                ///< level of the first point
  std::vector<Point> points;   ///< one point per consecutive level
  bool ambiguous = false;      ///< collided with another branch or jumped
  bool lost = false;           ///< continuation failed before the last level
};

struct TrackHooks {
  std::vector<double> radii;
  /// Candidate seeds for new branches at a level.
  std::function<std::vector<Point>(int level, Rng& rng)> fresh;
  /// Solve at a level from a seed; nothing when the solve fails.
  std::function<std::optional<Point>(int level, const Point& seed)> solve;
  /// Predicted position of a branch at `level` from its history.
  std::function<Point(int level, const Branch& b)> predict;
  double dedupe_rel = 1e-6;
};

struct TrackResult {
  std::vector<Branch> branches;
  std::vector<std::vector<Point>> levels;  ///< all accepted points per level
};

/// Nearest-neighbour continuation of solution branches across levels.
TrackResult track_branches(const TrackHooks& hooks, Rng& rng);

/// Predictor for sphere shells centred at the origin: per-coordinate power law
/// extrapolation, rescaled onto the new radius.
Point predict_shell(const std::vector<double>& radii, int level, const Branch& b);

/// Converged limit of a value sequence: last value and last difference, when the
/// trailing `window` differences each shrink by `ratio` (or sit below `floor`).
std::optional<std::pair<Eigen::VectorXd, double>> sequence_limit(
    const std::vector<Eigen::VectorXd>& values, double ratio, int window, double floor = 1e-13);

}  // namespace stratfib::detail
