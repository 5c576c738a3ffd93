#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stratfib/algebra.hpp"
#include "stratfib/geometry.hpp"
#include "stratfib/random.hpp"

namespace stratfib {

/// A stratum X_alpha: common zeros of `equations` on which every polynomial
/// in `inequalities` is strictly positive.
class Stratum {
 public:
  Stratum(std::string id, PolySystem equations, PolySystem inequalities, int declared_dim);

  const std::string& id() const { return id_; }
  const PolySystem& equations() const { return equations_; }
  const PolySystem& inequalities() const { return inequalities_; }
  int declared_dim() const { return declared_dim_; }
  int nvars() const { return equations_.nvars(); }

  double equation_residual(const Point& x) const;
  bool inequalities_hold(const Point& x) const;
  /// Smallest first-order distance g/|grad g| to an inequality boundary; -inf when some g <= 0.
  double inequality_margin(const Point& x) const;
  bool contains(const Point& x, double tol) const;
  Subspace tangent(const Point& x, double rank_tol = 1e-8) const;
  /// nvars - rank of the equation Jacobian at x.
  int dimension_at(const Point& x, double rank_tol = 1e-8) const;

 private:
  std::string id_;
  PolySystem equations_;
  PolySystem inequalities_;
  int declared_dim_;
};

/// Ordered pair (sub, super): X_sub lies in the closure of X_super.
struct FrontierPair {
  std::string sub;
  std::string super;
};

class Stratification {
 public:
  /// Validates ids, dimensions and that the declared frontier relation is
  /// irreflexive and transitive. Throws InputError.
  Stratification(int nvars, std::vector<Stratum> strata, std::vector<FrontierPair> frontier);

  int nvars() const { return nvars_; }
  const std::vector<Stratum>& strata() const { return strata_; }
  const std::vector<FrontierPair>& frontier() const { return frontier_; }
  int max_dim() const;

  /// Throws InputError for unknown ids.
  const Stratum& stratum(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;
  bool declared(const std::string& sub, const std::string& super) const;
  /// Ids of strata in the declared frontier of `id` (the `sub` side of pairs with super == id).
  std::vector<std::string> frontier_of(const std::string& id) const;

 private:
  int nvars_;
  std::vector<Stratum> strata_;
  std::vector<FrontierPair> frontier_;
};

/// The stratification with a single open stratum R^n.
Stratification trivial_stratification(int nvars);

/// Unique stratum containing x, or nothing. Throws ConsistencyError when two strata match.
std::optional<std::string> locate_stratum(const Stratification& W, const Point& x, double tol);

struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Box cube(int n, double half_width);
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& x) const;
};

/// rmin <= |x - center| <= rmax; an empty center means the origin.
struct Shell {
  Eigen::VectorXd center;
  double rmin = 0.0;
  double rmax = 0.0;

  Eigen::VectorXd center_or_origin(int n) const;
  bool contains(const Eigen::VectorXd& x) const;
};

using Region = std::variant<Box, Shell>;

bool region_contains(const Region& region, const Point& x);

struct SampleResult {
  std::vector<Point> points;
  std::optional<std::string> warning;
};

struct SamplingOptions {
  double tol = 1e-10;
  int max_iter = 50;
  int attempts_per_point = 200;
};

/// Points on s inside the region, from rejection sampling followed by
/// projection onto the stratum equations. Deterministic in `seed`.
SampleResult sample_stratum(const Stratum& s, const Region& region, int count, std::uint64_t seed,
                            const SamplingOptions& options = {});

// ---------------------------------------------------------------------------
// Regularity audits

enum class Verdict { Pass, Fail, Inconclusive };
const char* to_string(Verdict v);

struct ScaleRow {
  double scale = 0.0;
  double value = 0.0;  ///< max deviation or ratio at this scale
  int samples = 0;
};

struct AuditReport {
  std::string condition;  ///< "whitney_b", "verdier_w", "wf", "rugosity"
  std::string alpha;      ///< larger stratum
  std::string beta;       ///< frontier stratum
  std::vector<ScaleRow> rows;
  Verdict verdict = Verdict::Inconclusive;
  double c_estimate = 0.0;
  bool vacuous = false;
  int skipped = 0;
  std::vector<std::string> notes;
};

struct AuditOptions {
  double r0 = 0.1;  ///< coarsest scale; the ladder halves it `scales - 1` times
  int scales = 4;
  double threshold = 1e-3;   ///< Whitney (b): deviation accepted at the finest scale
  double growth_limit = 2.0;  ///< bounded-ratio tests fail when finest/coarsest exceeds this
  double rank_tol = 1e-8;
  SamplingOptions sampling;

  std::vector<double> ladder() const;
};

struct FrontierEntry {
  std::string sub;
  std::string super;
  bool declared = false;
  bool confirmed = false;
  double min_distance = 0.0;
};

struct FrontierReport {
  std::vector<FrontierEntry> entries;  ///< declared pairs first, then detected undeclared ones
  bool all_confirmed() const;
  bool has_undeclared() const;
};

/// For every declared pair, checks that sampled points of the sub stratum are
/// limits of points of the super stratum; flags adjacencies that were not declared.
FrontierReport check_frontier(const Stratification& W, int budget, std::uint64_t seed,
                              const Box& sample_box, const AuditOptions& options = {});

AuditReport check_whitney_b(const Stratification& W, const std::string& alpha,
                            const std::string& beta, const Point& y, int n_sequences,
                            std::uint64_t seed, const AuditOptions& options = {});

AuditReport check_verdier_w(const Stratification& W, const std::string& alpha,
                            const std::string& beta, const Point& y, int n_pairs,
                            std::uint64_t seed, const AuditOptions& options = {});

/// Strict Thom condition for a scalar function g, with kernels
/// T_{x,g} = T_x X cap ker d_x g. Throws ConstantRankError.
AuditReport check_wf(const Stratification& W, const std::string& alpha, const std::string& beta,
                     const PolyMap& g, const Point& y, int n_pairs, std::uint64_t seed,
                     const AuditOptions& options = {});

/// Shared verdict rule for bounded-ratio audits over a scale ladder.
Verdict bounded_ratio_verdict(const std::vector<ScaleRow>& rows, double growth_limit);

/// Point on stratum s within distance `radius` of y, or nothing after `tries` attempts.
std::optional<Point> sample_near(const Stratum& s, const Point& y, double radius, Rng& rng,
                                 const SamplingOptions& options, int tries = 64);

}  // namespace stratfib
