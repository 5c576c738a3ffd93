#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stratfib/algebra.hpp"
#include "stratfib/strata.hpp"

namespace stratfib {

/// Geometric ladder r0 * factor^k, k = 0..count-1.
struct Ladder {
  double r0 = 4.0;
  double factor = 2.0;
  int count = 11;

  std::vector<double> radii() const;
};

/// Default sphere-shell schedule 4 * 2^k, k = 0..10.
inline Ladder default_schedule() { return Ladder{4.0, 2.0, 11}; }

struct CriticalOptions {
  double rank_threshold = 1e-7;  ///< certificate < rank_threshold * (1 + |A|)
  int max_iter = 60;
  int seeds_per_level = 32;
  double convergence_ratio = 1.5;  ///< required decay of consecutive differences
  int convergence_window = 3;      ///< number of trailing differences inspected
  double merge_tol = 1e-3;
  double sing_radius = 8.0;  ///< half-width of the box searched for critical points
  int sing_count = 64;
  Ladder tube{0.1, 0.5, 11};  ///< tube radii around frontier strata
  int frontier_points = 8;    ///< base points sampled on each frontier stratum
  double frontier_box = 4.0;  ///< half-width of the box where base points are drawn
  double box_margin = 1e-6;
  SamplingOptions sampling;
};

struct MilnorSample {
  std::string stratum_id;
  std::vector<Point> points;
  std::vector<double> residuals;  ///< rank certificates, all below the threshold
};

struct Evidence {
  double source_norm = 0.0;
  Eigen::VectorXd value;
  std::string stratum_id;
};

/// Closed ball in R^m with the sample points that produced it.
struct Atom {
  Eigen::VectorXd center;
  double radius = 0.0;
  std::vector<Evidence> evidence;
  bool low_confidence = false;
  std::string source;  ///< "sing", "norm", "frontier", "kinf" or a '+'-joined mix
};

/// Finite union of closed balls; closed by construction.
class LimitValueSet {
 public:
  explicit LimitValueSet(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }

  /// Throws InputError on a wrong-dimensional center, negative radius or missing evidence.
  void add(Atom atom);
  void absorb(const LimitValueSet& other);
  /// Replaces overlapping atoms (distance <= r1 + r2 + tol) by their enclosing ball,
  /// then sorts atoms by center.
  void merge(double tol);
  bool contains(const Eigen::VectorXd& v, double tol = 0.0) const;
  /// Distance from v to the nearest atom (0 inside an atom), +inf when empty.
  double distance(const Eigen::VectorXd& v) const;

  std::vector<std::string> warnings;

 private:
  int dim_;
  std::vector<Atom> atoms_;
};

/// Rank certificate of (f, rho) restricted to the stratum at x: smallest singular
/// value of the stacked tangent-restricted gradients, each f-row scaled by |grad f_i|.
double milnor_certificate(const PolyMap& f, const Stratum& s, const Point& x,
                          double rank_tol = 1e-8);
/// Whether milnor_certificate is below threshold * (1 + largest singular value).
bool is_milnor_point(const PolyMap& f, const Stratum& s, const Point& x,
                     const CriticalOptions& options = {});
/// Smallest singular value of d(f|stratum) and whether it is below the relative threshold.
double sing_certificate(const PolyMap& f, const Stratum& s, const Point& x, double rank_tol = 1e-8);
bool is_singular_point(const PolyMap& f, const Stratum& s, const Point& x,
                       const CriticalOptions& options = {});

/// Sphere constraint |x - center| = radius used when refining on shells and tubes.
struct SphereConstraint {
  Point center;
  double radius = 0.0;
};

/// Gauss-Newton refinement of a seed toward a critical point of (f, rho) on s
/// (with_rho) or of f on s, optionally restricted to a sphere. Returns a point
/// whose certificate passes, or nothing.
std::optional<Point> refine_critical(const PolyMap& f, const Stratum& s, const Point& seed,
                                     bool with_rho, const std::optional<SphereConstraint>& sphere,
                                     const CriticalOptions& options = {});

MilnorSample milnor_sample(const PolyMap& f, const Stratum& s, const Region& region, int count,
                           std::uint64_t seed, const CriticalOptions& options = {});

LimitValueSet sing_values_sample(const PolyMap& f, const Stratum& s, const Region& region,
                                 int count, std::uint64_t seed, const CriticalOptions& options = {});

/// Milnor points found on one level of a scan.
struct ScanLevel {
  double radius = 0.0;
  std::vector<Point> points;
  std::vector<Eigen::VectorXd> values;
};

struct InfinityScan {
  LimitValueSet atoms;
  std::vector<ScanLevel> norm_levels;  ///< one entry per schedule radius
};

/// Limits of f along Milnor branches escaping to infinity (sphere shells) and
/// toward frontier strata of s (shrinking tubes).
InfinityScan s_infinity_scan(const PolyMap& f, const Stratum& s, const Stratification& W,
                             const Ladder& schedule, std::uint64_t seed,
                             const CriticalOptions& options = {});
LimitValueSet s_infinity_estimate(const PolyMap& f, const Stratum& s, const Stratification& W,
                                  const Ladder& schedule, std::uint64_t seed,
                                  const CriticalOptions& options = {});

/// Limits of F along branches of shell minimizers of |x| nu(d_x F) where the product tends to 0.
LimitValueSet k_infinity_estimate(const PolyMap& F, const Ladder& schedule, std::uint64_t seed,
                                  const CriticalOptions& options = {});

/// Union over strata of singular values and S-infinity atoms, merged.
LimitValueSet sigma_set(const PolyMap& f, const Stratification& W, const Ladder& schedule,
                        std::uint64_t seed, const CriticalOptions& options = {});

struct ShellCertificate {
  double radius = 0.0;
  int samples = 0;
  double min_distance = 0.0;  ///< from Milnor f-values on the shell to closure(B); +inf if none
};

struct SafeRadius {
  double R = 0.0;
  std::vector<ShellCertificate> certificate;
};

/// Smallest scheduled R such that Milnor f-values on every shell from R on stay
/// away from closure(B). `sigma` is the non-regular value estimate checked against closure(B).
/// Throws PreconditionError or SafeRadiusNotFound.
SafeRadius find_safe_radius(const PolyMap& f, const Stratification& W, const Box& B,
                            const Ladder& schedule, std::uint64_t seed,
                            const CriticalOptions& options = {},
                            const LimitValueSet* sigma = nullptr);

/// Euclidean distance from v to the closed box.
double distance_to_box(const Eigen::VectorXd& v, const Box& B);

}  // namespace stratfib
