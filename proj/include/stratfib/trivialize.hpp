#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stratfib/critical.hpp"
#include "stratfib/strata.hpp"

namespace stratfib {

enum class FieldKind { SphereTangent, PlainLift, Glued };
const char* to_string(FieldKind k);

/// Which lift to integrate. `direction` is 0-based (lifts e_{direction+1}).
struct FieldSpec {
  FieldKind kind = FieldKind::Glued;
  int direction = 0;
  double R = 0.0;  ///< safe radius, informational
  double R1 = 0.0;
  double R2 = 0.0;

  /// Throws InputError unless 0 <= direction < m and, for glued fields, R < R1 < R2.
  void validate(int m) const;
};

/// Minimal-norm V in T_x s cap T_x S^{n-1} with d_x f(V) = e_i.
/// Throws DomainError at 0 and MilnorPointError when the restricted differential is not onto.
Eigen::VectorXd sphere_tangent_lift(const PolyMap& f, const Stratum& s, const Point& x, int i,
                                    double threshold = 1e-7);

/// Minimal-norm W in T_x s with d_x f(W) = e_i. Throws SingularPointError.
Eigen::VectorXd plain_lift(const PolyMap& f, const Stratum& s, const Point& x, int i,
                           double threshold = 1e-7);

/// Smooth cut-off: 1 on the closed R1-ball, 0 outside the open R2-ball.
double bump(const Point& x, double R1, double R2);

/// phi W_i + (1 - phi) V_i on the stratum s; a lift with zero weight is not evaluated.
Eigen::VectorXd glued_field(const PolyMap& f, const Stratum& s, const Point& x, int i, double R1,
                            double R2);
/// Same, on the stratum of W containing x (InputError when there is none).
Eigen::VectorXd glued_field(const PolyMap& f, const Stratification& W, const Point& x, int i,
                            double R1, double R2);

Eigen::VectorXd evaluate_field(const FieldSpec& spec, const PolyMap& f, const Stratum& s,
                               const Point& x);

using FieldFn = std::function<Eigen::VectorXd(const Point&)>;

/// Lipschitz audit of a field between points of beta and nearby points of alpha
/// (alpha may equal beta). Samples where the field throws are skipped and counted.
AuditReport rugosity_check(const FieldFn& field, const Stratification& W, const std::string& alpha,
                           const std::string& beta, const Point& y, int n_pairs, std::uint64_t seed,
                           const AuditOptions& options = {});

struct StepDiagnostics {
  Eigen::VectorXd drift;  ///< f(x(t)) - f(x0) - t e_i
  double norm = 0.0;
  double residual = 0.0;  ///< stratum equation residual after projection
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Point> points;
  std::vector<std::string> stratum_ids;
  std::vector<StepDiagnostics> diagnostics;
};

struct FlowOptions {
  double atol = 1e-9;
  double rtol = 1e-9;
  double h0 = 1e-2;
  double h_min = 1e-12;
  int max_steps = 200000;
  double residual_tol = 1e-8;
  double locate_tol = 1e-8;
};

/// Dormand-Prince 5(4) integration of the field from x0 over [0, t_target]
/// (t_target may be negative), projecting onto the stratum after each step.
/// Throws IntegrationError or ProjectionError.
Trajectory integrate_flow(const FieldSpec& spec, const PolyMap& f, const Stratification& W,
                          const Point& x0, double t_target, const FlowOptions& options = {});

/// Fiber components of f|X over t, counted on a grid of the given spacing in the
/// window [-window, window]^n. Extra points on the fiber join the clustering.
int count_fiber_components(const PolyMap& f, const Stratification& W, const Eigen::VectorXd& t,
                           double window, double spacing, const std::vector<Point>& extra = {});

/// Up to `budget` points of f^{-1}(t) in the window, spread over strata of dimension >= m.
std::vector<Point> sample_fiber(const PolyMap& f, const Stratification& W, const Eigen::VectorXd& t,
                                double window, int budget, std::uint64_t seed);

struct TrivializeOptions {
  int grid = 9;  ///< interior targets per axis
  int fiber_budget = 40;
  double window = 20.0;
  double spacing = 0.05;
  FlowOptions flow;
  double drift_tol = 1e-6;
  double roundtrip_tol = 1e-5;
  double residual_tol = 1e-8;
  std::optional<double> R;
  std::optional<double> R1;
  std::optional<double> R2;
  Ladder schedule = default_schedule();
  CriticalOptions critical;
  std::uint64_t seed = 1;
  int keep_trajectories = 8;  ///< trajectories retained for export
};

struct TargetResult {
  Eigen::VectorXd t;
  std::vector<Point> points;  ///< transported fiber samples
  int components = 0;
  int failures = 0;
  double max_drift = 0.0;
  double max_roundtrip = 0.0;
};

struct TrivializationResult {
  Box box;
  Eigen::VectorXd z;
  double R = 0.0;
  double R1 = 0.0;
  double R2 = 0.0;
  double spacing = 0.0;
  std::vector<ShellCertificate> certificate;
  std::vector<Point> base_fiber;
  int base_components = 0;
  std::vector<TargetResult> targets;
  double max_drift = 0.0;
  double max_norm_drift = 0.0;  ///< along flows that stay outside the R2-ball
  double max_roundtrip = 0.0;
  double max_residual = 0.0;
  int failures = 0;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::string> notes;
  std::vector<Trajectory> trajectories;
};

/// Transports samples of f^{-1}(z) to a grid of targets in B along the glued
/// fields and back. Throws PreconditionError when closure(B) meets `sigma`
/// (computed when not supplied) and SafeRadiusNotFound.
TrivializationResult trivialize_box(const PolyMap& f, const Stratification& W, const Box& B,
                                    const Eigen::VectorXd& z, const TrivializeOptions& options = {},
                                    const LimitValueSet* sigma = nullptr);

/// Interior grid of B: per axis lo + (j + 1)(hi - lo)/(grid + 1), j < grid.
std::vector<Eigen::VectorXd> box_grid(const Box& B, int grid);

}  // namespace stratfib
