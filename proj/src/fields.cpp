#include <cmath>

#include "stratfib/errors.hpp"
#include "stratfib/trivialize.hpp"

namespace stratfib {

const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::SphereTangent: return "sphere_tangent";
    case FieldKind::PlainLift: return "plain_lift";
    case FieldKind::Glued: return "glued";
  }
  return "?";
}

void FieldSpec::validate(int m) const {
  if (direction < 0 || direction >= m) throw InputError("field: direction index out of range");
  if (kind == FieldKind::Glued && !(R < R1 && R1 < R2 && R >= 0.0))
    throw InputError("field: glued fields need 0 <= R < R1 < R2");
}

namespace {

// Minimal-norm solution of (J_f Q) a = e_i mapped back by Q; nothing when J_f Q is not onto.
std::optional<Eigen::VectorXd> restricted_lift(const PolyMap& f, const Eigen::MatrixXd& Q,
                                               const Point& x, int i, double threshold) {
  const int m = f.dim();
  if (Q.cols() < m) return std::nullopt;
  const Eigen::MatrixXd A = f.jacobian(x) * Q;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(m - 1) >= threshold * (1.0 + sv(0)))) return std::nullopt;
  const Eigen::VectorXd a = svd.solve(Eigen::VectorXd::Unit(m, i));
  return Q * a;
}

void check_lift_args(const PolyMap& f, const Stratum& s, const Point& x, int i) {
  if (x.size() != f.nvars() || s.nvars() != f.nvars()) throw InputError("lift: dimension mismatch");
  if (i < 0 || i >= f.dim()) throw InputError("lift: direction index out of range");
  require_finite(x, "lift");
}

}  // namespace

Eigen::VectorXd sphere_tangent_lift(const PolyMap& f, const Stratum& s, const Point& x, int i,
                                    double threshold) {
  check_lift_args(f, s, x, i);
  const Subspace T = sphere_tangent_intersection(s.tangent(x), x);
  auto v = restricted_lift(f, T.basis(), x, i, threshold);
  if (!v) throw MilnorPointError("sphere_tangent_lift: d(f|" + s.id() + ") is not onto on the sphere tangent");
  return *v;
}

Eigen::VectorXd plain_lift(const PolyMap& f, const Stratum& s, const Point& x, int i,
                           double threshold) {
  check_lift_args(f, s, x, i);
  auto v = restricted_lift(f, s.tangent(x).basis(), x, i, threshold);
  if (!v) throw SingularPointError("plain_lift: d(f|" + s.id() + ") is not onto");
  return *v;
}

double bump(const Point& x, double R1, double R2) {
  if (!(R1 > 0.0) || !(R1 < R2)) throw InputError("bump: needs 0 < R1 < R2");
  auto psi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double r = x.norm();
  const double a = psi(R2 - r);
  const double b = psi(r - R1);
  return a / (a + b);
}

Eigen::VectorXd glued_field(const PolyMap& f, const Stratum& s, const Point& x, int i, double R1,
                            double R2) {
  const double phi = bump(x, R1, R2);
  if (phi == 1.0) return plain_lift(f, s, x, i);
  if (phi == 0.0) return sphere_tangent_lift(f, s, x, i);
  return phi * plain_lift(f, s, x, i) + (1.0 - phi) * sphere_tangent_lift(f, s, x, i);
}

Eigen::VectorXd glued_field(const PolyMap& f, const Stratification& W, const Point& x, int i,
                            double R1, double R2) {
  const auto id = locate_stratum(W, x, 1e-8);
  if (!id) throw InputError("glued_field: point lies on no stratum");
  return glued_field(f, W.stratum(*id), x, i, R1, R2);
}

Eigen::VectorXd evaluate_field(const FieldSpec& spec, const PolyMap& f, const Stratum& s,
                               const Point& x) {
  switch (spec.kind) {
    case FieldKind::SphereTangent: return sphere_tangent_lift(f, s, x, spec.direction);
    case FieldKind::PlainLift: return plain_lift(f, s, x, spec.direction);
    case FieldKind::Glued: return glued_field(f, s, x, spec.direction, spec.R1, spec.R2);
  }
  throw InputError("unknown field kind");
}

AuditReport rugosity_check(const FieldFn& field, const Stratification& W, const std::string& alpha,
                           const std::string& beta, const Point& y, int n_pairs, std::uint64_t seed,
                           const AuditOptions& options) {
  const Stratum& A = W.stratum(alpha);
  const Stratum& B = W.stratum(beta);
  if (alpha != beta && !W.declared(beta, alpha))
    throw InputError("rugosity_check: (" + beta + ", " + alpha + ") is not a declared frontier pair");
  if (!B.contains(y, 1e-8)) throw InputError("rugosity_check: base point is not on " + beta);
  if (n_pairs <= 0) throw InputError("rugosity_check: n_pairs must be positive");

  AuditReport report{"rugosity", alpha, beta, {}, Verdict::Inconclusive, 0.0, false, 0, {}};
  Rng rng(seed);
  for (double r : options.ladder()) {
    ScaleRow row{r, 0.0, 0};
    for (int p = 0; p < n_pairs; ++p) {
      std::optional<Point> xb;
      if (B.declared_dim() == 0)
        xb = y;
      else
        xb = sample_near(B, y, r, rng, options.sampling);
      const auto ya = sample_near(A, y, r, rng, options.sampling);
      if (!xb || !ya || (*ya - *xb).norm() == 0.0) {
        ++report.skipped;
        continue;
      }
      try {
        const double ratio = (field(*ya) - field(*xb)).norm() / (*ya - *xb).norm();
        row.value = std::max(row.value, ratio);
        ++row.samples;
      } catch (const Error&) {
        ++report.skipped;
      }
    }
    report.rows.push_back(row);
  }
  for (const auto& row : report.rows) report.c_estimate = std::max(report.c_estimate, row.value);
  report.verdict = bounded_ratio_verdict(report.rows, options.growth_limit);
  if (report.skipped > 0)
    report.notes.push_back(std::to_string(report.skipped) + " samples skipped (field undefined or no point found)");
  return report;
}

}  // namespace stratfib
