#include <algorithm>
#include <cmath>

#include "stratfib/errors.hpp"
#include "stratfib/trivialize.hpp"

namespace stratfib {

namespace {

// Dormand-Prince 5(4) tableau (autonomous fields, so the nodes c_i are not needed).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Trajectory integrate_flow(const FieldSpec& spec, const PolyMap& f, const Stratification& W,
                          const Point& x0, double t_target, const FlowOptions& options) {
  spec.validate(f.dim());
  if (x0.size() != f.nvars()) throw InputError("integrate_flow: dimension mismatch");
  require_finite(x0, "integrate_flow");
  if (!std::isfinite(t_target)) throw InputError("integrate_flow: non-finite target time");
  const auto id = locate_stratum(W, x0, options.locate_tol);
  if (!id) throw InputError("integrate_flow: start point lies on no stratum");
  const Stratum& s = W.stratum(*id);
  const int i = spec.direction;
  const Eigen::VectorXd f0 = f(x0);
  const Eigen::VectorXd ei = Eigen::VectorXd::Unit(f.dim(), i);

  Trajectory tr;
  auto record = [&](double t, const Point& x) {
    tr.times.push_back(t);
    tr.points.push_back(x);
    tr.stratum_ids.push_back(s.id());
    tr.diagnostics.push_back({f(x) - f0 - t * ei, x.norm(), s.equation_residual(x)});
  };
  record(0.0, x0);
  if (t_target == 0.0) return tr;

  const double dir = t_target > 0.0 ? 1.0 : -1.0;
  const double span = std::abs(t_target);
  auto F = [&](const Point& x) -> Eigen::VectorXd { return dir * evaluate_field(spec, f, s, x); };

  double t = 0.0;  // elapsed |time|
  Point x = x0;
  double h = std::min(options.h0, span);
  Eigen::VectorXd k1;
  bool have_k1 = false;
  for (int step = 0; step < options.max_steps && t < span; ++step) {
    if (h < options.h_min && span - t > options.h_min)
      throw IntegrationError("integrate_flow: step size underflow", dir * t, x);
    h = std::min(h, span - t);
    const bool last = (span - t) <= h * (1.0 + 1e-12);
    Point xn;
    double err = 0.0;
    Eigen::VectorXd k7;
    try {
      if (!have_k1) {
        k1 = F(x);
        have_k1 = true;
      }
      const Eigen::VectorXd k2 = F(x + h * a21 * k1);
      const Eigen::VectorXd k3 = F(x + h * (a31 * k1 + a32 * k2));
      const Eigen::VectorXd k4 = F(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Eigen::VectorXd k5 = F(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Eigen::VectorXd k6 = F(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = F(xn);
      const Eigen::VectorXd e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const Eigen::ArrayXd sc =
          options.atol + options.rtol * x.cwiseAbs().cwiseMax(xn.cwiseAbs()).array();
      err = (e.array().abs() / sc).maxCoeff();
    } catch (const Error&) {
      // The field is undefined somewhere in the stage; shrink the step.
      if (!have_k1) throw;
      h *= 0.25;
      continue;
    }
    if (!std::isfinite(err) || err > 1.0) {
      const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
      h *= fac;
      continue;
    }
    // Accept, then project back onto the stratum.
    if (!s.equations().empty()) {
      xn = newton_project(s.equations(), xn, std::min(options.residual_tol, 1e-12 * (1.0 + xn.squaredNorm())),
                          50);
      if (!s.inequalities_hold(xn))
        throw IntegrationError("integrate_flow: trajectory left stratum " + s.id(), dir * t, x);
      k7 = F(xn);
    } else if (!s.inequalities_hold(xn)) {
      throw IntegrationError("integrate_flow: trajectory left stratum " + s.id(), dir * t, x);
    }
    t = last ? span : t + h;
    x = xn;
    k1 = k7;
    record(dir * t, x);
    if (tr.diagnostics.back().residual > options.residual_tol)
      throw ProjectionError("integrate_flow: stratum residual blow-up", tr.diagnostics.back().residual, x);
    const double fac = err > 0.0 ? std::min(5.0, 0.9 * std::pow(err, -0.2)) : 5.0;
    h *= fac;
  }
  if (t < span) throw IntegrationError("integrate_flow: step budget exhausted", dir * t, x);
  return tr;
}

}  // namespace stratfib
