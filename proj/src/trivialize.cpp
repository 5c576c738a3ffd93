#include <algorithm>
#include <cmath>
#include <sstream>

#include "stratfib/errors.hpp"
#include "stratfib/trivialize.hpp"

namespace stratfib {

std::vector<Eigen::VectorXd> box_grid(const Box& B, int grid) {
  if (grid <= 0) throw InputError("box_grid: grid must be positive");
  const int m = B.dim();
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  while (true) {
    Eigen::VectorXd t(m);
    for (int i = 0; i < m; ++i)
      t(i) = B.lo(i) + (idx[static_cast<std::size_t>(i)] + 1) * (B.hi(i) - B.lo(i)) / (grid + 1);
    out.push_back(t);
    int i = 0;
    while (i < m && ++idx[static_cast<std::size_t>(i)] == grid) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == m) break;
  }
  return out;
}

namespace {

struct Transport {
  Point end;
  double max_residual = 0.0;
  double norm_drift = 0.0;  ///< over sub-flows that stay outside the R2-ball
  std::vector<Trajectory> legs;
};

// Composes the coordinate flows H_1, ..., H_m (or the reverse order) from x to f = target.
Transport transport(const PolyMap& f, const Stratification& W, const Point& x0,
                    const Eigen::VectorXd& target, bool reverse, const FieldSpec& base,
                    const FlowOptions& flow) {
  Transport out;
  Point x = x0;
  const int m = f.dim();
  for (int k = 0; k < m; ++k) {
    FieldSpec spec = base;
    spec.direction = reverse ? m - 1 - k : k;
    const double dt = target(spec.direction) - f(x)(spec.direction);
    Trajectory tr = integrate_flow(spec, f, W, x, dt, flow);
    bool outside = true;
    for (const auto& d : tr.diagnostics) {
      out.max_residual = std::max(out.max_residual, d.residual);
      outside = outside && d.norm >= spec.R2;
    }
    if (outside) {
      const double n0 = tr.diagnostics.front().norm;
      for (const auto& d : tr.diagnostics) out.norm_drift = std::max(out.norm_drift, std::abs(d.norm - n0));
    }
    x = tr.points.back();
    out.legs.push_back(std::move(tr));
  }
  out.end = x;
  return out;
}

}  // namespace

TrivializationResult trivialize_box(const PolyMap& f, const Stratification& W, const Box& B,
                                    const Eigen::VectorXd& z, const TrivializeOptions& options,
                                    const LimitValueSet* sigma) {
  const int m = f.dim();
  if (B.dim() != m) throw InputError("trivialize_box: box dimension must equal m");
  if (!(B.lo.array() < B.hi.array()).all()) throw InputError("trivialize_box: empty box");
  if (z.size() != m || !(z.array() > B.lo.array()).all() || !(z.array() < B.hi.array()).all())
    throw InputError("trivialize_box: base value must lie in the open box");

  TrivializationResult res;
  res.box = B;
  res.z = z;
  res.spacing = options.spacing;

  std::optional<LimitValueSet> own;
  if (!sigma) {
    own = sigma_set(f, W, options.schedule, options.seed, options.critical);
    sigma = &*own;
  }
  if (options.R) {
    for (const auto& a : sigma->atoms())
      if (distance_to_box(a.center, B) <= a.radius + options.critical.box_margin)
        throw PreconditionError("trivialize_box: box closure meets the non-regular value estimate");
    res.R = *options.R;
  } else {
    const SafeRadius safe = find_safe_radius(f, W, B, options.schedule, options.seed, options.critical, sigma);
    res.R = safe.R;
    res.certificate = safe.certificate;
  }
  res.R1 = options.R1.value_or(1.5 * res.R);
  res.R2 = options.R2.value_or(2.0 * res.R);
  FieldSpec spec{FieldKind::Glued, 0, res.R, res.R1, res.R2};
  spec.validate(m);

  res.base_fiber = sample_fiber(f, W, z, options.window, options.fiber_budget, derive_seed(options.seed, 77));
  if (res.base_fiber.empty()) res.notes.push_back("no fiber points found over the base value in the window");
  res.base_components = count_fiber_components(f, W, z, options.window, options.spacing, res.base_fiber);

  const auto targets = box_grid(B, options.grid);
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const Eigen::VectorXd& t = targets[ti];
    const bool keep = ti == targets.size() / 2;
    TargetResult tr;
    tr.t = t;
    for (const auto& p : res.base_fiber) {
      try {
        Transport fwd = transport(f, W, p, t, false, spec, options.flow);
        const double drift = (f(fwd.end) - t).norm();
        Transport back = transport(f, W, fwd.end, z, true, spec, options.flow);
        const double rt = (back.end - p).norm();
        tr.max_drift = std::max(tr.max_drift, drift);
        tr.max_roundtrip = std::max(tr.max_roundtrip, rt);
        res.max_residual = std::max({res.max_residual, fwd.max_residual, back.max_residual});
        res.max_norm_drift = std::max({res.max_norm_drift, fwd.norm_drift, back.norm_drift});
        tr.points.push_back(fwd.end);
        if (keep && static_cast<int>(res.trajectories.size()) < options.keep_trajectories)
          for (auto& leg : fwd.legs) res.trajectories.push_back(std::move(leg));
      } catch (const Error& e) {
        ++tr.failures;
        std::ostringstream msg;
        msg << "transport from (" << p.transpose() << ") to t = (" << t.transpose() << ") failed: " << e.what();
        res.notes.push_back(msg.str());
      }
    }
    tr.components = count_fiber_components(f, W, t, options.window, options.spacing, tr.points);
    res.max_drift = std::max(res.max_drift, tr.max_drift);
    res.max_roundtrip = std::max(res.max_roundtrip, tr.max_roundtrip);
    res.failures += tr.failures;
    res.targets.push_back(std::move(tr));
  }

  bool constant = true;
  for (const auto& tr : res.targets) constant = constant && tr.components == res.base_components;
  const bool pass = res.failures == 0 && !res.base_fiber.empty() && res.max_drift < options.drift_tol &&
                    res.max_roundtrip < options.roundtrip_tol && res.max_residual < options.residual_tol &&
                    constant;
  if (!constant) res.notes.push_back("fiber component counts vary across the box");
  res.verdict = pass ? Verdict::Pass : Verdict::Fail;
  return res;
}

}  // namespace stratfib
