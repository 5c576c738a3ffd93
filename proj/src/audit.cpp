#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stratfib/errors.hpp"
#include "stratfib/strata.hpp"

namespace stratfib {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

std::vector<double> AuditOptions::ladder() const {
  if (!(r0 > 0.0) || scales < 2) throw InputError("audit: ladder needs r0 > 0 and at least 2 scales");
  std::vector<double> out;
  double r = r0;
  for (int k = 0; k < scales; ++k, r *= 0.5) out.push_back(r);
  return out;
}

bool FrontierReport::all_confirmed() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const FrontierEntry& e) { return !e.declared || e.confirmed; });
}

bool FrontierReport::has_undeclared() const {
  return std::any_of(entries.begin(), entries.end(),
                     [](const FrontierEntry& e) { return !e.declared; });
}

Verdict bounded_ratio_verdict(const std::vector<ScaleRow>& rows, double growth_limit) {
  if (rows.empty()) return Verdict::Inconclusive;
  for (const auto& r : rows)
    if (r.samples == 0) return Verdict::Inconclusive;
  const double first = rows.front().value;
  const double last = rows.back().value;
  if (last <= 1e-12) return Verdict::Pass;
  return last <= growth_limit * first ? Verdict::Pass : Verdict::Fail;
}

namespace {

constexpr double kApproachTol = 1e-6;

// Smallest distance from y to points of `target` found on a ladder of balls
// shrinking from 0.1 to 1e-8.
double approach_distance(const Stratum& target, const Point& y, Rng& rng,
                         const SamplingOptions& sampling) {
  double best = std::numeric_limits<double>::infinity();
  for (double r = 0.1; r >= 1e-8; r *= 0.1) {
    auto x = sample_near(target, y, r, rng, sampling, 32);
    if (!x) break;
    best = std::min(best, (*x - y).norm());
  }
  return best;
}

Point on_stratum(const Stratum& s, const Point& y, const SamplingOptions& sampling) {
  return newton_project(s.equations(), y, sampling.tol, sampling.max_iter);
}

// A point x of A near y paired with its foot y' on B (Newton projection from x).
std::optional<std::pair<Point, Point>> sample_pair(const Stratum& A, const Stratum& B, const Point& y,
                                                   double r, Rng& rng, const SamplingOptions& sampling) {
  for (int k = 0; k < 8; ++k) {
    auto x = sample_near(A, y, r, rng, sampling);
    if (!x) return std::nullopt;
    Point yp;
    try {
      yp = newton_project(B.equations(), *x, sampling.tol, sampling.max_iter);
    } catch (const ProjectionError&) {
      continue;
    }
    if (!B.inequalities_hold(yp) || (yp - y).norm() > 2.0 * r) continue;
    return std::make_pair(*x, yp);
  }
  return std::nullopt;
}

}  // namespace

FrontierReport check_frontier(const Stratification& W, int budget, std::uint64_t seed,
                              const Box& sample_box, const AuditOptions& options) {
  if (budget <= 0) throw InputError("check_frontier: budget must be positive");
  FrontierReport report;
  Rng rng(seed);

  auto audit_pair = [&](const Stratum& sub, const Stratum& super, bool declared) {
    FrontierEntry e{sub.id(), super.id(), declared, false, 0.0};
    const auto sample = sample_stratum(sub, sample_box, budget, rng.next(), options.sampling);
    if (sample.points.empty()) {
      e.min_distance = std::numeric_limits<double>::infinity();
      return e;
    }
    double worst = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : sample.points) {
      const double d = approach_distance(super, y, rng, options.sampling);
      worst = std::max(worst, d);
      best = std::min(best, d);
    }
    // Declared pairs need every sampled point approached; undeclared ones are
    // flagged as soon as any sampled point is approached.
    e.min_distance = declared ? worst : best;
    e.confirmed = e.min_distance < kApproachTol;
    return e;
  };

  for (const auto& p : W.frontier())
    report.entries.push_back(audit_pair(W.stratum(p.sub), W.stratum(p.super), true));

  for (const auto& sub : W.strata()) {
    for (const auto& super : W.strata()) {
      if (sub.id() == super.id() || W.declared(sub.id(), super.id())) continue;
      if (sub.declared_dim() >= super.declared_dim()) continue;
      auto e = audit_pair(sub, super, false);
      if (e.confirmed) report.entries.push_back(std::move(e));
    }
  }
  return report;
}

AuditReport check_whitney_b(const Stratification& W, const std::string& alpha,
                            const std::string& beta, const Point& y, int n_sequences,
                            std::uint64_t seed, const AuditOptions& options) {
  const Stratum& A = W.stratum(alpha);
  const Stratum& B = W.stratum(beta);
  if (!W.declared(beta, alpha))
    throw InputError("check_whitney_b: (" + beta + ", " + alpha + ") is not a declared frontier pair");
  if (!B.contains(y, 1e-8)) throw InputError("check_whitney_b: base point is not on " + beta);

  AuditReport report{"whitney_b", alpha, beta, {}, Verdict::Inconclusive, 0.0, false, 0, {}};
  Rng rng(seed);
  const auto ladder = options.ladder();
  for (double r : ladder) report.rows.push_back({r, 0.0, 0});

  for (int s = 0; s < n_sequences; ++s) {
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      const double r = ladder[k];
      auto xk = sample_near(A, y, r, rng, options.sampling);
      std::optional<Point> yk;
      if (B.declared_dim() == 0)
        yk = on_stratum(B, y, options.sampling);
      else
        yk = sample_near(B, y, 0.5 * r, rng, options.sampling);
      if (!xk || !yk) {
        ++report.skipped;
        continue;
      }
      const Eigen::VectorXd secant = *xk - *yk;
      if (secant.norm() == 0.0) {
        ++report.skipped;
        continue;
      }
      const double dev = subspace_delta(Subspace::span(secant), A.tangent(*xk, options.rank_tol));
      report.rows[k].value = std::max(report.rows[k].value, dev);
      ++report.rows[k].samples;
    }
  }

  const bool complete = std::all_of(report.rows.begin(), report.rows.end(),
                                    [](const ScaleRow& r) { return r.samples > 0; });
  for (const auto& row : report.rows) report.c_estimate = std::max(report.c_estimate, row.value);
  if (!complete) {
    report.verdict = Verdict::Inconclusive;
    report.notes.push_back("insufficient samples on some scale");
    return report;
  }
  const double first = report.rows.front().value;
  const double last = report.rows.back().value;
  const bool decaying = last <= 0.25 * first;
  if (last < options.threshold) {
    report.verdict = Verdict::Pass;
  } else if (decaying) {
    report.verdict = Verdict::Pass;
    report.notes.push_back("secant deviation above threshold at the finest scale but decaying");
  } else {
    report.verdict = Verdict::Fail;
  }
  return report;
}

AuditReport check_verdier_w(const Stratification& W, const std::string& alpha,
                            const std::string& beta, const Point& y, int n_pairs,
                            std::uint64_t seed, const AuditOptions& options) {
  const Stratum& A = W.stratum(alpha);
  const Stratum& B = W.stratum(beta);
  if (!W.declared(beta, alpha))
    throw InputError("check_verdier_w: (" + beta + ", " + alpha + ") is not a declared frontier pair");
  if (!B.contains(y, 1e-8)) throw InputError("check_verdier_w: base point is not on " + beta);

  AuditReport report{"verdier_w", alpha, beta, {}, Verdict::Inconclusive, 0.0, false, 0, {}};
  Rng rng(seed);
  const auto ladder = options.ladder();

  if (B.declared_dim() == 0) {
    // delta of the trivial tangent space into anything is zero.
    for (double r : ladder) report.rows.push_back({r, 0.0, n_pairs});
    report.vacuous = true;
    report.verdict = Verdict::Pass;
    report.notes.push_back("vacuous: frontier stratum has dimension 0");
    return report;
  }

  for (double r : ladder) {
    ScaleRow row{r, 0.0, 0};
    for (int p = 0; p < n_pairs; ++p) {
      const auto pair = sample_pair(A, B, y, r, rng, options.sampling);
      if (!pair) {
        ++report.skipped;
        continue;
      }
      const Point* x = &pair->first;
      const Point* yp = &pair->second;
      const double dist = (*yp - *x).norm();
      if (dist == 0.0) {
        ++report.skipped;
        continue;
      }
      const double d = subspace_delta(B.tangent(*yp, options.rank_tol), A.tangent(*x, options.rank_tol));
      row.value = std::max(row.value, d / dist);
      ++row.samples;
    }
    report.rows.push_back(row);
    report.c_estimate = std::max(report.c_estimate, row.value);
  }
  report.verdict = bounded_ratio_verdict(report.rows, options.growth_limit);
  return report;
}

namespace {

struct FunctionKernel {
  Subspace kernel;
  int rank;
};

FunctionKernel kernel_of(const Stratum& s, const PolyMap& g, const Point& x, double rank_tol) {
  const Subspace T = s.tangent(x, rank_tol);
  if (T.is_trivial()) return {T, 0};
  const Eigen::VectorXd grad = g.jacobian(x).row(0).transpose();
  const Eigen::VectorXd a = T.basis().transpose() * grad;
  if (a.norm() <= rank_tol * std::max(1.0, grad.norm())) return {T, 0};
  const Eigen::MatrixXd N = null_space(a.transpose(), rank_tol);
  Eigen::MatrixXd B = T.basis() * N;
  if (B.cols() > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    B = qr.householderQ() * Eigen::MatrixXd::Identity(B.rows(), B.cols());
  }
  return {Subspace(s.nvars(), B), 1};
}

}  // namespace

AuditReport check_wf(const Stratification& W, const std::string& alpha, const std::string& beta,
                     const PolyMap& g, const Point& y, int n_pairs, std::uint64_t seed,
                     const AuditOptions& options) {
  if (g.dim() != 1) throw InputError("check_wf: g must be scalar");
  if (g.nvars() != W.nvars()) throw InputError("check_wf: g has wrong nvars");
  const Stratum& A = W.stratum(alpha);
  const Stratum& B = W.stratum(beta);
  if (!W.declared(beta, alpha))
    throw InputError("check_wf: (" + beta + ", " + alpha + ") is not a declared frontier pair");
  if (!B.contains(y, 1e-8)) throw InputError("check_wf: base point is not on " + beta);

  AuditReport report{"wf", alpha, beta, {}, Verdict::Inconclusive, 0.0, false, 0, {}};
  Rng rng(seed);
  const auto ladder = options.ladder();

  if (B.declared_dim() == 0) {
    for (double r : ladder) report.rows.push_back({r, 0.0, n_pairs});
    report.vacuous = true;
    report.verdict = Verdict::Pass;
    report.notes.push_back("vacuous: g restricted to a 0-dimensional stratum has trivial kernel");
    return report;
  }

  int rank_alpha = -1;
  int rank_beta = -1;
  auto track_rank = [](int& slot, int r, const std::string& id) {
    if (slot >= 0 && slot != r)
      throw ConstantRankError("check_wf: rank of g restricted to " + id + " varies across samples");
    slot = r;
  };

  bool any_nontrivial = false;
  for (double r : ladder) {
    ScaleRow row{r, 0.0, 0};
    for (int p = 0; p < n_pairs; ++p) {
      const auto pair = sample_pair(A, B, y, r, rng, options.sampling);
      if (!pair) {
        ++report.skipped;
        continue;
      }
      const Point* x = &pair->first;
      const Point* yp = &pair->second;
      const auto kb = kernel_of(B, g, *yp, options.rank_tol);
      const auto ka = kernel_of(A, g, *x, options.rank_tol);
      track_rank(rank_beta, kb.rank, beta);
      track_rank(rank_alpha, ka.rank, alpha);
      const double dist = (*yp - *x).norm();
      if (dist == 0.0) {
        ++report.skipped;
        continue;
      }
      any_nontrivial = any_nontrivial || !kb.kernel.is_trivial();
      row.value = std::max(row.value, subspace_delta(kb.kernel, ka.kernel) / dist);
      ++row.samples;
    }
    report.rows.push_back(row);
    report.c_estimate = std::max(report.c_estimate, row.value);
  }
  report.verdict = bounded_ratio_verdict(report.rows, options.growth_limit);
  if (!any_nontrivial) {
    report.vacuous = true;
    report.notes.push_back("vacuous: kernel of g on the frontier stratum is trivial");
  }
  report.notes.push_back("ratio = delta(ker on " + beta + ", ker on " + alpha + ") / distance");
  return report;
}

}  // namespace stratfib
