#include "stratfib/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stratfib/errors.hpp"

namespace stratfib {

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string vec(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i));
  return s + ")";
}

std::string csv_vec(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v(i));
  return s;
}

struct Context {
  const ProblemFile& problem;
  ProblemConfig config;
  RunOutput out;
  std::optional<LimitValueSet> sigma;

  int n() const { return problem.nvars; }
  int m() const { return problem.map.dim(); }
  void fail() { out.exit_code = std::max(out.exit_code, 1); }
  void error() { out.exit_code = 2; }
};

void atoms_text(std::ostringstream& os, const LimitValueSet& set, const std::string& indent) {
  os << indent << "atoms: " << set.atoms().size() << "\n";
  for (std::size_t i = 0; i < set.atoms().size(); ++i) {
    const auto& a = set.atoms()[i];
    os << indent << "  atom " << i << ": center " << vec(a.center) << " radius " << num(a.radius)
       << " evidence " << a.evidence.size() << " source " << a.source
       << (a.low_confidence ? " low-confidence" : "") << "\n";
  }
  for (const auto& w : set.warnings) os << indent << "warning: " << w << "\n";
}

void atoms_csv(Context& ctx, const std::string& set_name, const LimitValueSet& set) {
  std::string& csv = ctx.out.files["atoms.csv"];
  if (csv.empty()) {
    csv = "set";
    for (int i = 0; i < set.dim(); ++i) csv += ",center_" + std::to_string(i + 1);
    csv += ",radius,evidence,source,low_confidence\n";
  }
  for (const auto& a : set.atoms())
    csv += set_name + "," + csv_vec(a.center) + "," + num(a.radius) + "," + std::to_string(a.evidence.size()) +
           "," + a.source + "," + (a.low_confidence ? "1" : "0") + "\n";
}

const LimitValueSet& sigma_of(Context& ctx) {
  if (!ctx.sigma)
    ctx.sigma = sigma_set(ctx.problem.map, ctx.problem.stratification, ctx.config.schedule, ctx.config.seed,
                          critical_options(ctx.config));
  return *ctx.sigma;
}

const Box& need_box(const Context& ctx) {
  if (!ctx.config.box) throw InputError("no box given (config.box or --box)");
  return *ctx.config.box;
}

// Commands

void cmd_audit(Context& ctx, std::ostringstream& os) {
  const auto& W = ctx.problem.stratification;
  const AuditOptions ao = audit_options(ctx.config);
  const auto& ac = ctx.config.audit;
  bool failed = false;

  const auto fr = check_frontier(W, ac.frontier_budget, derive_seed(ctx.config.seed, 11),
                                 Box::cube(ctx.n(), ac.frontier_box), ao);
  os << "frontier pairs: " << W.frontier().size() << "\n";
  for (const auto& e : fr.entries) {
    if (e.declared) {
      os << "  (" << e.sub << ", " << e.super << ") " << (e.confirmed ? "confirmed" : "NOT confirmed")
         << " approach " << num(e.min_distance) << "\n";
      failed = failed || !e.confirmed;
    } else {
      os << "  undeclared adjacency (" << e.sub << ", " << e.super << ") approach " << num(e.min_distance) << "\n";
      failed = true;
    }
  }

  std::string& csv = ctx.out.files["audit.csv"];
  csv = "condition,alpha,beta,point,scale,value,samples,verdict\n";
  std::vector<AuditReport> reports;
  std::uint64_t salt = 100;
  for (std::size_t k = 0; k < ac.points.size(); ++k) {
    const auto& p = ac.points[k];
    reports.push_back(check_whitney_b(W, p.super, p.sub, p.at, ac.sequences, derive_seed(ctx.config.seed, salt++), ao));
    reports.push_back(check_verdier_w(W, p.super, p.sub, p.at, ac.sequences, derive_seed(ctx.config.seed, salt++), ao));
    if (ac.wf_function) {
      const PolyMap g(ctx.n(), {*ac.wf_function});
      reports.push_back(check_wf(W, p.super, p.sub, g, p.at, ac.sequences, derive_seed(ctx.config.seed, salt++), ao));
    }
    for (std::size_t j = reports.size() - (ac.wf_function ? 3 : 2); j < reports.size(); ++j) {
      const auto& r = reports[j];
      os << "audit " << r.condition << " (" << r.beta << ", " << r.alpha << ") at " << vec(p.at) << ": "
         << to_string(r.verdict) << " C " << num(r.c_estimate) << (r.vacuous ? " vacuous" : "");
      if (r.skipped) os << " skipped " << r.skipped;
      os << "\n";
      for (const auto& row : r.rows) {
        os << "    scale " << num(row.scale) << " value " << num(row.value) << " samples " << row.samples << "\n";
        csv += r.condition + "," + r.alpha + "," + r.beta + "," + std::to_string(k) + "," + num(row.scale) + "," +
               num(row.value) + "," + std::to_string(row.samples) + "," + to_string(r.verdict) + "\n";
      }
      for (const auto& note : r.notes) os << "    note: " << note << "\n";
      failed = failed || r.verdict == Verdict::Fail;
    }
  }
  os << "verdict: " << (failed ? "FAIL" : "PASS") << "\n";
  if (failed) ctx.fail();
}

void cmd_milnor(Context& ctx, std::ostringstream& os) {
  const auto opts = critical_options(ctx.config);
  const Box region = Box::cube(ctx.n(), ctx.config.sing_radius);
  std::string& csv = ctx.out.files["milnor.csv"];
  csv = "stratum";
  for (int j = 0; j < ctx.n(); ++j) csv += ",x" + std::to_string(j + 1);
  csv += ",certificate\n";
  const auto& strata = ctx.problem.stratification.strata();
  for (std::size_t i = 0; i < strata.size(); ++i) {
    const auto ms = milnor_sample(ctx.problem.map, strata[i], region, 16, derive_seed(ctx.config.seed, 300 + i), opts);
    double worst = 0.0;
    for (double r : ms.residuals) worst = std::max(worst, r);
    os << "stratum " << ms.stratum_id << ": " << ms.points.size() << " Milnor points, max certificate "
       << num(worst) << "\n";
    for (std::size_t k = 0; k < ms.points.size(); ++k)
      csv += ms.stratum_id + "," + csv_vec(ms.points[k]) + "," + num(ms.residuals[k]) + "\n";
  }
}

void cmd_sinf(Context& ctx, std::ostringstream& os) {
  const auto opts = critical_options(ctx.config);
  const auto& strata = ctx.problem.stratification.strata();
  for (std::size_t i = 0; i < strata.size(); ++i) {
    // Same seeds as the sigma estimate so the two sections agree.
    const auto set = s_infinity_estimate(ctx.problem.map, strata[i], ctx.problem.stratification,
                                         ctx.config.schedule, derive_seed(ctx.config.seed, 2 * i + 1), opts);
    os << "stratum " << strata[i].id() << ":\n";
    atoms_text(os, set, "  ");
    atoms_csv(ctx, "sinf:" + strata[i].id(), set);
  }
}

void cmd_kinf(Context& ctx, std::ostringstream& os) {
  const auto set = k_infinity_estimate(ctx.problem.map, ctx.config.schedule, derive_seed(ctx.config.seed, 500),
                                       critical_options(ctx.config));
  atoms_text(os, set, "");
  atoms_csv(ctx, "kinf", set);
}

void cmd_sigma(Context& ctx, std::ostringstream& os) {
  const auto opts = critical_options(ctx.config);
  const auto& strata = ctx.problem.stratification.strata();
  LimitValueSet sing(ctx.m());
  for (std::size_t i = 0; i < strata.size(); ++i)
    sing.absorb(sing_values_sample(ctx.problem.map, strata[i], Box::cube(ctx.n(), opts.sing_radius), opts.sing_count,
                                   derive_seed(ctx.config.seed, 2 * i), opts));
  sing.merge(opts.merge_tol);
  os << "sing values:\n";
  atoms_text(os, sing, "  ");
  const auto& sigma = sigma_of(ctx);
  os << "sigma:\n";
  atoms_text(os, sigma, "  ");
  atoms_csv(ctx, "sing", sing);
  atoms_csv(ctx, "sigma", sigma);
}

void cmd_safe_radius(Context& ctx, std::ostringstream& os) {
  const Box& B = need_box(ctx);
  const auto safe = find_safe_radius(ctx.problem.map, ctx.problem.stratification, B, ctx.config.schedule,
                                     ctx.config.seed, critical_options(ctx.config), &sigma_of(ctx));
  os << "box: lo " << vec(B.lo) << " hi " << vec(B.hi) << "\n";
  os << "R: " << num(safe.R) << "\n";
  for (const auto& c : safe.certificate)
    os << "  shell " << num(c.radius) << " samples " << c.samples << " min distance " << num(c.min_distance) << "\n";
}

std::string svg_header(double window) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"" << num(-window) << " "
    << num(-window) << " " << num(2 * window) << " " << num(2 * window) << "\">\n"
    << "<g transform=\"scale(1,-1)\">\n"
    << "<rect x=\"" << num(-window) << "\" y=\"" << num(-window) << "\" width=\"" << num(2 * window)
    << "\" height=\"" << num(2 * window) << "\" fill=\"white\" stroke=\"none\"/>\n";
  return s.str();
}

const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

void plots(Context& ctx, const TrivializationResult& res) {
  const double w = ctx.config.window;
  const double dot = w / 150.0;
  std::ostringstream fib;
  fib << svg_header(w);
  for (std::size_t k = 0; k < res.targets.size(); ++k)
    for (const auto& p : res.targets[k].points)
      fib << "<circle cx=\"" << num(p(0)) << "\" cy=\"" << num(p(1)) << "\" r=\"" << num(dot) << "\" fill=\""
          << palette(k) << "\"/>\n";
  for (const auto& p : res.base_fiber)
    fib << "<circle cx=\"" << num(p(0)) << "\" cy=\"" << num(p(1)) << "\" r=\"" << num(dot) << "\" fill=\"black\"/>\n";
  fib << "</g>\n</svg>\n";
  ctx.out.files["fibers.svg"] = fib.str();

  std::ostringstream fl;
  fl << svg_header(w);
  for (double r : {res.R, res.R1, res.R2})
    fl << "<circle cx=\"0\" cy=\"0\" r=\"" << num(r) << "\" fill=\"none\" stroke=\"#999999\" stroke-width=\""
       << num(dot / 2) << "\" stroke-dasharray=\"" << num(dot * 3) << "\"/>\n";
  for (std::size_t k = 0; k < res.trajectories.size(); ++k) {
    fl << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"" << num(dot / 2) << "\" points=\"";
    for (const auto& p : res.trajectories[k].points) fl << num(p(0)) << "," << num(p(1)) << " ";
    fl << "\"/>\n";
  }
  fl << "</g>\n</svg>\n";
  ctx.out.files["flow.svg"] = fl.str();
}

void cmd_trivialize(Context& ctx, std::ostringstream& os) {
  const Box& B = need_box(ctx);
  const Eigen::VectorXd z = ctx.config.base.value_or(Eigen::VectorXd(0.5 * (B.lo + B.hi)));
  const auto opts = trivialize_options(ctx.config);
  const auto res = trivialize_box(ctx.problem.map, ctx.problem.stratification, B, z, opts, &sigma_of(ctx));
  os << "box: lo " << vec(B.lo) << " hi " << vec(B.hi) << " base " << vec(z) << "\n";
  os << "radii: R " << num(res.R) << " R1 " << num(res.R1) << " R2 " << num(res.R2) << "\n";
  os << "fiber spacing " << num(res.spacing) << " window " << num(opts.window) << "\n";
  os << "base fiber: " << res.base_fiber.size() << " points, " << res.base_components << " components\n";
  for (const auto& t : res.targets)
    os << "  target " << vec(t.t) << ": components " << t.components << " transported " << t.points.size()
       << " failures " << t.failures << " drift " << num(t.max_drift) << " round-trip " << num(t.max_roundtrip)
       << "\n";
  os << "max f-drift " << num(res.max_drift) << "\n";
  os << "max round-trip error " << num(res.max_roundtrip) << "\n";
  os << "max stratum residual " << num(res.max_residual) << "\n";
  os << "max norm drift outside R2 " << num(res.max_norm_drift) << "\n";
  for (const auto& note : res.notes) os << "note: " << note << "\n";
  os << "verdict: " << to_string(res.verdict) << "\n";
  if (res.verdict != Verdict::Pass) ctx.fail();

  std::string csv = "trajectory,t";
  for (int j = 0; j < ctx.n(); ++j) csv += ",x" + std::to_string(j + 1);
  csv += ",f_drift,norm,residual\n";
  for (std::size_t k = 0; k < res.trajectories.size(); ++k) {
    const auto& tr = res.trajectories[k];
    for (std::size_t s = 0; s < tr.points.size(); ++s)
      csv += std::to_string(k) + "," + num(tr.times[s]) + "," + csv_vec(tr.points[s]) + "," +
             num(tr.diagnostics[s].drift.norm()) + "," + num(tr.diagnostics[s].norm) + "," +
             num(tr.diagnostics[s].residual) + "\n";
  }
  ctx.out.files["trajectories.csv"] = csv;
  if (ctx.n() == 2) plots(ctx, res);
}

using Handler = void (*)(Context&, std::ostringstream&);

Handler handler(const std::string& cmd) {
  if (cmd == "audit-strata") return cmd_audit;
  if (cmd == "milnor") return cmd_milnor;
  if (cmd == "sinf") return cmd_sinf;
  if (cmd == "kinf") return cmd_kinf;
  if (cmd == "sigma") return cmd_sigma;
  if (cmd == "safe-radius") return cmd_safe_radius;
  if (cmd == "trivialize") return cmd_trivialize;
  return nullptr;
}

void section(Context& ctx, std::ostringstream& os, const std::string& cmd) {
  os << "\n[" << cmd << "]\n";
  std::ostringstream body;
  try {
    handler(cmd)(ctx, body);
    os << body.str();
  } catch (const Error& e) {
    os << body.str() << "error: " << e.what() << "\n";
    ctx.error();
  }
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> all{"audit-strata", "milnor", "sinf", "kinf", "sigma",
                                            "safe-radius", "trivialize", "report"};
  return all;
}

RunOutput run_command(const std::string& command, const ProblemFile& problem, const RunOptions& options) {
  if (command != "report" && !handler(command)) throw InputError("unknown command " + command);
  Context ctx{problem, problem.config, {}, std::nullopt};
  if (options.seed) ctx.config.seed = *options.seed;
  if (options.tol) ctx.config.tol = *options.tol;
  if (options.box) {
    if (options.box->dim() != problem.map.dim()) throw InputError("--box needs one interval per map component");
    ctx.config.box = options.box;
    if (ctx.config.base && (!(ctx.config.base->array() > options.box->lo.array()).all() ||
                            !(ctx.config.base->array() < options.box->hi.array()).all()))
      ctx.config.base.reset();
  }

  std::ostringstream os;
  os << "stratfib report\n"
     << "version: " << kVersion << "\n"
     << "problem: " << problem.name << "\n"
     << "digest: fnv1a64:" << problem.digest << "\n"
     << "nvars: " << problem.nvars << " components: " << problem.map.dim()
     << " strata: " << problem.stratification.strata().size() << "\n"
     << "seed: " << ctx.config.seed << "\n"
     << "command: " << command << "\n";
  if (command == "report") {
    for (const char* c : {"audit-strata", "milnor", "sigma", "kinf"}) section(ctx, os, c);
    if (ctx.config.box) {
      section(ctx, os, "safe-radius");
      section(ctx, os, "trivialize");
    } else {
      os << "\n[safe-radius]\nskipped: no box configured\n\n[trivialize]\nskipped: no box configured\n";
    }
  } else {
    section(ctx, os, command);
  }
  os << "\nexit status: " << ctx.out.exit_code << "\n";
  ctx.out.report = os.str();
  return ctx.out;
}

void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir / name).string());
    f << text;
  };
  put("report.txt", out.report);
  for (const auto& [name, text] : out.files) put(name, text);
}

Box parse_box(const std::string& text, int m) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("--box: not a number: '" + item + "'");
    }
  }
  if (static_cast<int>(v.size()) != 2 * m)
    throw InputError("--box needs " + std::to_string(2 * m) + " numbers (lo,hi per component)");
  Box B{Eigen::VectorXd(m), Eigen::VectorXd(m)};
  for (int i = 0; i < m; ++i) {
    B.lo(i) = v[static_cast<std::size_t>(2 * i)];
    B.hi(i) = v[static_cast<std::size_t>(2 * i + 1)];
    if (!(B.lo(i) < B.hi(i))) throw InputError("--box: each interval needs lo < hi");
  }
  return B;
}

}  // namespace stratfib
