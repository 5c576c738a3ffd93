#include "stratfib/problem.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "stratfib/errors.hpp"

namespace stratfib {

using nlohmann::json;

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ValidationError(where.empty() ? key : where + "." + key, "unknown key");
}

const json& required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where.empty() ? key : where + "." + key, "missing");
  return obj.at(key);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ValidationError(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(field, "must be finite");
  return d;
}

double positive(const json& v, const std::string& field) {
  const double d = number(v, field);
  if (!(d > 0.0)) throw ValidationError(field, "must be positive");
  return d;
}

int integer(const json& v, const std::string& field, int lo, int hi) {
  if (!v.is_number_integer()) throw ValidationError(field, "expected an integer");
  const long long k = v.get<long long>();
  if (k < lo || k > hi)
    throw ValidationError(field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(k);
}

std::string label(const json& v, const std::string& field) {
  if (!v.is_string() || v.get<std::string>().empty()) throw ValidationError(field, "expected a non-empty string");
  return v.get<std::string>();
}

Polynomial polynomial(const json& v, int nvars, const std::string& field) {
  if (!v.is_array()) throw ValidationError(field, "a polynomial is a list of [coeff, [exponents]] terms");
  std::vector<Term> terms;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string tf = field + "[" + std::to_string(k) + "]";
    const json& t = v[k];
    if (!t.is_array() || t.size() != 2 || !t[1].is_array())
      throw ValidationError(tf, "a term is [coeff, [e1, ..., en]]");
    Term term;
    term.coeff = number(t[0], tf + "[0]");
    if (static_cast<int>(t[1].size()) != nvars)
      throw ValidationError(tf + "[1]", "exponent list must have length nvars = " + std::to_string(nvars));
    for (std::size_t j = 0; j < t[1].size(); ++j)
      term.exponents.push_back(integer(t[1][j], tf + "[1][" + std::to_string(j) + "]", 0, 64));
    terms.push_back(std::move(term));
  }
  return Polynomial(nvars, std::move(terms));
}

std::vector<Polynomial> polynomials(const json& v, int nvars, const std::string& field) {
  if (!v.is_array()) throw ValidationError(field, "expected a list of polynomials");
  std::vector<Polynomial> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(polynomial(v[i], nvars, field + "[" + std::to_string(i) + "]"));
  return out;
}

Eigen::VectorXd vector(const json& v, int n, const std::string& field) {
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw ValidationError(field, "expected a list of " + std::to_string(n) + " numbers");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = number(v[static_cast<std::size_t>(i)], field + "[" + std::to_string(i) + "]");
  return out;
}

Ladder ladder(const json& v, const std::string& field, bool increasing) {
  only_keys(v, field, {"r0", "factor", "count"});
  Ladder l;
  l.r0 = positive(required(v, "r0", field), field + ".r0");
  l.factor = positive(required(v, "factor", field), field + ".factor");
  l.count = integer(required(v, "count", field), field + ".count", 4, 60);
  if (increasing && !(l.factor > 1.0)) throw ValidationError(field + ".factor", "must exceed 1");
  if (!increasing && !(l.factor < 1.0)) throw ValidationError(field + ".factor", "must be below 1");
  return l;
}

ProblemConfig config(const json& c, int nvars, int m) {
  ProblemConfig out;
  if (c.is_null()) return out;
  only_keys(c, "config",
            {"tol", "max_iter", "rank_tol", "schedule", "tube", "seed", "radii", "box", "base", "grid",
             "fiber_budget", "window", "fiber_spacing", "integrator_tol", "sing_radius",
             "seeds_per_shell", "merge_tol", "audit"});
  if (c.contains("tol")) out.tol = positive(c["tol"], "config.tol");
  if (c.contains("max_iter")) out.max_iter = integer(c["max_iter"], "config.max_iter", 1, 10000);
  if (c.contains("rank_tol")) {
    out.rank_tol = positive(c["rank_tol"], "config.rank_tol");
    if (out.rank_tol >= 1.0) throw ValidationError("config.rank_tol", "must be below 1");
  }
  if (c.contains("schedule")) out.schedule = ladder(c["schedule"], "config.schedule", true);
  if (c.contains("tube")) out.tube = ladder(c["tube"], "config.tube", false);
  if (c.contains("seed")) {
    if (!c["seed"].is_number_unsigned()) throw ValidationError("config.seed", "expected a non-negative integer");
    out.seed = c["seed"].get<std::uint64_t>();
  }
  if (c.contains("radii")) {
    const json& r = c["radii"];
    only_keys(r, "config.radii", {"R", "R1", "R2"});
    if (r.contains("R")) out.R = positive(r["R"], "config.radii.R");
    if (r.contains("R1")) out.R1 = positive(r["R1"], "config.radii.R1");
    if (r.contains("R2")) out.R2 = positive(r["R2"], "config.radii.R2");
    if (out.R && out.R1 && !(*out.R < *out.R1)) throw ValidationError("config.radii", "needs R < R1");
    if (out.R1 && out.R2 && !(*out.R1 < *out.R2)) throw ValidationError("config.radii", "needs R1 < R2");
    if (out.R && out.R2 && !(*out.R < *out.R2)) throw ValidationError("config.radii", "needs R < R2");
  }
  if (c.contains("box")) {
    const json& b = c["box"];
    if (!b.is_array() || static_cast<int>(b.size()) != m)
      throw ValidationError("config.box", "expected one [lo, hi] interval per map component");
    Box box{Eigen::VectorXd(m), Eigen::VectorXd(m)};
    for (int i = 0; i < m; ++i) {
      const auto iv = vector(b[static_cast<std::size_t>(i)], 2, "config.box[" + std::to_string(i) + "]");
      if (!(iv(0) < iv(1))) throw ValidationError("config.box[" + std::to_string(i) + "]", "needs lo < hi");
      box.lo(i) = iv(0);
      box.hi(i) = iv(1);
    }
    out.box = box;
  }
  if (c.contains("base")) out.base = vector(c["base"], m, "config.base");
  if (c.contains("grid")) out.grid = integer(c["grid"], "config.grid", 1, 100);
  if (c.contains("fiber_budget")) out.fiber_budget = integer(c["fiber_budget"], "config.fiber_budget", 1, 10000);
  if (c.contains("window")) out.window = positive(c["window"], "config.window");
  if (c.contains("fiber_spacing")) out.fiber_spacing = positive(c["fiber_spacing"], "config.fiber_spacing");
  if (out.fiber_spacing >= out.window) throw ValidationError("config.fiber_spacing", "must be below the window");
  if (c.contains("integrator_tol")) out.integrator_tol = positive(c["integrator_tol"], "config.integrator_tol");
  if (c.contains("sing_radius")) out.sing_radius = positive(c["sing_radius"], "config.sing_radius");
  if (c.contains("seeds_per_shell")) out.seeds_per_shell = integer(c["seeds_per_shell"], "config.seeds_per_shell", 1, 10000);
  if (c.contains("merge_tol")) {
    out.merge_tol = number(c["merge_tol"], "config.merge_tol");
    if (out.merge_tol < 0.0) throw ValidationError("config.merge_tol", "must be non-negative");
  }
  if (c.contains("audit")) {
    const json& a = c["audit"];
    only_keys(a, "config.audit",
              {"r0", "scales", "sequences", "frontier_budget", "frontier_box", "threshold", "points", "wf_function"});
    auto& A = out.audit;
    if (a.contains("r0")) A.r0 = positive(a["r0"], "config.audit.r0");
    if (a.contains("scales")) A.scales = integer(a["scales"], "config.audit.scales", 2, 30);
    if (a.contains("sequences")) A.sequences = integer(a["sequences"], "config.audit.sequences", 1, 10000);
    if (a.contains("frontier_budget")) A.frontier_budget = integer(a["frontier_budget"], "config.audit.frontier_budget", 1, 10000);
    if (a.contains("frontier_box")) A.frontier_box = positive(a["frontier_box"], "config.audit.frontier_box");
    if (a.contains("threshold")) A.threshold = positive(a["threshold"], "config.audit.threshold");
    if (a.contains("wf_function")) A.wf_function = polynomial(a["wf_function"], nvars, "config.audit.wf_function");
    if (a.contains("points")) {
      const json& pts = a["points"];
      if (!pts.is_array()) throw ValidationError("config.audit.points", "expected a list");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string f = "config.audit.points[" + std::to_string(i) + "]";
        only_keys(pts[i], f, {"pair", "at"});
        const json& pair = required(pts[i], "pair", f);
        if (!pair.is_array() || pair.size() != 2) throw ValidationError(f + ".pair", "expected [sub, super]");
        A.points.push_back({label(pair[0], f + ".pair[0]"), label(pair[1], f + ".pair[1]"),
                            vector(required(pts[i], "at", f), nvars, f + ".at")});
      }
    }
  }
  return out;
}

}  // namespace

ProblemFile parse_problem(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(name + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what(), line, col);
  }
  only_keys(doc, "", {"description", "nvars", "map", "strata", "frontier", "config"});
  if (doc.contains("description") && !doc["description"].is_string())
    throw ValidationError("description", "expected a string");

  const int n = integer(required(doc, "nvars", ""), "nvars", 1, 32);
  auto comps = polynomials(required(doc, "map", ""), n, "map");
  if (comps.empty()) throw ValidationError("map", "needs at least one component");
  const int m = static_cast<int>(comps.size());

  const json& js = required(doc, "strata", "");
  if (!js.is_array() || js.empty()) throw ValidationError("strata", "expected a non-empty list");
  std::vector<Stratum> strata;
  for (std::size_t i = 0; i < js.size(); ++i) {
    const std::string f = "strata[" + std::to_string(i) + "]";
    only_keys(js[i], f, {"id", "equations", "inequalities", "dim"});
    const std::string id = label(required(js[i], "id", f), f + ".id");
    PolySystem eqs(n), ineqs(n);
    if (js[i].contains("equations")) eqs = PolySystem(n, polynomials(js[i]["equations"], n, f + ".equations"));
    if (js[i].contains("inequalities"))
      ineqs = PolySystem(n, polynomials(js[i]["inequalities"], n, f + ".inequalities"));
    const int dim = integer(required(js[i], "dim", f), f + ".dim", 0, n);
    try {
      strata.emplace_back(id, std::move(eqs), std::move(ineqs), dim);
    } catch (const InputError& e) {
      throw ValidationError(f, e.what());
    }
  }

  std::vector<FrontierPair> frontier;
  if (doc.contains("frontier")) {
    const json& jf = doc["frontier"];
    if (!jf.is_array()) throw ValidationError("frontier", "expected a list of [sub, super] pairs");
    for (std::size_t i = 0; i < jf.size(); ++i) {
      const std::string f = "frontier[" + std::to_string(i) + "]";
      if (!jf[i].is_array() || jf[i].size() != 2) throw ValidationError(f, "expected [sub, super]");
      frontier.push_back({label(jf[i][0], f + "[0]"), label(jf[i][1], f + "[1]")});
    }
  }
  std::optional<Stratification> W;
  try {
    W.emplace(n, std::move(strata), std::move(frontier));
  } catch (const InputError& e) {
    throw ValidationError("frontier", e.what());
  }
  if (W->max_dim() < m) throw ValidationError("strata", "the stratified set must have dimension >= number of map components");

  ProblemConfig cfg = config(doc.contains("config") ? doc["config"] : json(), n, m);
  for (std::size_t i = 0; i < cfg.audit.points.size(); ++i) {
    const auto& p = cfg.audit.points[i];
    const std::string f = "config.audit.points[" + std::to_string(i) + "].pair";
    if (!W->declared(p.sub, p.super)) throw ValidationError(f, "(" + p.sub + ", " + p.super + ") is not a declared frontier pair");
    if (!W->stratum(p.sub).contains(p.at, 1e-8))
      throw ValidationError("config.audit.points[" + std::to_string(i) + "].at", "point is not on stratum " + p.sub);
  }
  if (cfg.base && cfg.box) {
    if (!(cfg.base->array() > cfg.box->lo.array()).all() || !(cfg.base->array() < cfg.box->hi.array()).all())
      throw ValidationError("config.base", "must lie in the open box");
  }

  return ProblemFile{name, fnv1a64_hex(text), n, PolyMap(n, std::move(comps)), std::move(*W), std::move(cfg)};
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open problem file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str(), path.filename().string());
}

CriticalOptions critical_options(const ProblemConfig& c) {
  CriticalOptions o;
  o.max_iter = std::max(c.max_iter, 60);
  o.seeds_per_level = c.seeds_per_shell;
  o.merge_tol = c.merge_tol;
  o.sing_radius = c.sing_radius;
  o.tube = c.tube;
  o.sampling.tol = c.tol;
  o.sampling.max_iter = c.max_iter;
  return o;
}

AuditOptions audit_options(const ProblemConfig& c) {
  AuditOptions o;
  o.r0 = c.audit.r0;
  o.scales = c.audit.scales;
  o.threshold = c.audit.threshold;
  o.rank_tol = c.rank_tol;
  o.sampling.tol = c.tol;
  o.sampling.max_iter = c.max_iter;
  return o;
}

TrivializeOptions trivialize_options(const ProblemConfig& c) {
  TrivializeOptions o;
  o.grid = c.grid;
  o.fiber_budget = c.fiber_budget;
  o.window = c.window;
  o.spacing = c.fiber_spacing;
  o.flow.atol = c.integrator_tol;
  o.flow.rtol = c.integrator_tol;
  o.R = c.R;
  o.R1 = c.R1;
  o.R2 = c.R2;
  o.schedule = c.schedule;
  o.critical = critical_options(c);
  o.seed = c.seed;
  return o;
}

}  // namespace stratfib
