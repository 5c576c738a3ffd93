#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stratfib/critical.hpp"
#include "stratfib/strata.hpp"
#include "stratfib/trivialize.hpp"

namespace stratfib {

/// Base point for the regularity audits of one frontier pair.
struct AuditPoint {
  std::string sub;
  std::string super;
  Point at;
};

struct AuditConfig {
  double r0 = 0.1;
  int scales = 4;
  int sequences = 8;
  int frontier_budget = 8;
  double frontier_box = 2.0;
  double threshold = 1e-3;
  std::vector<AuditPoint> points;
  std::optional<Polynomial> wf_function;
};

struct ProblemConfig {
  double tol = 1e-10;
  int max_iter = 50;
  double rank_tol = 1e-8;
  Ladder schedule = default_schedule();
  Ladder tube{0.1, 0.5, 11};
  std::uint64_t seed = 1;
  std::optional<double> R;
  std::optional<double> R1;
  std::optional<double> R2;
  std::optional<Box> box;
  std::optional<Eigen::VectorXd> base;
  int grid = 9;
  int fiber_budget = 40;
  double window = 20.0;
  double fiber_spacing = 0.05;
  double integrator_tol = 1e-9;
  double sing_radius = 8.0;
  int seeds_per_shell = 32;
  double merge_tol = 1e-3;
  AuditConfig audit;
};

struct ProblemFile {
  std::string name;    ///< file name without directories
  std::string digest;  ///< FNV-1a 64 of the file bytes, hex
  int nvars = 0;
  PolyMap map;
  Stratification stratification;
  ProblemConfig config;
};

/// Reads and validates a problem file. Throws ParseError (with line and column)
/// and ValidationError (naming the offending field).
ProblemFile load_problem(const std::filesystem::path& path);
ProblemFile parse_problem(const std::string& text, const std::string& name);

std::string fnv1a64_hex(const std::string& bytes);

CriticalOptions critical_options(const ProblemConfig& c);
AuditOptions audit_options(const ProblemConfig& c);
TrivializeOptions trivialize_options(const ProblemConfig& c);

}  // namespace stratfib
