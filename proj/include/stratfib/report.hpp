#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stratfib/problem.hpp"

namespace stratfib {

inline constexpr const char* kVersion = "stratfib 0.1.0";

/// Command-line overrides of the problem configuration.
struct RunOptions {
  std::optional<Box> box;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

/// Report text plus auxiliary files keyed by file name.
struct RunOutput {
  std::string report;
  std::map<std::string, std::string> files;
  int exit_code = 0;  ///< 0 ok, 1 some FAIL verdict, 2 error
};

const std::vector<std::string>& commands();

/// Runs one command (or the whole pipeline for "report"). Errors raised by the
/// library become an error section and exit code 2; an unknown command throws InputError.
RunOutput run_command(const std::string& command, const ProblemFile& problem, const RunOptions& options);

/// Writes report.txt and the auxiliary files into dir (created when missing).
void write_outputs(const RunOutput& out, const std::filesystem::path& dir);

/// Parses "a,b,c,d" into a box with intervals [a,b], [c,d]. Throws InputError.
Box parse_box(const std::string& text, int m);

}  // namespace stratfib
