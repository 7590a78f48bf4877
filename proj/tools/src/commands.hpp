#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "oscidiff/error.hpp"

namespace oscidiff::cli {

struct Options {
  std::string command;
  std::string config_path;
  std::string out;  // overrides the config's output directory when set
  bool json = false;
  int jobs = 1;
  bool strict_rates = false;
};

enum ExitCode { kOk = 0, kConfigError = 1, kSolverError = 2, kAssertionFailed = 3 };

/// Parses argv and runs one subcommand; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Runs a subcommand on an already parsed config.
int execute(const Options& opts, const ExperimentConfig& cfg, std::ostream& out,
            std::ostream& err);

int exit_code_for(Errc code);

/// File name of the committed reference run for a study config.
std::string fixture_name(const ExperimentConfig& cfg);

/// 0.5 x the smallest plain gradient error of the reference run, or nothing
/// when no fixture matches the config's eps list.
std::optional<double> plain_gradient_floor(const std::string& fixture_dir,
                                           const ExperimentConfig& cfg);

/// Reads a report CSV into columns keyed by header name.
std::map<std::string, std::vector<double>> read_report_csv(const std::string& path);

}  // namespace oscidiff::cli
