#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace syrisk {

enum class Verb { Simulate, Fit, Forecast, Compare, Calibrate, Traffic, Study, Levels, Cxls, Help };

std::string to_string(Verb v);

/// Parsed command line. Options are keyed by flag name without the dashes;
/// boolean flags hold "true".
struct Command {
  Verb verb = Verb::Help;
  std::map<std::string, std::string> options;
  std::string help;  // usage text when verb is Help

  bool has(const std::string& name) const { return options.count(name) > 0; }
  std::optional<std::string> get(const std::string& name) const;
  std::string text(const std::string& name, const std::string& fallback) const;
  double number(const std::string& name, double fallback) const;
  long long integer(const std::string& name, long long fallback) const;
  bool flag(const std::string& name) const;
};

/// argv without the program name. Merges a --config JSON document (flags
/// win) and lets SYRISK_SEED override --seed. Throws UsageError naming the
/// offending flags.
Command parse_args(const std::vector<std::string>& args);

/// Executes a command; returns the process exit status. Errors propagate.
int run_command(const Command& cmd, std::ostream& out);

/// parse_args + run_command with the exit-status mapping: 0 success, 2 data
/// or validation errors, 3 numeric or estimation failures. Errors are
/// written to `err` as one JSON object.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace syrisk
