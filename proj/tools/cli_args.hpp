#pragma once

#include <optional>
#include <string>

#include "json.hpp"

namespace bandtint::cli {

/// A validated subcommand. `options` uses the flag names with dashes turned
/// into underscores, the form the batch job API accepts.
struct Command {
  std::string name;
  nlohmann::json options = nlohmann::json::object();
};

struct ParseResult {
  std::optional<Command> command;
  /// Exit code to use when no command was produced (0 after --help).
  int exit_code = 0;
  /// Help text (stdout) or usage error (stderr).
  std::string message;
  bool is_error = false;
};

ParseResult parse_args(int argc, const char* const* argv);

}  // namespace bandtint::cli
