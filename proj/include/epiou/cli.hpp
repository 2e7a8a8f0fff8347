#pragma once

// Command-line front end. Every subcommand option can also be given as a key
// of the JSON file passed with --config (dashes become underscores);
// explicit flags override the file.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace epiou::cli {

enum ExitCode : int { kOk = 0, kIoError = 1, kConfigError = 2, kDegraded = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience for tests: args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace epiou::cli
