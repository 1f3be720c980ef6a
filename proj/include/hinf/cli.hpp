#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hinf {

/// Subcommands: run, profile, certify, truth, replay.
/// Exit codes: 0 success, 1 usage error, 2 runtime failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hinf
