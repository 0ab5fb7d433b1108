#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gosc::cli {

// Environment variable that overrides the endpoint of every remote scorer.
inline constexpr const char* kEndpointEnv = "GOSC_SCORER_ENDPOINT";

/// Runs one `gosc` invocation (argv[0] is the program name). Returns the
/// process exit code; diagnostics go to `err`, summaries to `out`.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace gosc::cli
