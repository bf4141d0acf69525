#ifndef RANKDTE_CLI_APP_HPP
#define RANKDTE_CLI_APP_HPP

#include <string>
#include <vector>

namespace rankdte::cli {

// Runs the command-line interface.  Returns the process exit code; hard
// errors print one machine-readable JSON record to stderr.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace rankdte::cli

#endif  // RANKDTE_CLI_APP_HPP
