#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prouq::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,    // bad flags, unknown estimator, invalid input data
    kRuntime = 2,  // evaluation or transport failure
};

// Runs the `prouq` command line. args excludes the program name.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

} // namespace prouq::cli
