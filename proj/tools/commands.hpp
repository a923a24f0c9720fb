#pragma once

namespace interpkit::cli {

enum ExitCode : int { Pass = 0, AssertionFailed = 1, ConfigFailure = 2, NumericalFailure = 3 };

// Full command line: weight | jnorm | commute | verify <suite>, then the config path.
int run(int argc, char** argv);

} // namespace interpkit::cli
