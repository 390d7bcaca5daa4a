// Command-line driver, callable in-process. Exit codes: 0 success, 1 a
// check ran and failed, 2 unusable configuration or input, 3 numerical
// breakdown.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace joyce::cli {

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace joyce::cli
