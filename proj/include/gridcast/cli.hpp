#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gridcast {

// Runs one command line (arguments after the program name). Returns the exit
// code: 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gridcast
