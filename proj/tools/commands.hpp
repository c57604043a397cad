#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eg2c::cli {

// Entry point shared by the binary and the CLI tests. Returns the
// process exit code: 0 ok, 1 usage or I/O error, 2 invalid config,
// 3 simulation fault.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace eg2c::cli
