#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fiberphoton {

// Full command dispatcher; args excludes the program name.
// Exit codes: 0 success, 1 runtime or numeric failure, 2 usage error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace fiberphoton
