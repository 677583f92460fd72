#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace metivier::cli {

// args excludes the program name. Exit codes: 0 ok, 2 usage or validation
// error, 3 numerical-quality flag (the output is still written).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace metivier::cli
