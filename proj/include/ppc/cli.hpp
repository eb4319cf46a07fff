#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ppc {

/// Command-line entry point, callable in-process for tests. `args` excludes
/// the program name. Exit codes: 0 success, 2 usage/config error,
/// 3 computation/data error, 4 fit non-convergence.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ppc
