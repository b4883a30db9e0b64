#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rcdet {

/// The `rcdet` command line. Returns the process exit code; errors go to
/// `err` as "error: <message>".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace rcdet
