#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pnclab::cli {

// Dispatches the train / eval / sweep / baseline-af / dump-constellation
// subcommands. Exit codes: 0 ok, 2 usage or config error, 3 I/O failure,
// 4 corrupt artifact. The PNC_LAB_SEED environment variable overrides
// every master seed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace pnclab::cli
