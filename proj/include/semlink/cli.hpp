#pragma once

#include <string>
#include <vector>

namespace semlink {

// Entry point behind the semlink binary. Exit codes: 0 success,
// 1 usage/validation error, 2 runtime failure.
int cli_main(const std::vector<std::string>& args);

std::string cli_usage();

}  // namespace semlink
