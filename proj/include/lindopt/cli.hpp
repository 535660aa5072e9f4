#pragma once

#include <string>
#include <vector>

namespace lindopt::cli {

/// Entry point shared by the binary and the tests. Returns the process exit
/// code: 0 success, 2 config error, 3 numeric failure, 4 IO error.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace lindopt::cli
