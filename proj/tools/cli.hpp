#pragma once

#include <iosfwd>

namespace gptpsim::cli {

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 1 runtime failure, 2 usage or validation failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gptpsim::cli
