#pragma once

#include <iosfwd>

namespace glad::cli {

/// Exit status: 0 success, 2 usage or input errors, 1 anything else.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace glad::cli
