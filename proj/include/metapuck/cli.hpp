#pragma once

namespace metapuck {

// Full command-line front end, callable in-process for tests. Returns the
// exit status: 0 success, 1 usage/validation error, 2 missing input artifact.
int cli_main(int argc, const char* const* argv);

}  // namespace metapuck
