#pragma once

namespace rsm::cli {

// Parses and runs one `rsm` invocation; returns the process exit code
// (0 ok, 2 validation error, 3 runtime or numeric error).
int run(int argc, char** argv);

}  // namespace rsm::cli
