#pragma once

namespace ioth::cli {

// Entry point for the ioth binary. Returns the process exit code:
// 0 success, 1 stage failure (one-line diagnostic on stderr), 2 usage error.
int run(int argc, char** argv);

}  // namespace ioth::cli
