#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace msd::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,    // a verification (counts, gradients, ordering) failed
  kUsage = 2,          // unknown flag, missing argument, malformed value
  kInvalidConfig = 3,  // flags parse but describe an invalid configuration
  kNumeric = 4,        // non-finite values during computation
  kIo = 5,             // file missing or not writable
  kFormat = 6,         // malformed GRIDSEQ, checkpoint or config file
  kMismatch = 7,       // dataset and checkpoint or flags disagree
};

// Parses and runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace msd::cli
