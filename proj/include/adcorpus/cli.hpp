#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "adcorpus/error.hpp"

namespace adcorpus::cli {

enum ExitCode : int { Ok = 0, Usage = 1, InputError = 2, ProcessingError = 3 };

/// Input and format problems map to InputError, everything else raised by
/// the library to ProcessingError.
int exit_code(ErrorKind kind) noexcept;

/// Runs one subcommand. args[0] is the program name. Results go to files or
/// `out`; warnings and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace adcorpus::cli
