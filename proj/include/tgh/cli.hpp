#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tgh/errors.hpp"

namespace tgh::cli {

// Bad flags, unreadable files, malformed input. Maps to exit status 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

// Reads one numeric column from CSV text. Blank lines and lines starting with
// '#' are skipped. A first row that does not parse as numbers is a header.
// `column` selects by header name or zero-based index; empty selects the
// first column. Non-numeric cells raise UsageError naming the line.
std::vector<double> read_numeric_column(std::istream& in, const std::string& column = "");

// Entry point of the ghfit tool. Never throws; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tgh::cli
