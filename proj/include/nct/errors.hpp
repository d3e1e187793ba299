#pragma once

#include <stdexcept>
#include <string>

namespace nct {

/// Bad user input: malformed files, invalid configuration, out-of-range
/// parameters. The CLI maps this to exit code 2.
class input_error : public std::runtime_error {
public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

/// Failure inside an analysis: numerical pathology, degenerate data,
/// exhausted iteration budgets. The CLI maps this to exit code 1.
class analysis_error : public std::runtime_error {
public:
  explicit analysis_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nct
