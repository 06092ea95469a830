#ifndef DDSEL_ERRORS_HPP
#define DDSEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ddsel {

// Error taxonomy mirrors the CLI exit codes: usage=1, data=2, io=3.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ddsel

#endif
