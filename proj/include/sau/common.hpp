#pragma once

#include <stdexcept>
#include <string>

namespace sau {

/// Runtime failure in data handling, model math, or file formats.
/// Messages are single-line and end up verbatim on the CLI diagnostic path.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

}  // namespace sau
