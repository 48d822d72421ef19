#pragma once

#include <stdexcept>
#include <string>

namespace lmi {

/// Error type thrown by every lmi operation on contract violations.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lmi
