#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rydchiral {

// Invalid input: bad parameters, schema violations, precondition failures.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conditioning failures, non-convergence, instability.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problem size exceeds a memory or basis guard.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

// Non-fatal diagnostics go through here; the default writes to stderr.
void warn(std::string_view message);
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace rydchiral
