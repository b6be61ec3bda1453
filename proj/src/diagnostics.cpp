#include "rydchiral/errors.hpp"

#include <iostream>
#include <mutex>

namespace rydchiral {

namespace {
std::mutex g_mutex;
WarningHandler g_handler;
}  // namespace

void warn(std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (g_handler) {
    g_handler(message);
    return;
  }
  std::cerr << "warning: " << message << '\n';
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_mutex);
  std::swap(g_handler, handler);
  return handler;
}

}  // namespace rydchiral
