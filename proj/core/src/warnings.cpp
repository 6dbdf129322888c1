#include "laecf/warnings.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace laecf {

namespace {

std::mutex handler_mutex;

WarningHandler& handler_slot() {
  static WarningHandler handler = [](const std::string& message) {
    std::cerr << "warning: " << message << "\n";
  };
  return handler;
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex);
  handler_slot() = std::move(handler);
}

void warn(const std::string& message) {
  WarningHandler copy;
  {
    std::lock_guard lock(handler_mutex);
    copy = handler_slot();
  }
  if (copy) copy(message);
}

}  // namespace laecf
