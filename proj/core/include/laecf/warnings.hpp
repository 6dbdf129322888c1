#pragma once

#include <functional>
#include <string>

namespace laecf {

using WarningHandler = std::function<void(const std::string&)>;

// Non-fatal data oddities (empty k-core result, ignored embeddings, ...)
// are routed through a process-wide handler. Default prints to stderr.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace laecf
