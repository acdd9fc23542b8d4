#pragma once

#include <functional>
#include <string_view>

namespace coriem {

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the process-wide warning handler. Passing an empty handler
/// restores the default, which writes to stderr.
void set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace coriem
