#pragma once

#include <functional>
#include <string_view>

namespace sparse_lpv {

using WarningHandler = std::function<void(std::string_view)>;

/// Installs the sink for non-fatal diagnostics; the default writes to stderr.
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace sparse_lpv
