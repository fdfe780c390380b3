#pragma once

#include <string_view>

namespace qdistill {

/// Warnings go to stderr unless silenced (tests and sweeps silence them).
void log_warning(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace qdistill
