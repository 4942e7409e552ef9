#pragma once

#include <cstddef>
#include <string_view>

namespace vpme {

/// Writes a warning line to stderr unless warnings are silenced; always counted.
void warn(std::string_view message);
/// Counts every call but prints only the first message for each key.
void warn_once(std::string_view key, std::string_view message);
std::size_t warning_count();
void set_warnings_silenced(bool silenced);

}  // namespace vpme
