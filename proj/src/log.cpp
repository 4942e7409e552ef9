#include "vpme/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <set>
#include <string>

namespace vpme {
namespace {
std::atomic<std::size_t> g_warnings{0};
std::atomic<bool> g_silenced{false};
std::mutex g_stderr;
std::set<std::string> g_seen;
}  // namespace

void warn(std::string_view message) {
  ++g_warnings;
  if (g_silenced) return;
  std::lock_guard lock(g_stderr);
  std::cerr << "[vpme] warning: " << message << '\n';
}

void warn_once(std::string_view key, std::string_view message) {
  ++g_warnings;
  if (g_silenced) return;
  std::lock_guard lock(g_stderr);
  if (!g_seen.emplace(key).second) return;
  std::cerr << "[vpme] warning: " << message << " (further warnings of this kind suppressed)\n";
}

std::size_t warning_count() { return g_warnings; }

void set_warnings_silenced(bool silenced) { g_silenced = silenced; }

}  // namespace vpme
