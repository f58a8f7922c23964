#include "cofiner/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace cofiner::log {
namespace {

std::atomic<Level> g_level{Level::kInfo};
std::atomic<unsigned long> g_warnings{0};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, std::string_view msg) {
  if (lvl < g_level.load()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[" << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level lvl) { g_level.store(lvl); }
Level level() { return g_level.load(); }

void debug(std::string_view msg) { emit(Level::kDebug, "debug", msg); }
void info(std::string_view msg) { emit(Level::kInfo, "info", msg); }
void warn(std::string_view msg) {
  ++g_warnings;
  emit(Level::kWarn, "warn", msg);
}
void error(std::string_view msg) { emit(Level::kError, "error", msg); }

unsigned long warning_count() { return g_warnings.load(); }

}  // namespace cofiner::log
