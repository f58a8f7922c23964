#pragma once

#include <string_view>

namespace cofiner::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

void set_level(Level level);
Level level();

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

// Number of warnings emitted since process start (counted even when silenced).
unsigned long warning_count();

}  // namespace cofiner::log
