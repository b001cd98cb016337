#pragma once

#include <functional>
#include <string>

namespace anwm::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level);
Level level();

/// Replaces the stderr sink; pass an empty function to restore it.
void set_sink(std::function<void(Level, const std::string&)> sink);

void write(Level level, const std::string& msg);
inline void debug(const std::string& m) { write(Level::Debug, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }
inline void error(const std::string& m) { write(Level::Error, m); }

}  // namespace anwm::log
