#include "anwm/log.hpp"

#include <iostream>
#include <mutex>

namespace anwm::log {

namespace {

Level g_level = Level::Info;
std::function<void(Level, const std::string&)> g_sink;
std::mutex g_mutex;

const char* tag(Level l) {
  switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    case Level::Off: break;
  }
  return "";
}

}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void set_sink(std::function<void(Level, const std::string&)> sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void write(Level l, const std::string& msg) {
  if (l < g_level) return;
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(l, msg);
    return;
  }
  std::cerr << "[anwm " << tag(l) << "] " << msg << '\n';
}

}  // namespace anwm::log
