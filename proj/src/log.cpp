#include "coopman/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace coopman::log {

namespace {

Level parse(const char* env) {
  if (env == nullptr) return Level::Warn;
  const std::string v(env);
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

std::string_view tag(Level l) {
  switch (l) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
  }
  return "?";
}

}  // namespace

Level threshold() {
  static const Level level = parse(std::getenv("COOPMAN_LOG"));
  return level;
}

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > static_cast<int>(threshold())) return;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::cerr << "[coopman " << tag(level) << "] " << message << '\n';
}

}  // namespace coopman::log
