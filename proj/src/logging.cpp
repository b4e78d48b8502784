#include "ocean/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace ocean {

namespace {
LogLevel g_level = LogLevel::kError;
std::once_flag g_env_once;
std::mutex g_mutex;

void init_from_env() {
  const char* env = std::getenv("OCEAN_LOG");
  if (!env) return;
  if (std::strcmp(env, "debug") == 0)
    g_level = LogLevel::kDebug;
  else if (std::strcmp(env, "info") == 0)
    g_level = LogLevel::kInfo;
  else if (std::strcmp(env, "error") == 0)
    g_level = LogLevel::kError;
}

void emit(const char* tag, const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::fprintf(stderr, "[ocean %s] %s\n", tag, msg.c_str());
}
}  // namespace

LogLevel log_level() {
  std::call_once(g_env_once, init_from_env);
  return g_level;
}

void set_log_level(LogLevel lvl) {
  std::call_once(g_env_once, init_from_env);
  g_level = lvl;
}

void log_error(const std::string& msg) { emit("error", msg); }

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) emit("info", msg);
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) emit("debug", msg);
}

}  // namespace ocean
