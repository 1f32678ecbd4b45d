#include "log.hpp"

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>

namespace bandtint {
namespace {

spdlog::level::level_enum level_from_env() {
  const char* raw = std::getenv("BANDTINT_LOG");
  const std::string v = raw ? raw : "";
  if (v == "debug") return spdlog::level::debug;
  if (v == "info") return spdlog::level::info;
  return spdlog::level::err;
}

}  // namespace

spdlog::logger& logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto l = std::make_shared<spdlog::logger>("bandtint", sink);
    l->set_pattern("[%H:%M:%S.%e] [%l] %v");
    l->set_level(level_from_env());
    return l;
  }();
  return *instance;
}

}  // namespace bandtint
