#pragma once

#include <spdlog/logger.h>

namespace bandtint {

/// Library logger writing to standard error. The level comes from
/// BANDTINT_LOG (error, info or debug; default error).
spdlog::logger& logger();

}  // namespace bandtint
