#pragma once

#include <stdexcept>
#include <string>

namespace uavfl {

/// Thrown when a configuration is structurally inconsistent
/// (e.g. an emitter tuned outside the receiver's Nyquist band).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when an input value violates an operation precondition.
struct ValidationError : std::invalid_argument {
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

[[noreturn]] inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

inline void require_config(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace uavfl
