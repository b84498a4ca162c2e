#pragma once

#include <stdexcept>
#include <string>

#include "posehmm/posehmm.h"

namespace posehmm {

// Library error. `code` maps 1:1 onto the C API's ph_status values so the
// shared-library boundary can translate without a lookup table.
class Error : public std::runtime_error {
 public:
  Error(ph_status code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ph_status code() const noexcept { return code_; }

 private:
  ph_status code_;
};

[[noreturn]] inline void fail(ph_status code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ph_status code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace posehmm
