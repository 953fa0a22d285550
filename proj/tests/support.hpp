#pragma once

#include <optional>

#include "jmlgm/errors.hpp"

namespace jmlgm::testing {

template <typename F>
std::optional<ErrorCode> error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace jmlgm::testing
