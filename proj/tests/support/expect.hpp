#pragma once

#include "doctest.h"
#include "wmdlab/error.hpp"

namespace wmdlab::testing {

/// Runs `fn` and returns the code of the wmdlab::Error it throws.
template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace wmdlab::testing
