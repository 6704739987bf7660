#pragma once

#include <exception>
#include <string>

#include "ikf/common/error.hpp"

namespace ikf::app {

// Values double as process exit codes.
enum class Stage { config = 2, train = 3, extract = 4, assess = 5, fuse = 6, backconvert = 7, retrain = 8, evaluate = 9, render = 10, report = 11 };

std::string to_string(Stage s);

// Runs f, rethrowing any failure as a StageError tagged with s.
template <typename F>
auto run_stage(Stage s, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(to_string(s), static_cast<int>(s), e.what());
  }
}

}  // namespace ikf::app
