#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "beltpick/error.hpp"
#include "beltpick/geometry.hpp"

namespace beltpick::test {

// Error code thrown by f, or nullopt when it returns normally.
template <class F>
std::optional<Errc> error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

template <class A, class B>
bool near(const A& a, const B& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("beltpick_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace beltpick::test
