// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dmoa/router.hpp"
#include "oracle_values.inc"

namespace testing_helpers {

/// Router params filled with the closed form used by the oracle script.
inline dmoa::RouterParams formula_params(std::size_t d, std::size_t n) {
  auto p = dmoa::RouterParams::zeros(d, n);
  int k = 0;
  p.for_each_tensor([&](std::string_view, std::span<double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.6 * std::sin(0.37 * double(i + 1) + 1.3 * k);
    ++k;
  });
  return p;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dmoa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace testing_helpers
