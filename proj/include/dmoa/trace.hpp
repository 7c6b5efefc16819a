// SPDX-License-Identifier: Apache-2.0
#pragma once

// Trajectory trace files: one JSON object per line, field names as in
// core.hpp, doubles printed with 17 significant digits.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dmoa/core.hpp"

namespace dmoa {

/// Formats a double with "%.17g".
std::string format_double(double value);

/// Single-line JSON encoding (no trailing newline).
std::string to_json_line(const Trajectory& trajectory);

Trajectory trajectory_from_json(std::string_view line);

void write_trace(const std::filesystem::path& path, const std::vector<Trajectory>& trajectories);

std::vector<Trajectory> read_trace(const std::filesystem::path& path);

}  // namespace dmoa
