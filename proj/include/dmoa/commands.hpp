// SPDX-License-Identifier: Apache-2.0
#pragma once

// Subcommands behind the dmoa executable. Each returns a process exit
// status and writes human-readable output to `out` and errors to `err`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dmoa {

struct CommandOptions {
  std::string config_path;
  std::string query;
  std::string queries_file;
  std::optional<std::size_t> t_dense;
  std::string topology;
  std::optional<std::uint64_t> seed;
  bool corrupt_gradient = false;  // gradcheck negative control
};

/// Non-empty lines of a text file, one query per line.
std::vector<std::string> read_queries(const std::string& path);

int cmd_train(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_infer(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_ttt(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_simulate(const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace dmoa
