// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snoopi/io/checkpoint.hpp"
#include "snoopi/error.hpp"
#include "snoopi/io/config.hpp"

namespace snoopi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitVerification = 4;

/// Raised by a command to end with a specific exit code after printing `what`.
class ExitRequest : public std::runtime_error {
 public:
  ExitRequest(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

/// Options every command accepts: --config, --set key=value, --seed.
struct ConfigOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;

  void attach(CLI::App& app);
  /// File, then --set entries in order, then command flags, then --seed.
  io::RunConfig build(const std::vector<std::pair<std::string, std::string>>& command_values = {}) const;
};

/// Loads a checkpoint. With `resume_cfg`, warns on stderr when the checkpoint
/// was produced under a different configuration hash.
io::Checkpoint load_model(const std::filesystem::path& path, const io::RunConfig* resume_cfg = nullptr);

void write_text(const std::filesystem::path& path, const std::string& text);
/// Makes the parent directory of `path` if needed.
void ensure_parent(const std::filesystem::path& path);

/// Provenance comment lines for outputs produced under `cfg`.
std::string provenance_of(const io::RunConfig& cfg);

// Command registration; each returns the subcommand it adds.
CLI::App* add_train_teacher(CLI::App& app, int& exit_code);
CLI::App* add_distill(CLI::App& app, int& exit_code);
CLI::App* add_ablate(CLI::App& app, int& exit_code);
CLI::App* add_sample(CLI::App& app, int& exit_code);
CLI::App* add_nasa_sweep(CLI::App& app, int& exit_code);
CLI::App* add_cfg_sweep(CLI::App& app, int& exit_code);
CLI::App* add_eval(CLI::App& app, int& exit_code);
CLI::App* add_gradcheck(CLI::App& app, int& exit_code);

}  // namespace snoopi::cli
