// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "common.hpp"

#include <cstdio>
#include <system_error>

#include "snoopi/error.hpp"
#include "snoopi/io/format.hpp"
#include "snoopi/io/table.hpp"

namespace snoopi::cli {

void ConfigOptions::attach(CLI::App& app) {
  app.add_option("--config", config_path, "run configuration file (key = value lines)");
  app.add_option("--set", overrides, "override one configuration key, as key=value (repeatable)");
  app.add_option("--seed", seed, "master seed (overrides the configuration's seed)");
}

io::RunConfig ConfigOptions::build(const std::vector<std::pair<std::string, std::string>>& command_values) const {
  io::RunConfig cfg = config_path.empty() ? io::RunConfig() : io::RunConfig::load(config_path);
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
    cfg.set(item.substr(0, eq), item.substr(eq + 1));
  }
  for (const auto& [key, value] : command_values) cfg.set(key, value);
  if (seed) cfg.set("seed", std::to_string(*seed));
  return cfg;
}

io::Checkpoint load_model(const std::filesystem::path& path, const io::RunConfig* resume_cfg) {
  io::Checkpoint ck = [&] {
    try {
      return io::load_checkpoint(path);
    } catch (const io::FormatError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }();
  if (resume_cfg && ck.meta.config_hash != resume_cfg->hash())
    std::fprintf(stderr, "warning: resuming %s, which was produced under config hash %s; current config hash is %s\n",
                 path.string().c_str(), io::hex64(ck.meta.config_hash).c_str(), io::hex64(resume_cfg->hash()).c_str());
  return ck;
}

void ensure_parent(const std::filesystem::path& path) {
  const std::filesystem::path parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw ConfigError("cannot create directory " + parent.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  ensure_parent(path);
  try {
    io::write_file(path, text);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

std::string provenance_of(const io::RunConfig& cfg) {
  return io::provenance(static_cast<std::uint64_t>(cfg.integer("seed")), cfg.hash());
}

}  // namespace snoopi::cli
