// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snoopi/ad/array.hpp"
#include "snoopi/diffusion/schedule.hpp"
#include "snoopi/model/denoiser.hpp"

namespace snoopi::io {

/// One archive entry.
struct NamedArray {
  std::string name;
  ad::Shape shape;
  std::vector<double> values;
};

/// Thrown when bytes are not a well-formed SNPK archive.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// "SNPK", version byte 1, u32 entry count, then per entry: u32 name length,
/// name bytes, u32 rank, u32 extents, f64 values. All little-endian.
std::string encode_snpk(std::span<const NamedArray> entries);
std::vector<NamedArray> decode_snpk(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view bytes);

struct CheckpointMeta {
  model::Role role = model::Role::teacher;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  diffusion::ScheduleKind schedule = diffusion::ScheduleKind::cosine;
  int T = 1000;
};

struct Checkpoint {
  CheckpointMeta meta;
  model::DenoiserModel model;
};

/// Metadata travels as extra entries under "meta/"; the model's parameters
/// follow in declaration order.
std::string encode_checkpoint(const model::DenoiserModel& model, const CheckpointMeta& meta);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const model::DenoiserModel& model, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace snoopi::io
