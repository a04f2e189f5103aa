// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "snoopi/ad/array.hpp"

namespace snoopi::io {

/// `# seed=<n>` and `# config_hash=<hex>` lines that open every CSV.
std::string provenance(std::uint64_t seed, std::uint64_t config_hash);

/// Points table with columns x, y (x1..xD when D != 2), prompt, seed.
std::string points_csv(const ad::Array& points, const std::vector<std::string>& prompts, std::uint64_t seed);

struct PointsTable {
  ad::Array points;
  std::vector<std::string> prompts;
};

/// Reads a table written by `points_csv`; `#` lines are skipped.
PointsTable read_points_csv(const std::filesystem::path& path);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Scatter plot; `groups` (optional, one per row) selects the colour.
std::string scatter_svg(const ad::Array& points, const std::vector<int>& groups = {}, const std::string& title = "");
/// One polyline with markers per series.
std::string line_svg(const std::vector<SvgSeries>& series, const std::string& x_label, const std::string& y_label);

}  // namespace snoopi::io
