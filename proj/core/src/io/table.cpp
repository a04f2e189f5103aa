// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "snoopi/io/table.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "snoopi/error.hpp"
#include "snoopi/io/checkpoint.hpp"
#include "snoopi/io/config.hpp"
#include "snoopi/io/format.hpp"

namespace snoopi::io {

std::string provenance(std::uint64_t seed, std::uint64_t config_hash) {
  return "# seed=" + std::to_string(seed) + "\n# config_hash=" + hex64(config_hash) + "\n";
}

std::string points_csv(const ad::Array& points, const std::vector<std::string>& prompts, std::uint64_t seed) {
  SNOOPI_REQUIRE(prompts.size() == points.rows(), "points_csv: one prompt per row required");
  const std::size_t dim = points.cols();
  std::string out;
  if (dim == 2) {
    out += "x,y";
  } else {
    for (std::size_t d = 0; d < dim; ++d) out += (d ? ",x" : "x") + std::to_string(d + 1);
  }
  out += ",prompt,seed\n";
  const std::string seed_text = std::to_string(seed);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    for (std::size_t d = 0; d < dim; ++d) out += format_double(points(i, d)) + ",";
    out += prompts[i] + "," + seed_text + "\n";
  }
  return out;
}

PointsTable read_points_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::string> lines;
  for (std::string& line : split_list(text, '\n'))
    if (line[0] != '#') lines.push_back(std::move(line));
  if (lines.empty()) throw ConfigError(path.string() + ": no header row");
  const std::vector<std::string> header = split_list(lines[0], ',');
  const auto prompt_col = std::find(header.begin(), header.end(), "prompt");
  const std::size_t dim = static_cast<std::size_t>(prompt_col - header.begin());
  if (dim == 0) throw ConfigError(path.string() + ": no coordinate columns");
  PointsTable table;
  table.points = ad::Array({lines.size() - 1, dim});
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split_list(lines[r], ',');
    if (cells.size() < dim) throw ConfigError(path.string() + ": short row " + std::to_string(r));
    for (std::size_t d = 0; d < dim; ++d) table.points(r - 1, d) = parse_double(cells[d]);
    table.prompts.push_back(cells.size() > dim ? cells[dim] : "");
  }
  return table;
}

namespace {

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr double kSize = 480.0;
constexpr double kMargin = 48.0;

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kSize - 2 * kMargin); }
  double py(double y) const { return kSize - kMargin - (y - y0) / (y1 - y0) * (kSize - 2 * kMargin); }
};

Frame fit(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double px = 0.05 * (x1 - x0), py = 0.05 * (y1 - y0);
  return {x0 - px, x1 + px, y0 - py, y1 + py};
}

std::string open_svg(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" viewBox=\"0 0 480 480\">\n";
  s += "<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
  s += "<rect x=\"48\" y=\"48\" width=\"384\" height=\"384\" fill=\"none\" stroke=\"#888\"/>\n";
  if (!title.empty()) s += "<text x=\"240\" y=\"30\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
  return s;
}

std::string range_labels(const Frame& f) {
  std::string s;
  s += "<text x=\"48\" y=\"448\" font-size=\"10\">" + format_double(std::round(f.x0 * 100) / 100) + "</text>\n";
  s += "<text x=\"432\" y=\"448\" font-size=\"10\" text-anchor=\"end\">" + format_double(std::round(f.x1 * 100) / 100) + "</text>\n";
  s += "<text x=\"44\" y=\"432\" font-size=\"10\" text-anchor=\"end\">" + format_double(std::round(f.y0 * 100) / 100) + "</text>\n";
  s += "<text x=\"44\" y=\"56\" font-size=\"10\" text-anchor=\"end\">" + format_double(std::round(f.y1 * 100) / 100) + "</text>\n";
  return s;
}

std::string coord(double v) { return format_double(std::round(v * 10.0) / 10.0); }

}  // namespace

std::string scatter_svg(const ad::Array& points, const std::vector<int>& groups, const std::string& title) {
  SNOOPI_REQUIRE(points.cols() >= 2, "scatter_svg: needs at least two columns");
  SNOOPI_REQUIRE(groups.empty() || groups.size() == points.rows(), "scatter_svg: one group per row");
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    x0 = std::min(x0, points(i, 0));
    x1 = std::max(x1, points(i, 0));
    y0 = std::min(y0, points(i, 1));
    y1 = std::max(y1, points(i, 1));
  }
  const Frame f = points.rows() ? fit(x0, x1, y0, y1) : fit(0, 1, 0, 1);
  std::string s = open_svg(title) + range_labels(f);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const int g = groups.empty() ? 0 : groups[i];
    const char* colour = kPalette[static_cast<std::size_t>(std::abs(g)) % kPalette.size()];
    s += "<circle cx=\"" + coord(f.px(points(i, 0))) + "\" cy=\"" + coord(f.py(points(i, 1))) + "\" r=\"1.5\" fill=\"" +
         colour + "\" fill-opacity=\"0.6\"/>\n";
  }
  return s + "</svg>\n";
}

std::string line_svg(const std::vector<SvgSeries>& series, const std::string& x_label, const std::string& y_label) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const SvgSeries& s : series) {
    SNOOPI_REQUIRE(s.x.size() == s.y.size(), "line_svg: x and y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  const Frame f = std::isfinite(x0) ? fit(x0, x1, y0, y1) : fit(0, 1, 0, 1);
  std::string out = open_svg("") + range_labels(f);
  out += "<text x=\"240\" y=\"470\" text-anchor=\"middle\" font-size=\"12\">" + x_label + "</text>\n";
  out += "<text x=\"14\" y=\"240\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 240)\">" + y_label +
         "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const SvgSeries& s = series[k];
    const char* colour = kPalette[k % kPalette.size()];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) pts += (i ? " " : "") + coord(f.px(s.x[i])) + "," + coord(f.py(s.y[i]));
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out += "<circle cx=\"" + coord(f.px(s.x[i])) + "\" cy=\"" + coord(f.py(s.y[i])) + "\" r=\"2.5\" fill=\"" + colour +
             "\"/>\n";
    out += "<text x=\"60\" y=\"" + std::to_string(66 + 14 * k) + "\" font-size=\"11\" fill=\"" + colour + "\">" +
           s.label + "</text>\n";
  }
  return out + "</svg>\n";
}

}  // namespace snoopi::io
