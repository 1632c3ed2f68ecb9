#pragma once

#include <string>
#include <string_view>

namespace tsicl::cli {

/// SVG line chart of a CSV whose first column is the step. A "loss" column,
/// if present, is the only curve drawn; otherwise every column after the
/// first gets one polyline. FormatError names the offending line.
std::string render_svg(std::string_view csv, std::string_view origin);

} // namespace tsicl::cli
