#include "tsicl/cli/plot.hpp"

#include "tsicl/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <vector>

namespace tsicl::cli {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 60.0, kRight = 150.0, kTop = 20.0, kBottom = 40.0;
constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        const auto p = line.find(sep);
        out.push_back(line.substr(0, p));
        if (p == std::string_view::npos) break;
        line.remove_prefix(p + 1);
    }
    return out;
}

std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

} // namespace

std::string render_svg(std::string_view csv, std::string_view origin) {
    std::vector<std::string_view> header;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 0;
    while (!csv.empty()) {
        const auto nl = csv.find('\n');
        const std::string_view line = strip(csv.substr(0, nl));
        csv = nl == std::string_view::npos ? std::string_view{} : csv.substr(nl + 1);
        ++lineno;
        if (line.empty()) continue;
        const std::string where = std::string(origin) + ":" + std::to_string(lineno);
        auto cells = split(line, ',');
        if (header.empty()) {
            if (cells.size() < 2) throw FormatError(where + ": header needs a step column and at least one series");
            for (auto& c : cells) header.push_back(strip(c));
            continue;
        }
        if (cells.size() != header.size()) {
            throw FormatError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(cells.size()));
        }
        std::vector<double> row;
        for (auto c : cells) {
            c = strip(c);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (c.empty() || ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v)) {
                throw FormatError(where + ": not a number: '" + std::string(c) + "'");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (header.empty()) throw FormatError(std::string(origin) + ": no header");
    if (rows.empty()) throw FormatError(std::string(origin) + ": no data rows");

    std::vector<std::size_t> series;
    if (const auto it = std::find(header.begin(), header.end(), "loss"); it != header.end()) {
        series.push_back(static_cast<std::size_t>(it - header.begin()));
    } else {
        for (std::size_t c = 1; c < header.size(); ++c) series.push_back(c);
    }

    double x0 = rows.front()[0], x1 = x0, y0 = rows.front()[series[0]], y1 = y0;
    for (const auto& r : rows) {
        x0 = std::min(x0, r[0]);
        x1 = std::max(x1, r[0]);
        for (auto c : series) {
            y0 = std::min(y0, r[c]);
            y1 = std::max(y1, r[c]);
        }
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
                      fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
           "\" fill=\"none\" stroke=\"#444\"/>\n";
    svg += "<text x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kHeight - 12) + "\">" + fmt(x0) + "</text>\n";
    svg += "<text x=\"" + fmt(kLeft + pw) + "\" y=\"" + fmt(kHeight - 12) + "\" text-anchor=\"end\">" + fmt(x1) +
           "</text>\n";
    svg += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 12) + "\" text-anchor=\"middle\">" +
           escape(header[0]) + "</text>\n";
    svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(kTop + 4) + "\" text-anchor=\"end\">" + fmt(y1) + "</text>\n";
    svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(kTop + ph) + "\" text-anchor=\"end\">" + fmt(y0) +
           "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % std::size(kColors)];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i) svg += ' ';
            svg += fmt(px(rows[i][0])) + "," + fmt(py(rows[i][series[s]]));
        }
        svg += "\"/>\n";
        const double ly = kTop + 14.0 + 16.0 * static_cast<double>(s);
        svg += "<rect x=\"" + fmt(kWidth - kRight + 12) + "\" y=\"" + fmt(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
               color + "\"/>\n";
        svg += "<text x=\"" + fmt(kWidth - kRight + 28) + "\" y=\"" + fmt(ly + 1) + "\">" + escape(header[series[s]]) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace tsicl::cli
