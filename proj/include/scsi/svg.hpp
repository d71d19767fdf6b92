#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace scsi::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool points = false;  // markers instead of a polyline
    bool dashed = false;
    std::string color;    // empty: palette color by index
    double radius = 1.5;
};

struct Plot {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool logx = false;
    bool logy = false;
    int width = 640;
    int height = 480;
    /// Draw y = x across the visible range.
    bool diagonal = false;
    /// Same data scale on both axes (linear axes only).
    bool equal_aspect = false;
};

/// Standalone SVG document. Non-finite points, and nonpositive ones on log axes, are skipped.
std::string render(const Plot& plot, const std::vector<Series>& series);
void write(const std::filesystem::path& path, const Plot& plot, const std::vector<Series>& series);

}  // namespace scsi::svg
