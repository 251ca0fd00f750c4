#include "applan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace applan {

std::vector<Cell> cells_of_line(Cell a, Cell b) {
    const bool reversed = b < a;
    Cell from = reversed ? b : a;
    const Cell to = reversed ? a : b;

    const int dx = std::abs(to.col - from.col);
    const int dy = -std::abs(to.row - from.row);
    const int sx = from.col < to.col ? 1 : -1;
    const int sy = from.row < to.row ? 1 : -1;
    int err = dx + dy;

    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(std::max(dx, -dy)) + 1);
    for (;;) {
        cells.push_back(from);
        if (from == to) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            from.col += sx;
        }
        if (e2 <= dx) {
            err += dx;
            from.row += sy;
        }
    }
    if (reversed) std::reverse(cells.begin(), cells.end());
    return cells;
}

double distance_m(Cell a, Cell b, double cell_size_m) {
    const double dc = static_cast<double>(b.col - a.col);
    const double dr = static_cast<double>(b.row - a.row);
    return cell_size_m * std::hypot(dc, dr);
}

double bearing_deg(Cell from, Cell to) {
    const double deg = std::atan2(static_cast<double>(to.row - from.row), static_cast<double>(to.col - from.col)) *
                       180.0 / std::numbers::pi;
    return deg < 0.0 ? deg + 360.0 : deg;
}

namespace {
// Slack for bearings that sit exactly on a sector edge.
constexpr double kEdgeEpsDeg = 1e-9;
}

bool in_sector(Cell ap_cell, const AntennaPattern& pattern, Cell target) {
    switch (pattern.kind) {
        case PatternKind::omni:
            return true;
        case PatternKind::beam:
            return target == ap_cell || target == pattern.partner;
        case PatternKind::sector: {
            if (target == ap_cell || pattern.width_deg >= 360.0) return true;
            double diff = std::fmod(bearing_deg(ap_cell, target) - pattern.azimuth_deg, 360.0);
            if (diff > 180.0) diff -= 360.0;
            if (diff < -180.0) diff += 360.0;
            return std::abs(diff) <= pattern.width_deg / 2.0 + kEdgeEpsDeg;
        }
    }
    return false;
}

}  // namespace applan
