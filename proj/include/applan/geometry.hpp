#pragma once

#include <vector>

#include "applan/scheme.hpp"

namespace applan {

// 8-connected Bresenham cells from a to b inclusive. The line is always drawn
// from the lexicographically smaller endpoint, so swapping the endpoints
// yields the same cells in reverse order.
std::vector<Cell> cells_of_line(Cell a, Cell b);

// Euclidean distance between cell centers, in meters.
double distance_m(Cell a, Cell b, double cell_size_m);

// Bearing from a to b in degrees, [0, 360). 0 = +col, counterclockwise positive.
double bearing_deg(Cell from, Cell to);

bool in_sector(Cell ap_cell, const AntennaPattern& pattern, Cell target);

}  // namespace applan
