#pragma once

#include <map>
#include <string>
#include <vector>

#include "ppgroup/errors.hpp"

namespace ppgroup {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Rectangular half-court region, in feet. The hoop-side baseline sits at x = 0.
struct Domain {
    double x_min = 0.0;
    double x_max = 47.0;
    double y_min = 0.0;
    double y_max = 50.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }

    // Closed rectangle: boundary points are inside.
    bool contains(const Point& p) const
    {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }

    void validate() const;

    bool operator==(const Domain&) const = default;
};

/// Regular nx-by-ny discretization of a Domain. Cells are indexed row-major,
/// index = iy*nx + ix, so index 0 is the lower-left cell.
struct GridSpec {
    Domain domain{};
    int nx = 47;
    int ny = 50;

    int cells() const { return nx * ny; }
    double dx() const { return domain.width() / nx; }
    double dy() const { return domain.height() / ny; }
    double cell_area() const { return dx() * dy(); }

    void validate() const;

    /// Cell containing p. Points on a shared cell edge go to the right/upper
    /// cell; the domain's max edges belong to the last cell. Throws InputError
    /// if p is outside the domain.
    int cell_index(const Point& p) const;

    Point cell_center(int c) const;

    bool operator==(const GridSpec&) const = default;
};

struct PointPattern {
    std::string label;
    std::vector<Point> points;

    std::size_t size() const { return points.size(); }
};

struct CountGrid {
    GridSpec spec{};
    std::vector<long> counts; // one per cell, row-major

    long total() const;
};

struct ShotCsvResult {
    std::map<std::string, PointPattern> patterns; // keyed by label, sorted
    long rejected = 0;                            // out-of-domain rows
};

/// Parses a shot log: header line `label,x,y`, then one row per shot. Extra
/// columns are ignored. Rows whose coordinates fall outside the domain are
/// counted as rejected. Labels with fewer than min_attempts retained shots are
/// dropped. Malformed rows raise InputError naming the line number.
ShotCsvResult parse_shot_csv(const std::string& path, const Domain& domain,
                             long min_attempts = 0);

void write_shot_csv(const std::string& path,
                    const std::vector<PointPattern>& patterns);

/// Bins a pattern onto the grid; every point must lie inside the domain.
CountGrid bin_counts(const PointPattern& pattern, const GridSpec& spec);

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double v);

} // namespace ppgroup
