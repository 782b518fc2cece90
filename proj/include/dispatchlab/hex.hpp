#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "dispatchlab/common.hpp"

namespace dispatchlab {

using GridId = std::int32_t;

enum class Mode { Grid, Coordinate };

inline std::string to_string(Mode m) { return m == Mode::Grid ? "grid" : "coordinate"; }

/// Normalized planar position, both components in [0,1].
struct Coord {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Coord&) const = default;
};

/// Pointy-top hexagonal tiling with "odd-r" offset addressing: cells are
/// stored row-major, odd rows shifted half a cell to the right. Cell ids run
/// 0 .. rows*cols-1.
struct HexGrid {
    int rows = 1;
    int cols = 1;
    double cell_km = 1.2;  // inter-cell travel distance

    int num_cells() const { return rows * cols; }

    bool valid(GridId id) const { return id >= 0 && id < num_cells(); }

    int row_of(GridId id) const { return id / cols; }
    int col_of(GridId id) const { return id % cols; }
    GridId id_of(int row, int col) const { return static_cast<GridId>(row * cols + col); }

    void check(GridId id) const {
        if (!valid(id))
            throw DomainError("cell id " + std::to_string(id) + " out of range for " +
                              std::to_string(rows) + "x" + std::to_string(cols) + " grid");
    }

    /// Center of a cell in the unit square (odd rows offset right).
    Coord center(GridId id) const {
        check(id);
        const int r = row_of(id), c = col_of(id);
        return Coord{(c + 0.5 + 0.5 * (r & 1)) / cols, (r + 0.5) / rows};
    }
};

/// The 2-6 adjacent cells of an offset-coordinate hex tiling. No duplicates,
/// never contains the cell itself; adjacency is symmetric.
inline std::vector<GridId> neighbors(const HexGrid& grid, GridId cell) {
    grid.check(cell);
    static constexpr std::array<std::array<int, 2>, 6> even_row = {
        {{+1, 0}, {0, -1}, {-1, -1}, {-1, 0}, {-1, +1}, {0, +1}}};
    static constexpr std::array<std::array<int, 2>, 6> odd_row = {
        {{+1, 0}, {+1, -1}, {0, -1}, {-1, 0}, {0, +1}, {+1, +1}}};

    const int r = grid.row_of(cell), c = grid.col_of(cell);
    const auto& deltas = (r & 1) ? odd_row : even_row;
    std::vector<GridId> out;
    out.reserve(6);
    for (const auto& d : deltas) {
        const int nc = c + d[0], nr = r + d[1];
        if (nr >= 0 && nr < grid.rows && nc >= 0 && nc < grid.cols)
            out.push_back(grid.id_of(nr, nc));
    }
    return out;
}

/// Hex-step count between two cells (cube-coordinate metric).
inline int hex_steps(const HexGrid& grid, GridId a, GridId b) {
    grid.check(a);
    grid.check(b);
    auto cube = [&](GridId id, long long& x, long long& y, long long& z) {
        const int row = grid.row_of(id), col = grid.col_of(id);
        x = col - (row - (row & 1)) / 2;
        z = row;
        y = -x - z;
    };
    long long ax, ay, az, bx, by, bz;
    cube(a, ax, ay, az);
    cube(b, bx, by, bz);
    return static_cast<int>((std::llabs(ax - bx) + std::llabs(ay - by) + std::llabs(az - bz)) / 2);
}

/// Cell whose center is nearest to c; total over the unit square, ties broken
/// by the lower cell id.
inline GridId cell_of(const Coord& c, const HexGrid& grid) {
    GridId best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (GridId id = 0; id < grid.num_cells(); ++id) {
        const Coord ctr = grid.center(id);
        const double dx = ctr.x - c.x, dy = ctr.y - c.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = id;
        }
    }
    return best;
}

/// Exactly one of a grid cell (grid mode) or a planar coordinate (coordinate
/// mode); mode-consistent across one simulation run.
class Location {
public:
    Location() : value_(GridId{0}) {}
    explicit Location(GridId id) : value_(id) {}
    explicit Location(Coord c) : value_(c) {}

    bool is_grid() const { return std::holds_alternative<GridId>(value_); }

    GridId grid_id() const {
        if (!is_grid()) throw DomainError("location is coordinate-mode, not grid-mode");
        return std::get<GridId>(value_);
    }

    Coord coord() const {
        if (is_grid()) throw DomainError("location is grid-mode, not coordinate-mode");
        return std::get<Coord>(value_);
    }

    bool operator==(const Location&) const = default;

private:
    std::variant<GridId, Coord> value_;
};

/// Spatial substrate for one simulation run: the hex grid (used directly in
/// grid mode, and for demand/supply bucketing in coordinate mode) plus the
/// physical width the unit square maps to.
struct Geometry {
    Mode mode = Mode::Grid;
    HexGrid grid;
    double map_width_km = 10.0;

    /// Travel distance in kilometers. Grid mode: hex steps times cell_km
    /// (0 inside one cell). Coordinate mode: Euclidean distance scaled by
    /// the map width.
    double distance(const Location& a, const Location& b) const {
        if (a.is_grid() != b.is_grid())
            throw DomainError("distance between mixed-mode locations");
        if (a.is_grid()) return hex_steps(grid, a.grid_id(), b.grid_id()) * grid.cell_km;
        const double dx = a.coord().x - b.coord().x;
        const double dy = a.coord().y - b.coord().y;
        return std::sqrt(dx * dx + dy * dy) * map_width_km;
    }

    /// Bucketing cell of a location (identity in grid mode).
    GridId cell(const Location& loc) const {
        return loc.is_grid() ? loc.grid_id() : cell_of(loc.coord(), grid);
    }

    /// Normalized 2-D feature for a location: cell center in grid mode, the
    /// raw coordinate otherwise.
    Coord feature(const Location& loc) const {
        return loc.is_grid() ? grid.center(loc.grid_id()) : loc.coord();
    }
};

}  // namespace dispatchlab
