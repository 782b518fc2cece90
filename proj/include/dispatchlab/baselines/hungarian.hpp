#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dispatchlab/common.hpp"
#include "dispatchlab/sim/world.hpp"

namespace dispatchlab {

/// Rectangular non-negative cost matrix, rows = drivers, cols = orders.
struct CostMatrix {
    std::vector<std::vector<double>> cost;

    std::size_t rows() const { return cost.size(); }
    std::size_t cols() const { return cost.empty() ? 0 : cost[0].size(); }

    double max_finite() const {
        double m = 0.0;
        for (const auto& row : cost)
            for (double c : row) m = std::max(m, c);
        return m;
    }
};

struct HungarianResult {
    std::vector<int> col_of_row;  // -1 for unmatched rows
    double total_cost = 0.0;
};

/// Minimum-total-cost injective row-to-column matching of size
/// min(rows, cols), exact (Kuhn-Munkres with potentials, O(n^3)).
/// Rectangular inputs are padded square with sentinel rows/columns whose
/// matches are dropped from the result.
inline HungarianResult hungarian(const CostMatrix& costs) {
    const std::size_t r = costs.rows(), c = costs.cols();
    HungarianResult result;
    result.col_of_row.assign(r, -1);
    if (r == 0 || c == 0) return result;
    for (const auto& row : costs.cost) {
        if (row.size() != c) throw DomainError("cost matrix is ragged");
        for (double x : row)
            if (!std::isfinite(x)) throw DomainError("cost matrix entries must be finite");
    }

    // Pad square; the floor keeps the sentinel meaningful for all-zero costs.
    const std::size_t n = std::max(r, c);
    const double sentinel = 1e6 * std::max(costs.max_finite(), 1.0);
    std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, sentinel));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) a[i + 1][j + 1] = costs.cost[i][j];

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = p[j];
        if (i >= 1 && i <= r && j <= c) {
            result.col_of_row[i - 1] = static_cast<int>(j - 1);
            result.total_cost += costs.cost[i - 1][j - 1];
        }
    }
    return result;
}

/// Centralized matching that minimizes total pick-up distance over idle
/// drivers and open orders within the receiving radius; out-of-radius pairs
/// carry a sentinel and are dropped from the final assignment.
inline Assignment hod_dispatch(const World& w) {
    if (w.geometry().mode != Mode::Coordinate)
        throw DomainError("hod_dispatch requires the coordinate-mode simulator");

    std::vector<DriverId> idle;
    for (const auto& d : w.drivers())
        if (d.status == DriverStatus::Idle) idle.push_back(d.id);
    const auto& open = w.open_orders();
    if (idle.empty() || open.empty()) return {};

    const double radius = w.config().order_radius;
    double max_real = 0.0;
    CostMatrix m;
    m.cost.assign(idle.size(), std::vector<double>(open.size(), 0.0));
    std::vector<std::vector<bool>> in_radius(idle.size(), std::vector<bool>(open.size(), false));
    for (std::size_t i = 0; i < idle.size(); ++i) {
        const Coord dloc = w.driver(idle[i]).location.coord();
        for (std::size_t j = 0; j < open.size(); ++j) {
            const double dist = World::unit_distance(dloc, w.order(open[j]).origin.coord());
            if (dist <= radius) {
                m.cost[i][j] = dist;
                in_radius[i][j] = true;
                max_real = std::max(max_real, dist);
            }
        }
    }
    const double sentinel = 1e6 * std::max(max_real, 1.0);
    for (std::size_t i = 0; i < idle.size(); ++i)
        for (std::size_t j = 0; j < open.size(); ++j)
            if (!in_radius[i][j]) m.cost[i][j] = sentinel;

    const auto solved = hungarian(m);
    Assignment out;
    for (std::size_t i = 0; i < idle.size(); ++i) {
        const int j = solved.col_of_row[i];
        if (j >= 0 && in_radius[i][j]) out[idle[i]] = open[j];
    }
    return out;
}

}  // namespace dispatchlab
