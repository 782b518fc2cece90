#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dispatchlab/common.hpp"
#include "dispatchlab/sim/types.hpp"

namespace dispatchlab {

/// Historical order events; each simulation step bootstraps from the events
/// whose created_step falls in that step's window.
struct ReplayDemand {
    std::vector<Order> events;
};

/// Per-cell Poisson order rates with an hourly profile, a global destination
/// distribution over cells, and a duration-driven price curve. This is enough
/// to stage a hot-zone / cold-zone city without any real data.
struct SyntheticDemand {
    std::vector<double> origin_rates;        // orders per step per cell, profile 1.0
    std::array<double, 24> hourly_profile{}; // multiplies origin rates by hour of day
    std::vector<double> dest_weights;        // unnormalized destination distribution
    double price_per_step = 4.0;             // price = price_per_step * duration^price_exponent
    double price_exponent = 1.25;
    double price_jitter = 0.05;              // uniform +-5% around the curve
    double speed_km_per_step = 1.2;          // coordinate mode: km covered per step

    SyntheticDemand() { hourly_profile.fill(1.0); }
};

using DemandModel = std::variant<ReplayDemand, SyntheticDemand>;

/// Parse a replay file: one order event per line,
///   grid mode:        created_step,origin_cell,dest_cell,price,duration_steps
///   coordinate mode:  created_step,ox,oy,dx,dy,price,duration_steps
/// '#' lines and blank lines are skipped.
inline ReplayDemand load_replay(const std::string& path, Mode mode) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open replay file: " + path);
    ReplayDemand out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        Order o;
        bool ok = false;
        if (mode == Mode::Grid) {
            long long step, origin, dest;
            double price;
            long long dur;
            if (ss >> step >> origin >> dest >> price >> dur) {
                o.created_step = static_cast<Step>(step);
                o.origin = Location(static_cast<GridId>(origin));
                o.destination = Location(static_cast<GridId>(dest));
                o.price = price;
                o.duration_steps = static_cast<Step>(dur);
                ok = true;
            }
        } else {
            long long step;
            double ox, oy, dx, dy, price;
            long long dur;
            if (ss >> step >> ox >> oy >> dx >> dy >> price >> dur) {
                o.created_step = static_cast<Step>(step);
                o.origin = Location(Coord{ox, oy});
                o.destination = Location(Coord{dx, dy});
                o.price = price;
                o.duration_steps = static_cast<Step>(dur);
                ok = true;
            }
        }
        if (!ok)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed replay record");
        if (o.price <= 0.0 || o.duration_steps < 1)
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": price must be > 0 and duration >= 1");
        out.events.push_back(o);
    }
    if (out.events.empty()) throw ConfigError("replay file holds no events: " + path);
    return out;
}

namespace detail {

inline int sample_weighted(const std::vector<double>& weights, Rng& rng) {
    std::discrete_distribution<int> dist(weights.begin(), weights.end());
    return dist(rng);
}

/// Coordinate inside a cell: the cell center plus uniform jitter of up to
/// half the center spacing, clamped to the unit square.
inline Coord jittered_coord(const HexGrid& grid, GridId cell, Rng& rng) {
    const Coord c = grid.center(cell);
    std::uniform_real_distribution<double> ux(-0.5 / grid.cols, 0.5 / grid.cols);
    std::uniform_real_distribution<double> uy(-0.5 / grid.rows, 0.5 / grid.rows);
    return Coord{std::clamp(c.x + ux(rng), 0.0, 1.0), std::clamp(c.y + uy(rng), 0.0, 1.0)};
}

}  // namespace detail

/// Draw this step's new orders. Replay mode samples floor(p_sample * k)
/// events with replacement from the k historical events of the step's window;
/// synthetic mode draws Poisson counts per cell. New orders enter open.
inline std::vector<Order> generate_orders(const Geometry& geo, Step now, const DemandModel& model,
                                          double p_sample, Rng& rng, OrderId& next_id) {
    std::vector<Order> out;
    if (const auto* replay = std::get_if<ReplayDemand>(&model)) {
        if (p_sample < 0.0 || p_sample > 1.0)
            throw DomainError("p_sample must lie in [0,1]");
        const Step day_step = now % kStepsPerDay;
        std::vector<const Order*> window;
        for (const auto& e : replay->events)
            if (e.created_step == day_step) window.push_back(&e);
        const auto draws = static_cast<std::size_t>(p_sample * window.size());
        if (draws == 0 || window.empty()) return out;
        std::uniform_int_distribution<std::size_t> pick(0, window.size() - 1);
        for (std::size_t i = 0; i < draws; ++i) {
            Order o = *window[pick(rng)];
            o.id = next_id++;
            o.created_step = now;
            o.status = OrderStatus::Open;
            out.push_back(o);
        }
        return out;
    }

    const auto& synth = std::get<SyntheticDemand>(model);
    if (synth.origin_rates.size() != static_cast<std::size_t>(geo.grid.num_cells()))
        throw ConfigError("origin_rates size does not match the grid");
    if (synth.dest_weights.size() != static_cast<std::size_t>(geo.grid.num_cells()))
        throw ConfigError("dest_weights size does not match the grid");
    const int hour = (now / kStepsPerHour) % 24;
    const double profile = synth.hourly_profile[hour];
    std::uniform_real_distribution<double> jitter(1.0 - synth.price_jitter,
                                                  1.0 + synth.price_jitter);
    for (GridId cell = 0; cell < geo.grid.num_cells(); ++cell) {
        const double mean = synth.origin_rates[cell] * profile * p_sample;
        if (mean <= 0.0) continue;
        std::poisson_distribution<int> count(mean);
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            Order o;
            o.id = next_id++;
            o.created_step = now;
            const GridId dest = detail::sample_weighted(synth.dest_weights, rng);
            if (geo.mode == Mode::Grid) {
                o.origin = Location(cell);
                o.destination = Location(dest);
                o.duration_steps = std::max(1, hex_steps(geo.grid, cell, dest));
            } else {
                o.origin = Location(detail::jittered_coord(geo.grid, cell, rng));
                o.destination = Location(detail::jittered_coord(geo.grid, dest, rng));
                const double km = geo.distance(o.origin, o.destination);
                o.duration_steps = std::max(
                    1, static_cast<int>(std::lround(km / synth.speed_km_per_step)));
            }
            o.price = synth.price_per_step *
                      std::pow(static_cast<double>(o.duration_steps), synth.price_exponent) *
                      jitter(rng);
            out.push_back(o);
        }
    }
    return out;
}

}  // namespace dispatchlab
