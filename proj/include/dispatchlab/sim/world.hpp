#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "dispatchlab/common.hpp"
#include "dispatchlab/sim/demand.hpp"
#include "dispatchlab/sim/events.hpp"
#include "dispatchlab/sim/types.hpp"

namespace dispatchlab {

struct SimConfig {
    Geometry geo;
    int fleet_size = 100;
    double order_radius = 0.1;   // coordinate mode: receiving radius, map units
    Step patience = 1;           // dispatch rounds an unserved order survives
    double cancel_slope = 0.0;   // cancellation probability per pickup minute
    double pickup_speed_km_per_step = 1.2;
    RewardWeights reward_weights;
};

/// True with probability min(1, slope * pickup_minutes).
inline bool maybe_cancel(double pickup_minutes, double slope, Rng& rng) {
    if (pickup_minutes < 0.0 || slope < 0.0)
        throw DomainError("maybe_cancel: negative pickup time or slope");
    const double p = std::min(1.0, slope * pickup_minutes);
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return std::bernoulli_distribution(p)(rng);
}

using Assignment = std::map<DriverId, OrderId>;
using CandidateSets = std::map<DriverId, std::vector<OrderId>>;
using ReselectFn =
    std::function<std::optional<OrderId>(DriverId, const std::vector<OrderId>&)>;

/// Turn raw per-driver proposals into a conflict-free assignment. When
/// several drivers propose the same order the winner is drawn uniformly and
/// the losers re-choose from their candidate pool minus everything taken so
/// far; the pool strictly shrinks, so the loop terminates. Drivers whose pool
/// empties (or whose callback declines) stay idle.
inline Assignment resolve_conflicts(const Assignment& proposals, const CandidateSets& candidates,
                                    const ReselectFn& reselect, Rng& rng) {
    for (const auto& [d, o] : proposals) {
        auto it = candidates.find(d);
        if (it == candidates.end() ||
            std::find(it->second.begin(), it->second.end(), o) == it->second.end())
            throw DomainError("proposal outside the driver's candidate set");
    }

    Assignment result;
    std::set<OrderId> taken;
    Assignment active = proposals;
    while (!active.empty()) {
        std::map<OrderId, std::vector<DriverId>> by_order;
        for (const auto& [d, o] : active) by_order[o].push_back(d);

        std::vector<DriverId> losers;
        for (auto& [order, drivers] : by_order) {
            std::size_t win = 0;
            if (drivers.size() > 1)
                win = std::uniform_int_distribution<std::size_t>(0, drivers.size() - 1)(rng);
            result[drivers[win]] = order;
            taken.insert(order);
            for (std::size_t i = 0; i < drivers.size(); ++i)
                if (i != win) losers.push_back(drivers[i]);
        }

        active.clear();
        std::sort(losers.begin(), losers.end());
        for (DriverId d : losers) {
            std::vector<OrderId> pool;
            for (OrderId o : candidates.at(d))
                if (!taken.count(o)) pool.push_back(o);
            if (pool.empty()) continue;
            const auto choice = reselect(d, pool);
            if (!choice) continue;
            if (std::find(pool.begin(), pool.end(), *choice) == pool.end())
                throw DomainError("reselect returned an order outside the updated pool");
            active[d] = *choice;
        }
    }
    return result;
}

/// The dispatch game state: entity tables, clock, demand/supply tallies and
/// metric accumulation. One World is owned by one simulation loop.
class World {
public:
    explicit World(SimConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.fleet_size < 0) throw ConfigError("fleet_size must be >= 0");
        drivers_.reserve(cfg_.fleet_size);
        const int cells = cfg_.geo.grid.num_cells();
        for (int i = 0; i < cfg_.fleet_size; ++i) {
            Driver d;
            d.id = static_cast<DriverId>(i);
            const GridId cell = static_cast<GridId>(i % cells);
            d.location = cfg_.geo.mode == Mode::Grid ? Location(cell)
                                                     : Location(cfg_.geo.grid.center(cell));
            drivers_.push_back(d);
        }
        demand_count_.assign(cells, 0);
        supply_count_.assign(cells, 0);
        open_by_cell_.assign(cells, {});
        refresh_tallies();
    }

    const SimConfig& config() const { return cfg_; }
    const Geometry& geometry() const { return cfg_.geo; }
    Step now() const { return step_; }

    const std::vector<Driver>& drivers() const { return drivers_; }

    const Driver& driver(DriverId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= drivers_.size())
            throw DomainError("unknown driver id " + std::to_string(id));
        return drivers_[id];
    }

    const Order& order(OrderId id) const {
        auto it = orders_.find(id);
        if (it == orders_.end()) throw DomainError("unknown order id " + std::to_string(id));
        return it->second;
    }

    /// Open orders in ascending id order (== creation order).
    const std::vector<OrderId>& open_orders() const { return open_ids_; }

    int demand_at(GridId cell) const { return demand_count_.at(cell); }
    int supply_at(GridId cell) const { return supply_count_.at(cell); }

    EventLog& event_log() { return log_; }
    const EventLog& event_log() const { return log_; }

    Observation observe(DriverId id) const {
        const Driver& d = driver(id);
        return Observation{d.location, step_, d.status == DriverStatus::OnTrip};
    }

    /// Scenario construction: admit one hand-made open order.
    OrderId spawn_order(const Location& origin, const Location& destination, double price,
                        Step duration_steps) {
        if (price <= 0.0) throw DomainError("order price must be > 0");
        if (duration_steps < 1) throw DomainError("order duration must be >= 1 step");
        Order o;
        o.id = next_order_id_++;
        o.origin = origin;
        o.destination = destination;
        o.price = price;
        o.duration_steps = duration_steps;
        o.created_step = step_;
        orders_.emplace(o.id, o);
        open_ids_.push_back(o.id);
        pending_.orders_generated++;
        refresh_tallies();
        return o.id;
    }

    /// Scenario construction: move an off-trip driver.
    void teleport_driver(DriverId id, const Location& loc) {
        Driver& d = drivers_[driver(id).id];
        if (d.status == DriverStatus::OnTrip)
            throw DomainError("cannot teleport a driver mid-trip");
        d.location = loc;
        refresh_tallies();
    }

    /// Scenario construction: toggle a driver between idle and offline.
    void set_driver_status(DriverId id, DriverStatus status) {
        Driver& d = drivers_[driver(id).id];
        if (d.status == DriverStatus::OnTrip || status == DriverStatus::OnTrip)
            throw DomainError("trip status is owned by step()");
        d.status = status;
        refresh_tallies();
    }

    /// Admit this step's new orders drawn from the demand model.
    std::vector<Order> generate_orders(const DemandModel& model, double p_sample, Rng& rng) {
        auto fresh = dispatchlab::generate_orders(cfg_.geo, step_, model, p_sample, rng,
                                                  next_order_id_);
        for (const auto& o : fresh) {
            orders_.emplace(o.id, o);
            open_ids_.push_back(o.id);
        }
        pending_.orders_generated += static_cast<std::int64_t>(fresh.size());
        refresh_tallies();
        return fresh;
    }

    /// Toggle drivers between online and offline; on-trip drivers are never
    /// touched, so the active population N varies over time.
    void update_presence(double on_rate, double off_rate, Rng& rng) {
        if (on_rate < 0 || on_rate > 1 || off_rate < 0 || off_rate > 1)
            throw DomainError("presence rates must lie in [0,1]");
        for (auto& d : drivers_) {
            if (d.status == DriverStatus::Offline) {
                if (on_rate > 0 && std::bernoulli_distribution(on_rate)(rng))
                    d.status = DriverStatus::Idle;
            } else if (d.status == DriverStatus::Idle) {
                if (off_rate > 0 && std::bernoulli_distribution(off_rate)(rng))
                    d.status = DriverStatus::Offline;
            }
        }
        refresh_tallies();
    }

    /// Open orders this driver may take: same cell in grid mode, inside the
    /// receiving radius in coordinate mode. Ascending order id.
    std::vector<Order> candidate_orders(DriverId id) const {
        const Driver& d = driver(id);
        if (d.status != DriverStatus::Idle)
            throw DomainError("candidates queried for a non-idle driver");
        std::vector<Order> out;
        if (cfg_.geo.mode == Mode::Grid) {
            for (OrderId oid : open_by_cell_[d.location.grid_id()])
                out.push_back(orders_.at(oid));
        } else {
            for (OrderId oid : open_ids_) {
                const Order& o = orders_.at(oid);
                if (unit_distance(d.location.coord(), o.origin.coord()) <= cfg_.order_radius)
                    out.push_back(o);
            }
        }
        return out;
    }

    /// Demand-supply gap of a cell: open orders originating there minus idle
    /// online drivers there.
    int gap(GridId cell) const { return demand_count_.at(cell) - supply_count_.at(cell); }

    /// Gap at the order's destination, gated: counted only when the origin
    /// itself has more orders than drivers, 0 otherwise. May be negative.
    int destination_potential(const Order& o) const {
        const GridId origin_cell = cfg_.geo.cell(o.origin);
        if (gap(origin_cell) <= 0) return 0;
        return gap(cfg_.geo.cell(o.destination));
    }

    /// Combined reward for taking an order: price plus the weighted
    /// destination potential and pick-up time terms.
    double reward(const Order& o, double pickup_steps) const {
        return o.price + cfg_.reward_weights.alpha_dp * destination_potential(o) +
               cfg_.reward_weights.alpha_pickup * pickup_steps;
    }

    /// Per-assignment outcome of one transition.
    struct AssignmentResult {
        double reward = 0.0;
        bool cancelled = false;
        double pickup_steps = 0.0;
    };

    /// Advance one time step under a conflict-free assignment: start trips
    /// (with cancellation in coordinate mode), expire stale orders, advance
    /// the clock, materialize finished trips at their destinations.
    std::pair<std::map<DriverId, AssignmentResult>, StepMetrics> step(const Assignment& assignment,
                                                                      Rng& rng) {
        std::set<OrderId> seen;
        for (const auto& [did, oid] : assignment) {
            const Driver& d = driver(did);
            if (d.status != DriverStatus::Idle)
                throw DomainError("assignment to a non-idle driver");
            const Order& o = order(oid);
            if (o.status != OrderStatus::Open) throw DomainError("assignment of a non-open order");
            if (!seen.insert(oid).second) throw DomainError("order assigned to two drivers");
        }

        std::map<DriverId, AssignmentResult> results;
        for (const auto& [did, oid] : assignment) {
            Driver& d = drivers_[did];
            Order& o = orders_.at(oid);
            o.status = OrderStatus::Assigned;
            const double pickup_km =
                cfg_.geo.mode == Mode::Grid ? 0.0 : cfg_.geo.distance(d.location, o.origin);
            const double pickup_steps = pickup_km / cfg_.pickup_speed_km_per_step;
            const double pickup_minutes = pickup_steps * kMinutesPerStep;

            AssignmentResult res;
            res.pickup_steps = pickup_steps;
            if (cfg_.geo.mode == Mode::Coordinate &&
                maybe_cancel(pickup_minutes, cfg_.cancel_slope, rng)) {
                o.status = OrderStatus::Cancelled;
                erase_open(oid);
                pending_.orders_cancelled++;
                res.cancelled = true;
                log_.append({SimEvent::Kind::Cancel, step_, did, oid, o.price, pickup_minutes});
            } else {
                res.reward = reward(o, pickup_steps);
                pending_.orders_served++;
                pending_.dp_sum += destination_potential(o);
                pending_.pickup_time_sum += pickup_minutes;
                o.status = OrderStatus::Serving;
                erase_open(oid);
                d.status = DriverStatus::OnTrip;
                d.current_order = oid;
                d.trip_end_step =
                    step_ + static_cast<Step>(std::ceil(pickup_steps)) + o.duration_steps;
                log_.append({SimEvent::Kind::Assign, step_, did, oid, o.price, pickup_minutes});
            }
            results[did] = res;
        }

        // Unserved open orders age out after `patience` dispatch rounds.
        for (std::size_t i = 0; i < open_ids_.size();) {
            Order& o = orders_.at(open_ids_[i]);
            if (step_ - o.created_step + 1 >= cfg_.patience) {
                o.status = OrderStatus::Expired;
                pending_.orders_expired++;
                log_.append({SimEvent::Kind::Expire, step_, -1, o.id, o.price, 0.0});
                open_ids_.erase(open_ids_.begin() + static_cast<std::ptrdiff_t>(i));
            } else {
                ++i;
            }
        }

        const Step decision_step = step_;
        ++step_;

        for (auto& d : drivers_) {
            if (d.status != DriverStatus::OnTrip || d.trip_end_step != step_) continue;
            Order& o = orders_.at(*d.current_order);
            o.status = OrderStatus::Completed;
            d.location = o.destination;
            d.status = DriverStatus::Idle;
            d.trip_end_step.reset();
            d.current_order.reset();
            d.income += o.price;
            pending_.gmv += o.price;
            pending_.hourly_income[(step_ / kStepsPerHour) % 24] += o.price;
            log_.append({SimEvent::Kind::Complete, step_, d.id, o.id, o.price, 0.0});
        }

        refresh_tallies();

        StepMetrics metrics = pending_;
        metrics.step = decision_step;
        pending_ = StepMetrics{};
        return {std::move(results), metrics};
    }

    /// Recompute #DD/#DS and the per-cell open-order index from the entity
    /// tables.
    void refresh_tallies() {
        std::fill(demand_count_.begin(), demand_count_.end(), 0);
        std::fill(supply_count_.begin(), supply_count_.end(), 0);
        for (auto& bucket : open_by_cell_) bucket.clear();
        for (OrderId oid : open_ids_) {
            const GridId c = cfg_.geo.cell(orders_.at(oid).origin);
            demand_count_[c]++;
            open_by_cell_[c].push_back(oid);
        }
        for (const auto& d : drivers_)
            if (d.status == DriverStatus::Idle) supply_count_[cfg_.geo.cell(d.location)]++;
    }

    static double unit_distance(const Coord& a, const Coord& b) {
        const double dx = a.x - b.x, dy = a.y - b.y;
        return std::sqrt(dx * dx + dy * dy);
    }

private:
    void erase_open(OrderId oid) {
        auto it = std::find(open_ids_.begin(), open_ids_.end(), oid);
        if (it != open_ids_.end()) open_ids_.erase(it);
    }

    SimConfig cfg_;
    Step step_ = 0;
    std::vector<Driver> drivers_;
    std::unordered_map<OrderId, Order> orders_;
    std::vector<OrderId> open_ids_;  // ascending ids
    std::vector<int> demand_count_;
    std::vector<int> supply_count_;
    std::vector<std::vector<OrderId>> open_by_cell_;
    OrderId next_order_id_ = 0;
    StepMetrics pending_;
    EventLog log_;
};

}  // namespace dispatchlab
