#pragma once

#include <functional>
#include <vector>

#include "dispatchlab/sim/world.hpp"

namespace dispatchlab {

/// Rule choosers pick one order id from a non-empty pool.
using RuleChooser = std::function<OrderId(DriverId, const std::vector<OrderId>&)>;

inline OrderId choose_random(const std::vector<OrderId>& pool, Rng& rng) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

/// Shortest estimated trip first, ties broken by higher price, then id.
inline OrderId choose_response(const World& w, const std::vector<OrderId>& pool) {
    return *std::min_element(pool.begin(), pool.end(), [&](OrderId x, OrderId y) {
        const Order &a = w.order(x), &b = w.order(y);
        if (a.duration_steps != b.duration_steps) return a.duration_steps < b.duration_steps;
        if (a.price != b.price) return a.price > b.price;
        return a.id < b.id;
    });
}

/// Highest price first, ties broken by shorter trip, then id.
inline OrderId choose_revenue(const World& w, const std::vector<OrderId>& pool) {
    return *std::min_element(pool.begin(), pool.end(), [&](OrderId x, OrderId y) {
        const Order &a = w.order(x), &b = w.order(y);
        if (a.price != b.price) return a.price > b.price;
        if (a.duration_steps != b.duration_steps) return a.duration_steps < b.duration_steps;
        return a.id < b.id;
    });
}

/// Gather each idle driver's candidates and proposal under a chooser.
struct ProposalRound {
    Assignment proposals;
    CandidateSets candidates;
};

inline ProposalRound propose(const World& w, const RuleChooser& chooser) {
    ProposalRound round;
    for (const auto& d : w.drivers()) {
        if (d.status != DriverStatus::Idle) continue;
        const auto orders = w.candidate_orders(d.id);
        if (orders.empty()) continue;
        std::vector<OrderId> ids;
        ids.reserve(orders.size());
        for (const auto& o : orders) ids.push_back(o.id);
        round.proposals[d.id] = chooser(d.id, ids);
        round.candidates[d.id] = std::move(ids);
    }
    return round;
}

/// Propose with a chooser, then settle collisions with the same rule over the
/// shrunken pools.
inline Assignment rule_dispatch(const World& w, const RuleChooser& chooser, Rng& rng) {
    const auto round = propose(w, chooser);
    return resolve_conflicts(
        round.proposals, round.candidates,
        [&](DriverId d, const std::vector<OrderId>& pool) -> std::optional<OrderId> {
            return chooser(d, pool);
        },
        rng);
}

inline Assignment ran_dispatch(const World& w, Rng& rng) {
    return rule_dispatch(
        w, [&](DriverId, const std::vector<OrderId>& pool) { return choose_random(pool, rng); },
        rng);
}

inline Assignment res_dispatch(const World& w, Rng& rng) {
    return rule_dispatch(
        w, [&](DriverId, const std::vector<OrderId>& pool) { return choose_response(w, pool); },
        rng);
}

inline Assignment rev_dispatch(const World& w, Rng& rng) {
    return rule_dispatch(
        w, [&](DriverId, const std::vector<OrderId>& pool) { return choose_revenue(w, pool); },
        rng);
}

}  // namespace dispatchlab
