#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dispatchlab/common.hpp"
#include "dispatchlab/sim/types.hpp"

namespace dispatchlab {

/// Whole-run roll-up of the per-step counters.
struct Summary {
    double gmv = 0.0;
    double orr = 0.0;        // orders served / orders generated
    bool orr_defined = false;  // false when nothing was generated
    double adp = 0.0;        // mean destination potential over served orders
    double aat = 0.0;        // mean pick-up minutes over served orders
    std::int64_t orders_generated = 0;
    std::int64_t orders_served = 0;
    std::int64_t orders_cancelled = 0;
    std::int64_t orders_expired = 0;
    std::array<double, 24> hourly_income{};
};

inline Summary metrics_report(const std::vector<StepMetrics>& history) {
    if (history.empty()) throw DomainError("metrics_report on empty history");
    Summary s;
    double dp_sum = 0.0, pickup_sum = 0.0;
    for (const auto& m : history) {
        s.gmv += m.gmv;
        s.orders_generated += m.orders_generated;
        s.orders_served += m.orders_served;
        s.orders_cancelled += m.orders_cancelled;
        s.orders_expired += m.orders_expired;
        dp_sum += m.dp_sum;
        pickup_sum += m.pickup_time_sum;
        for (int h = 0; h < 24; ++h) s.hourly_income[h] += m.hourly_income[h];
    }
    s.orr_defined = s.orders_generated > 0;
    s.orr = s.orr_defined ? static_cast<double>(s.orders_served) / s.orders_generated : 0.0;
    if (s.orders_served > 0) {
        s.adp = dp_sum / s.orders_served;
        s.aat = pickup_sum / s.orders_served;
    }
    return s;
}

}  // namespace dispatchlab
