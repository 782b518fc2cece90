#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "dispatchlab/hex.hpp"

namespace dispatchlab {

using OrderId = std::int64_t;
using DriverId = std::int32_t;
using Step = std::int32_t;

constexpr Step kStepsPerDay = 144;  // 24 h at a 10-minute step interval
constexpr Step kStepsPerHour = 6;
constexpr double kMinutesPerStep = 10.0;

enum class OrderStatus { Open, Assigned, Serving, Completed, Cancelled, Expired };

enum class DriverStatus { Idle, OnTrip, Offline };

inline std::string to_string(OrderStatus s) {
    switch (s) {
        case OrderStatus::Open: return "open";
        case OrderStatus::Assigned: return "assigned";
        case OrderStatus::Serving: return "serving";
        case OrderStatus::Completed: return "completed";
        case OrderStatus::Cancelled: return "cancelled";
        case OrderStatus::Expired: return "expired";
    }
    return "?";
}

struct Order {
    OrderId id = 0;
    Location origin;
    Location destination;
    double price = 0.0;        // > 0
    Step duration_steps = 1;   // >= 1
    Step created_step = 0;
    OrderStatus status = OrderStatus::Open;
};

struct Driver {
    DriverId id = 0;
    Location location;
    DriverStatus status = DriverStatus::Idle;
    std::optional<Step> trip_end_step;
    std::optional<OrderId> current_order;
    double income = 0.0;

    bool idle_online() const { return status == DriverStatus::Idle; }
};

/// What one driver sees of the world when choosing an order.
struct Observation {
    Location location;
    Step step = 0;
    bool on_trip = false;
};

/// Mixing ratios of the reward terms relative to the order price.
struct RewardWeights {
    double alpha_dp = 0.01;
    double alpha_pickup = 0.0;  // -0.1 in coordinate mode
};

/// Per-step counters, summed into the run report.
struct StepMetrics {
    Step step = 0;
    double gmv = 0.0;  // prices of orders completed this step
    std::int64_t orders_generated = 0;
    std::int64_t orders_served = 0;     // assignments that survived cancellation
    std::int64_t orders_cancelled = 0;
    std::int64_t orders_expired = 0;
    double dp_sum = 0.0;           // destination potential of orders served this step
    double pickup_time_sum = 0.0;  // minutes, over orders served this step
    std::array<double, 24> hourly_income{};  // completion income bucketed by hour
};

}  // namespace dispatchlab
