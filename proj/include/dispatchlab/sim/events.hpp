#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dispatchlab/sim/types.hpp"

namespace dispatchlab {

/// Append-only record stream of assignments, completions, cancellations and
/// expiries. Kept in memory and optionally mirrored to a JSONL file so runs
/// can be recounted independently of the metric accumulators.
struct SimEvent {
    enum class Kind { Assign, Complete, Cancel, Expire };
    Kind kind;
    Step step = 0;
    DriverId driver = -1;
    OrderId order = -1;
    double price = 0.0;
    double pickup_minutes = 0.0;
};

inline std::string to_string(SimEvent::Kind k) {
    switch (k) {
        case SimEvent::Kind::Assign: return "assign";
        case SimEvent::Kind::Complete: return "complete";
        case SimEvent::Kind::Cancel: return "cancel";
        case SimEvent::Kind::Expire: return "expire";
    }
    return "?";
}

class EventLog {
public:
    void append(const SimEvent& e) { events_.push_back(e); }

    const std::vector<SimEvent>& events() const { return events_; }

    void clear() { events_.clear(); }

    /// One JSON object per line, in event order.
    void write_jsonl(std::ostream& os) const {
        for (const auto& e : events_) {
            nlohmann::json j{{"kind", to_string(e.kind)}, {"step", e.step},
                             {"driver", e.driver},        {"order", e.order},
                             {"price", e.price},          {"pickup_minutes", e.pickup_minutes}};
            os << j.dump() << "\n";
        }
    }

    void write_jsonl(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw ConfigError("cannot open event log for writing: " + path);
        write_jsonl(os);
    }

    /// Sum of completed-order prices, grouped per step before totalling so
    /// the association order matches the per-step metric accumulators and the
    /// comparison can demand exact equality. This is the independent route to
    /// GMV used by the conservation checks.
    double recount_gmv() const {
        double total = 0.0, step_sum = 0.0;
        Step current = -1;
        for (const auto& e : events_) {
            if (e.kind != SimEvent::Kind::Complete) continue;
            if (e.step != current) {
                total += step_sum;
                step_sum = 0.0;
                current = e.step;
            }
            step_sum += e.price;
        }
        return total + step_sum;
    }

private:
    std::vector<SimEvent> events_;
};

}  // namespace dispatchlab
