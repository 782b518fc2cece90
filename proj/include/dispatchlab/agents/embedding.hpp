#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "dispatchlab/sim/types.hpp"
#include "dispatchlab/sim/world.hpp"

namespace dispatchlab {

/// Order features fed to the networks. In grid mode the origin coincides
/// with the driver's location and is dropped; the destination is the
/// normalized 2-D cell center. The pick-up distance enters the critic only.
struct ActionEmbedding {
    std::vector<double> origin;       // empty in grid mode
    std::vector<double> destination;  // normalized 2-D position
    double pickup_distance = 0.0;     // km, normalized by callers
    OrderId order_id = -1;
};

/// Flat observation features: [x, y, sin(hour), cos(hour), on_trip].
using ObservationEmbedding = std::vector<double>;

/// Builds embeddings consistently for one simulation run.
class Featurizer {
public:
    explicit Featurizer(Geometry geo) : geo_(std::move(geo)) {}

    static constexpr int observation_dim() { return 5; }

    int action_dim() const { return geo_.mode == Mode::Grid ? 2 : 4; }

    int actor_input_dim() const { return observation_dim() + action_dim(); }

    /// Critic sees observation, destination and the normalized pick-up
    /// distance; the mean action adds one more slot when used.
    int critic_input_dim(bool with_mean_action) const {
        return observation_dim() + 2 + 1 + (with_mean_action ? 1 : 0);
    }

    ObservationEmbedding observe(const Observation& obs) const {
        const Coord c = geo_.feature(obs.location);
        const double hour_angle =
            2.0 * std::numbers::pi * static_cast<double>(obs.step % kStepsPerDay) / kStepsPerDay;
        return {c.x, c.y, std::sin(hour_angle), std::cos(hour_angle), obs.on_trip ? 1.0 : 0.0};
    }

    ActionEmbedding action(const Order& o, const Location& driver_location) const {
        ActionEmbedding a;
        const Coord dest = geo_.feature(o.destination);
        a.destination = {dest.x, dest.y};
        if (geo_.mode == Mode::Coordinate) {
            const Coord ori = geo_.feature(o.origin);
            a.origin = {ori.x, ori.y};
        }
        a.pickup_distance = geo_.mode == Mode::Grid ? 0.0 : geo_.distance(driver_location, o.origin);
        a.order_id = o.id;
        return a;
    }

    std::vector<double> actor_input(const ObservationEmbedding& obs,
                                    const ActionEmbedding& a) const {
        std::vector<double> x = obs;
        x.insert(x.end(), a.origin.begin(), a.origin.end());
        x.insert(x.end(), a.destination.begin(), a.destination.end());
        return x;
    }

    std::vector<double> critic_input(const ObservationEmbedding& obs, const ActionEmbedding& a,
                                     std::optional<double> mean_action) const {
        std::vector<double> x = obs;
        x.insert(x.end(), a.destination.begin(), a.destination.end());
        x.push_back(a.pickup_distance / geo_.map_width_km);
        if (mean_action) x.push_back(*mean_action);
        return x;
    }

    const Geometry& geometry() const { return geo_; }

private:
    Geometry geo_;
};

}  // namespace dispatchlab
