#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dispatchlab/agents/embedding.hpp"
#include "dispatchlab/common.hpp"
#include "dispatchlab/nn/mlp.hpp"

namespace dispatchlab {

/// One ranking value per candidate: one actor forward pass each.
inline std::vector<double> rank(const MlpParams& actor, const Featurizer& feat,
                                const ObservationEmbedding& obs,
                                const std::vector<ActionEmbedding>& candidates) {
    if (candidates.empty()) throw DomainError("rank over an empty candidate set");
    std::vector<double> values;
    values.reserve(candidates.size());
    for (const auto& a : candidates) {
        const auto y = forward(actor, feat.actor_input(obs, a));
        if (y.size() != 1) throw DomainError("actor must emit a single ranking value");
        values.push_back(y[0]);
    }
    return values;
}

/// Softmax of beta * values, numerically stabilized; probabilities are
/// invariant under shifting all values by a constant.
inline std::vector<double> boltzmann_probabilities(const std::vector<double>& values,
                                                   double beta) {
    if (values.empty()) throw DomainError("selector over an empty value list");
    if (beta < 0.0) throw DomainError("selector temperature scale must be >= 0");
    for (double v : values)
        if (!std::isfinite(v)) throw NumericError("selector fed non-finite ranking values");
    const double vmax = *std::max_element(values.begin(), values.end());
    std::vector<double> probs(values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        probs[i] = std::exp(beta * (values[i] - vmax));
        total += probs[i];
    }
    for (auto& p : probs) p /= total;
    return probs;
}

/// Sample an index from the Boltzmann distribution; returns the index and
/// the full probability vector.
inline std::pair<std::size_t, std::vector<double>> boltzmann_select(
    const std::vector<double>& values, double beta, Rng& rng) {
    auto probs = boltzmann_probabilities(values, beta);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    std::size_t index = probs.size() - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) {
            index = i;
            break;
        }
    }
    return {index, std::move(probs)};
}

/// Exploration temperature: exponential interpolation from 1.0 down to 0.01
/// across the training horizon, constant afterwards. The selector is driven
/// with beta = 1 / temperature, so exploration shrinks as training proceeds.
struct TemperatureSchedule {
    double initial = 1.0;
    double final_value = 0.01;
    int horizon_episodes = 20;

    double temperature(int episode) const {
        if (episode < 0) throw DomainError("episode must be >= 0");
        if (horizon_episodes <= 0 || episode >= horizon_episodes) return final_value;
        const double frac = static_cast<double>(episode) / horizon_episodes;
        return initial * std::pow(final_value / initial, frac);
    }

    double beta(int episode) const { return 1.0 / temperature(episode); }
};

}  // namespace dispatchlab
