#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "dispatchlab/common.hpp"

namespace dispatchlab::mfq {

/// Fully observable Markov game small enough to enumerate: uniform per-agent
/// action count, dense transition and reward tables indexed by the joint
/// action (mixed-radix index, agent 0 fastest).
struct SmallGame {
    int num_states = 1;
    int num_actions = 1;
    int num_agents = 1;
    double gamma = 0.9;
    double reward_bound = 1.0;  // K: |reward| <= K
    // transition[s][joint] is a distribution over next states
    std::vector<std::vector<std::vector<double>>> transition;
    // reward[agent][s][joint]
    std::vector<std::vector<std::vector<double>>> reward;

    int joint_count() const {
        int n = 1;
        for (int i = 0; i < num_agents; ++i) n *= num_actions;
        return n;
    }

    int joint_index(const std::vector<int>& actions) const {
        int idx = 0, stride = 1;
        for (int i = 0; i < num_agents; ++i) {
            idx += actions[i] * stride;
            stride *= num_actions;
        }
        return idx;
    }

    std::vector<int> joint_actions(int idx) const {
        std::vector<int> a(num_agents);
        for (int i = 0; i < num_agents; ++i) {
            a[i] = idx % num_actions;
            idx /= num_actions;
        }
        return a;
    }

    /// Mean of the other agents' actions, each encoded as a rational in
    /// [0,1]; 0 when there are no peers (or a single action value).
    double mean_action_of(int agent, const std::vector<int>& actions) const {
        if (num_agents <= 1 || num_actions <= 1) return 0.0;
        double sum = 0.0;
        for (int j = 0; j < num_agents; ++j)
            if (j != agent) sum += static_cast<double>(actions[j]) / (num_actions - 1);
        return sum / (num_agents - 1);
    }

    /// Every ā value agent `agent` can observe, ascending.
    std::vector<double> mean_action_values(int agent) const {
        std::vector<double> vals;
        for (int j = 0; j < joint_count(); ++j) {
            const double v = mean_action_of(agent, joint_actions(j));
            bool found = false;
            for (double w : vals) found = found || std::abs(w - v) < 1e-12;
            if (!found) vals.push_back(v);
        }
        std::sort(vals.begin(), vals.end());
        return vals;
    }

    void validate() const {
        if (num_states < 1 || num_actions < 1 || num_agents < 1)
            throw ConfigError("game dimensions must be positive");
        if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must lie in [0,1)");
        if (transition.size() != static_cast<std::size_t>(num_states))
            throw ConfigError("transition table shape mismatch");
        for (const auto& row : transition) {
            if (row.size() != static_cast<std::size_t>(joint_count()))
                throw ConfigError("transition table shape mismatch");
            for (const auto& dist : row) {
                double sum = 0.0;
                for (double p : dist) sum += p;
                if (dist.size() != static_cast<std::size_t>(num_states) ||
                    std::abs(sum - 1.0) > 1e-9)
                    throw ConfigError("transition rows must be distributions");
            }
        }
        if (reward.size() != static_cast<std::size_t>(num_agents))
            throw ConfigError("reward table shape mismatch");
        for (const auto& per_agent : reward)
            for (const auto& row : per_agent)
                for (double r : row)
                    if (std::abs(r) > reward_bound + 1e-12)
                        throw ConfigError("reward exceeds the declared bound");
    }
};

/// One stored update tuple for the linear TD rule.
struct Transition {
    int s = 0;
    double abar = 0.0;
    int a = 0;
    double r = 0.0;
    int s_next = 0;
};

/// P fixed basis functions over (state, mean action, action).
struct FeatureBasis {
    int dim = 0;
    std::function<std::vector<double>(int s, double abar, int a)> eval;
};

/// Indicator basis over the enumerated (s, ā, a) domain; reduces the linear
/// rule to tabular Q-learning.
inline FeatureBasis one_hot_basis(const SmallGame& game, int agent) {
    const auto abar_values = game.mean_action_values(agent);
    const int n_abar = static_cast<int>(abar_values.size());
    const int dim = game.num_states * n_abar * game.num_actions;
    const int num_actions = game.num_actions;
    return FeatureBasis{
        dim, [abar_values, n_abar, num_actions, dim](int s, double abar, int a) {
            int ai = -1;
            for (int i = 0; i < n_abar; ++i)
                if (std::abs(abar_values[i] - abar) < 1e-9) ai = i;
            if (ai < 0) throw DomainError("mean action value outside the enumerated domain");
            std::vector<double> out(dim, 0.0);
            out[(s * n_abar + ai) * num_actions + a] = 1.0;
            return out;
        }};
}

/// Matrix rank check over every enumerable domain point: the declared basis
/// functions must be linearly independent there.
inline bool linearly_independent(const FeatureBasis& basis, const SmallGame& game, int agent) {
    std::vector<std::vector<double>> rows;
    for (int s = 0; s < game.num_states; ++s)
        for (double abar : game.mean_action_values(agent))
            for (int a = 0; a < game.num_actions; ++a) rows.push_back(basis.eval(s, abar, a));

    // Gaussian elimination, counting pivots.
    int rank = 0;
    const int cols = basis.dim;
    for (int col = 0; col < cols && rank < static_cast<int>(rows.size()); ++col) {
        int pivot = -1;
        double best = 1e-10;
        for (int r = rank; r < static_cast<int>(rows.size()); ++r)
            if (std::abs(rows[r][col]) > best) {
                best = std::abs(rows[r][col]);
                pivot = r;
            }
        if (pivot < 0) continue;
        std::swap(rows[rank], rows[pivot]);
        for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
            if (r == rank || rows[r][col] == 0.0) continue;
            const double f = rows[r][col] / rows[rank][col];
            for (int c = col; c < cols; ++c) rows[r][c] -= f * rows[rank][c];
        }
        ++rank;
    }
    return rank == basis.dim;
}

}  // namespace dispatchlab::mfq
