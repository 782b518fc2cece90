#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dispatchlab/mfq/game.hpp"

namespace dispatchlab::mfq {

/// Linear-span action-value function: Q(s,(ā,a)) = ω(s,(ā,a))ᵀ φ.
struct LinearQ {
    std::vector<double> phi;

    static LinearQ zeros(const FeatureBasis& basis) {
        return LinearQ{std::vector<double>(basis.dim, 0.0)};
    }
};

inline double evaluate(const LinearQ& q, const FeatureBasis& basis, int s, double abar, int a) {
    const auto w = basis.eval(s, abar, a);
    if (w.size() != q.phi.size()) throw DomainError("basis and parameter dimensions differ");
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * q.phi[i];
    return v;
}

/// Boltzmann action distribution induced by the current Q at (s, ā), with
/// inverse temperature 1/T.
inline std::vector<double> boltzmann_policy(const LinearQ& q, const FeatureBasis& basis, int s,
                                            double abar, int num_actions, double temperature) {
    if (temperature <= 0.0) throw DomainError("temperature must be positive");
    std::vector<double> vals(num_actions);
    for (int a = 0; a < num_actions; ++a) vals[a] = evaluate(q, basis, s, abar, a);
    const double vmax = *std::max_element(vals.begin(), vals.end());
    double total = 0.0;
    for (auto& v : vals) {
        v = std::exp((v - vmax) / temperature);
        total += v;
    }
    for (auto& v : vals) v /= total;
    return vals;
}

/// Temporal difference of one transition: the next-action expectation is
/// enumerated exactly under the Boltzmann policy, holding the transition's ā.
inline double td_delta(const LinearQ& q, const FeatureBasis& basis, const Transition& t,
                       int num_actions, double gamma, double temperature) {
    if (gamma < 0.0 || gamma >= 1.0) throw DomainError("gamma must lie in [0,1)");
    double next_value = 0.0;
    if (gamma != 0.0) {
        const auto pi = boltzmann_policy(q, basis, t.s_next, t.abar, num_actions, temperature);
        for (int a = 0; a < num_actions; ++a)
            next_value += pi[a] * evaluate(q, basis, t.s_next, t.abar, a);
    }
    return t.r + gamma * next_value - evaluate(q, basis, t.s, t.abar, t.a);
}

/// φ' = φ + α Δ ω(s,(ā,a)); a zero step size degenerates to the identity.
inline LinearQ update(const LinearQ& q, const FeatureBasis& basis, const Transition& t,
                      double alpha, int num_actions, double gamma, double temperature) {
    if (alpha < 0.0) throw DomainError("step size must be non-negative");
    const double delta = td_delta(q, basis, t, num_actions, gamma, temperature);
    const auto w = basis.eval(t.s, t.abar, t.a);
    LinearQ out = q;
    for (std::size_t i = 0; i < w.size(); ++i) out.phi[i] += alpha * delta * w[i];
    return out;
}

}  // namespace dispatchlab::mfq
