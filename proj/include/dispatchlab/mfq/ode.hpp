#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "dispatchlab/mfq/learn.hpp"

namespace dispatchlab::mfq {

struct OdePair {
    std::vector<std::vector<double>> A;  // P x P
    std::vector<double> b;               // P
};

namespace detail {

/// Self-play chain state: game state plus the last joint action (which
/// defines every agent's observed ā).
struct ChainNode {
    int s;
    int last_joint;
};

/// Joint-action distribution at a chain node: the product of each agent's
/// Boltzmann policy given its own ā from the last joint action.
inline std::vector<double> joint_policy(const SmallGame& g, const std::vector<LinearQ>& qs,
                                        const std::vector<FeatureBasis>& bases, int s,
                                        int last_joint, double temperature) {
    const auto last = g.joint_actions(last_joint);
    std::vector<std::vector<double>> per_agent(g.num_agents);
    for (int i = 0; i < g.num_agents; ++i)
        per_agent[i] = boltzmann_policy(qs[i], bases[i], s, g.mean_action_of(i, last),
                                        g.num_actions, temperature);
    std::vector<double> joint(g.joint_count(), 1.0);
    for (int j = 0; j < g.joint_count(); ++j) {
        const auto acts = g.joint_actions(j);
        for (int i = 0; i < g.num_agents; ++i) joint[j] *= per_agent[i][acts[i]];
    }
    return joint;
}

/// Stationary distribution of the (state, last joint action) chain by power
/// iteration.
inline std::vector<double> stationary_distribution(const SmallGame& g,
                                                   const std::vector<LinearQ>& qs,
                                                   const std::vector<FeatureBasis>& bases,
                                                   double temperature) {
    const int nodes = g.num_states * g.joint_count();
    std::vector<double> d(nodes, 1.0 / nodes), next(nodes);
    for (int iter = 0; iter < 2000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int node = 0; node < nodes; ++node) {
            if (d[node] == 0.0) continue;
            const int s = node / g.joint_count(), last = node % g.joint_count();
            const auto joint = joint_policy(g, qs, bases, s, last, temperature);
            for (int j = 0; j < g.joint_count(); ++j) {
                if (joint[j] == 0.0) continue;
                for (int s2 = 0; s2 < g.num_states; ++s2) {
                    const double p = g.transition[s][j][s2];
                    if (p > 0.0) next[s2 * g.joint_count() + j] += d[node] * joint[j] * p;
                }
            }
        }
        double drift = 0.0;
        for (int i = 0; i < nodes; ++i) drift += std::abs(next[i] - d[i]);
        d.swap(next);
        if (drift < 1e-13) break;
    }
    return d;
}

/// Expected next-step feature vector under agent i's own Boltzmann policy,
/// holding the transition's ā (the same convention td_delta uses).
inline std::vector<double> expected_next_features(const SmallGame& g, const LinearQ& q,
                                                  const FeatureBasis& basis, int s_next,
                                                  double abar, double temperature) {
    const auto pi = boltzmann_policy(q, basis, s_next, abar, g.num_actions, temperature);
    std::vector<double> w(basis.dim, 0.0);
    for (int a = 0; a < g.num_actions; ++a) {
        const auto wa = basis.eval(s_next, abar, a);
        for (int p = 0; p < basis.dim; ++p) w[p] += pi[a] * wa[p];
    }
    return w;
}

inline void accumulate_ode_sample(OdePair& acc, const std::vector<double>& w_now,
                                  const std::vector<double>& w_next, double r, double gamma,
                                  double weight) {
    const int P = static_cast<int>(w_now.size());
    for (int p = 0; p < P; ++p) {
        if (w_now[p] == 0.0) continue;
        acc.b[p] += weight * w_now[p] * r;
        for (int q = 0; q < P; ++q)
            acc.A[p][q] += weight * w_now[p] * (gamma * w_next[q] - w_now[q]);
    }
}

}  // namespace detail

/// Exact enumeration of A_φ = E[ω_s (γ ω_{s'} − ω_s)ᵀ] and b_φ = E[ω_s r]
/// for one agent, expectations under the self-play stationary distribution.
inline OdePair estimate_ode_exact(const SmallGame& g, int agent, const std::vector<LinearQ>& qs,
                                  const std::vector<FeatureBasis>& bases, double temperature) {
    g.validate();
    const FeatureBasis& basis = bases[agent];
    OdePair acc{std::vector<std::vector<double>>(basis.dim, std::vector<double>(basis.dim, 0.0)),
                std::vector<double>(basis.dim, 0.0)};
    const auto d = detail::stationary_distribution(g, qs, bases, temperature);
    for (int node = 0; node < static_cast<int>(d.size()); ++node) {
        if (d[node] == 0.0) continue;
        const int s = node / g.joint_count(), last = node % g.joint_count();
        const auto joint = detail::joint_policy(g, qs, bases, s, last, temperature);
        const double abar = g.mean_action_of(agent, g.joint_actions(last));
        for (int j = 0; j < g.joint_count(); ++j) {
            if (joint[j] == 0.0) continue;
            const auto acts = g.joint_actions(j);
            const auto w_now = basis.eval(s, abar, acts[agent]);
            const double r = g.reward[agent][s][j];
            for (int s2 = 0; s2 < g.num_states; ++s2) {
                const double p = g.transition[s][j][s2];
                if (p == 0.0) continue;
                const auto w_next =
                    detail::expected_next_features(g, qs[agent], basis, s2, abar, temperature);
                detail::accumulate_ode_sample(acc, w_now, w_next, r, g.gamma,
                                              d[node] * joint[j] * p);
            }
        }
    }
    return acc;
}

/// Monte-Carlo estimate of the same pair from a simulated self-play chain.
inline OdePair estimate_ode_mc(const SmallGame& g, int agent, const std::vector<LinearQ>& qs,
                               const std::vector<FeatureBasis>& bases, double temperature,
                               long budget, Rng& rng) {
    g.validate();
    if (budget <= 0) throw DomainError("sample budget must be positive");
    const FeatureBasis& basis = bases[agent];
    OdePair acc{std::vector<std::vector<double>>(basis.dim, std::vector<double>(basis.dim, 0.0)),
                std::vector<double>(basis.dim, 0.0)};

    auto draw = [&rng](const std::vector<double>& probs) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double c = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            c += probs[i];
            if (u < c) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size() - 1);
    };

    int s = 0, last = 0;
    const long burn_in = std::min<long>(budget / 10, 1000);
    const double weight = 1.0 / static_cast<double>(budget);
    for (long t = 0; t < budget + burn_in; ++t) {
        const auto joint = detail::joint_policy(g, qs, bases, s, last, temperature);
        const int j = draw(joint);
        const int s2 = draw(g.transition[s][j]);
        if (t >= burn_in) {
            const double abar = g.mean_action_of(agent, g.joint_actions(last));
            const auto acts = g.joint_actions(j);
            const auto w_now = basis.eval(s, abar, acts[agent]);
            const auto w_next =
                detail::expected_next_features(g, qs[agent], basis, s2, abar, temperature);
            detail::accumulate_ode_sample(acc, w_now, w_next, g.reward[agent][s][j], g.gamma,
                                          weight);
        }
        last = j;
        s = s2;
    }
    return acc;
}

struct EquilibriumResult {
    std::vector<double> phi_star;
    bool stable = false;
    double residual = 0.0;  // ||A phi* + b||
};

namespace detail {

/// Largest eigenvalue of a symmetric matrix by Jacobi rotations.
inline double max_symmetric_eigenvalue(std::vector<std::vector<double>> m) {
    const int n = static_cast<int>(m.size());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(m[p][q]) < 1e-300) continue;
                const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
    }
    double lam = m[0][0];
    for (int i = 1; i < n; ++i) lam = std::max(lam, m[i][i]);
    return lam;
}

}  // namespace detail

/// Solve A φ* + b = 0 and test stability via the symmetric part of A (all
/// eigenvalues strictly negative — sufficient for asymptotic stability of
/// dφ/dt = Aφ + b).
inline EquilibriumResult equilibrium_and_stability(const OdePair& ode) {
    const int n = static_cast<int>(ode.b.size());
    auto a = ode.A;
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = -ode.b[i];

    // Gaussian elimination with partial pivoting; track the pivot spread as a
    // cheap conditioning report.
    double max_pivot = 0.0, min_pivot = std::numeric_limits<double>::infinity();
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        const double p = std::abs(a[col][col]);
        max_pivot = std::max(max_pivot, p);
        min_pivot = std::min(min_pivot, p);
        if (p < 1e-12 * std::max(max_pivot, 1.0)) {
            std::ostringstream msg;
            msg << "singular ODE matrix: pivot spread " << max_pivot << " / " << min_pivot;
            throw NumericError(msg.str());
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    EquilibriumResult res;
    res.phi_star.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double v = rhs[r];
        for (int c = r + 1; c < n; ++c) v -= a[r][c] * res.phi_star[c];
        res.phi_star[r] = v / a[r][r];
    }

    for (int i = 0; i < n; ++i) {
        double row = ode.b[i];
        for (int j = 0; j < n; ++j) row += ode.A[i][j] * res.phi_star[j];
        res.residual += row * row;
    }
    res.residual = std::sqrt(res.residual);

    std::vector<std::vector<double>> sym(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) sym[i][j] = 0.5 * (ode.A[i][j] + ode.A[j][i]);
    res.stable = detail::max_symmetric_eigenvalue(std::move(sym)) < 0.0;
    return res;
}

}  // namespace dispatchlab::mfq
