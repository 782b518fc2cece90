#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dispatchlab/mfq/ode.hpp"

namespace dispatchlab::mfq {

/// Robbins-Monro-style step sizes: harmonic scale/(1 + t/offset) satisfies
/// the divergent-sum / convergent-square-sum pair; a constant does not.
struct StepSizeSchedule {
    enum class Kind { Harmonic, Constant };
    Kind kind = Kind::Harmonic;
    double scale = 1.0;
    double offset = 100.0;

    double value(long t) const {
        return kind == Kind::Harmonic ? scale / (1.0 + static_cast<double>(t) / offset) : scale;
    }
    bool robbins_monro() const { return kind == Kind::Harmonic; }
};

/// Exploration temperature decaying exponentially to a positive floor
/// (greedy in the limit for practical purposes; an exact zero would blow up
/// the inverse temperature).
struct TemperatureDecay {
    enum class Kind { Exponential, Constant };
    Kind kind = Kind::Exponential;
    double initial = 1.0;
    double floor = 0.05;
    long decay_updates = 20000;

    double value(long t) const {
        if (kind == Kind::Constant) return initial;
        if (t >= decay_updates) return floor;
        const double frac = static_cast<double>(t) / decay_updates;
        return initial * std::pow(floor / initial, frac);
    }
    bool glie() const { return kind == Kind::Exponential && floor < initial; }
};

struct AgentEquilibrium {
    std::vector<double> phi_star;
    bool stable = false;
    double residual = 0.0;
};

struct ConvergenceReport {
    std::vector<LinearQ> final_q;
    std::vector<double> td_error_curve;  // windowed mean |Δ| per window
    double final_td_error = 0.0;
    bool diverged = false;
    std::vector<std::string> violated_preconditions;
    std::optional<double> oracle_distance;  // single-agent one-hot runs only
    std::vector<AgentEquilibrium> equilibria;
    std::vector<int> final_joint_action;
};

/// Tabular optimal Q for a single-agent game by value iteration (the
/// reference the one-hot report distance is measured against).
inline std::vector<std::vector<double>> value_iteration(const SmallGame& g, double tol = 1e-12) {
    if (g.num_agents != 1) throw DomainError("value iteration oracle is single-agent");
    std::vector<std::vector<double>> q(g.num_states, std::vector<double>(g.num_actions, 0.0));
    for (int iter = 0; iter < 1000000; ++iter) {
        double drift = 0.0;
        auto next = q;
        for (int s = 0; s < g.num_states; ++s)
            for (int a = 0; a < g.num_actions; ++a) {
                double v = g.reward[0][s][a];
                for (int s2 = 0; s2 < g.num_states; ++s2) {
                    if (g.transition[s][a][s2] == 0.0) continue;
                    double best = q[s2][0];
                    for (int a2 = 1; a2 < g.num_actions; ++a2) best = std::max(best, q[s2][a2]);
                    v += g.gamma * g.transition[s][a][s2] * best;
                }
                drift = std::max(drift, std::abs(v - q[s][a]));
                next[s][a] = v;
            }
        q = std::move(next);
        if (drift < tol) break;
    }
    return q;
}

struct ConvergenceOptions {
    long updates = 50000;
    StepSizeSchedule alpha;
    TemperatureDecay temperature;
    double divergence_guard = 1e6;  // on ||φ||_inf
    long window = 500;              // TD-error averaging window
    bool compute_equilibria = true;
    // Behavior-side uniform action mixing. The learning policy stays the
    // annealed Boltzmann one (the TD expectation uses it); a nonzero mix
    // keeps every pair visited within a finite budget, which the
    // infinite-visits assumption grants for free only in the limit.
    double behavior_uniform_mix = 0.0;
};

/// Run the linear TD rule in self-play on a small game and report what
/// happened: per-window TD error, divergence, schedule bookkeeping, the
/// empirical equilibrium and its stability flag, and (for one-hot
/// single-agent runs) the distance to the value-iteration oracle.
inline ConvergenceReport run_convergence_experiment(const SmallGame& game,
                                                    const std::vector<FeatureBasis>& bases,
                                                    const ConvergenceOptions& opt, Rng& rng) {
    game.validate();
    if (bases.size() != static_cast<std::size_t>(game.num_agents))
        throw DomainError("one basis per agent required");

    ConvergenceReport report;
    if (!opt.alpha.robbins_monro())
        report.violated_preconditions.push_back("step_size_not_robbins_monro");
    if (!opt.temperature.glie())
        report.violated_preconditions.push_back("temperature_not_glie");

    std::vector<LinearQ> qs;
    for (const auto& b : bases) qs.push_back(LinearQ::zeros(b));

    auto draw = [&rng](const std::vector<double>& probs) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double c = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            c += probs[i];
            if (u < c) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size() - 1);
    };

    int s = 0;
    std::vector<int> last(game.num_agents, 0);
    double window_abs_delta = 0.0;
    long window_count = 0;

    for (long t = 0; t < opt.updates; ++t) {
        const double temperature = opt.temperature.value(t);
        const double alpha = opt.alpha.value(t);

        std::vector<int> actions(game.num_agents);
        std::vector<double> abars(game.num_agents);
        for (int i = 0; i < game.num_agents; ++i) {
            abars[i] = game.mean_action_of(i, last);
            auto pi = boltzmann_policy(qs[i], bases[i], s, abars[i], game.num_actions,
                                       temperature);
            if (opt.behavior_uniform_mix > 0.0)
                for (auto& p : pi)
                    p = (1.0 - opt.behavior_uniform_mix) * p +
                        opt.behavior_uniform_mix / game.num_actions;
            actions[i] = draw(pi);
        }
        const int j = game.joint_index(actions);
        const int s2 = draw(game.transition[s][j]);

        for (int i = 0; i < game.num_agents; ++i) {
            const Transition tr{s, abars[i], actions[i], game.reward[i][s][j], s2};
            const double delta =
                td_delta(qs[i], bases[i], tr, game.num_actions, game.gamma, temperature);
            window_abs_delta += std::abs(delta);
            ++window_count;
            const auto w = bases[i].eval(tr.s, tr.abar, tr.a);
            for (std::size_t p = 0; p < w.size(); ++p) qs[i].phi[p] += alpha * delta * w[p];
            for (double v : qs[i].phi)
                if (!std::isfinite(v) || std::abs(v) > opt.divergence_guard)
                    report.diverged = true;
        }
        if (report.diverged) break;

        if (window_count >= opt.window * game.num_agents) {
            report.td_error_curve.push_back(window_abs_delta / window_count);
            window_abs_delta = 0.0;
            window_count = 0;
        }
        last = actions;
        s = s2;
    }
    if (window_count > 0) report.td_error_curve.push_back(window_abs_delta / window_count);
    report.final_td_error =
        report.td_error_curve.empty() ? 0.0 : report.td_error_curve.back();
    report.final_q = qs;
    report.final_joint_action = last;

    if (game.num_agents == 1 && !report.diverged) {
        const auto oracle = value_iteration(game);
        double worst = 0.0;
        bool comparable = true;
        for (int st = 0; st < game.num_states && comparable; ++st)
            for (int a = 0; a < game.num_actions; ++a) {
                try {
                    worst = std::max(worst,
                                     std::abs(evaluate(qs[0], bases[0], st, 0.0, a) -
                                              oracle[st][a]));
                } catch (const DomainError&) {
                    comparable = false;
                    break;
                }
            }
        if (comparable) report.oracle_distance = worst;
    }

    if (opt.compute_equilibria && !report.diverged) {
        const double temperature = opt.temperature.value(opt.updates);
        for (int i = 0; i < game.num_agents; ++i) {
            const auto ode = estimate_ode_exact(game, i, qs, bases, temperature);
            AgentEquilibrium eq;
            try {
                const auto r = equilibrium_and_stability(ode);
                eq.phi_star = r.phi_star;
                eq.stable = r.stable;
                eq.residual = r.residual;
            } catch (const NumericError&) {
                eq.stable = false;
                eq.residual = std::numeric_limits<double>::quiet_NaN();
            }
            report.equilibria.push_back(std::move(eq));
        }
    }
    return report;
}

/// Line-delimited report stream: one record per TD-error window, then flags.
inline void write_report(const ConvergenceReport& r, std::ostream& os) {
    os.precision(17);
    for (std::size_t i = 0; i < r.td_error_curve.size(); ++i)
        os << "window " << i << " td_error " << r.td_error_curve[i] << "\n";
    os << "final_td_error " << r.final_td_error << "\n";
    os << "diverged " << (r.diverged ? 1 : 0) << "\n";
    for (const auto& v : r.violated_preconditions) os << "violated " << v << "\n";
    if (r.oracle_distance) os << "oracle_distance " << *r.oracle_distance << "\n";
    for (std::size_t i = 0; i < r.equilibria.size(); ++i) {
        os << "agent " << i << " stable " << (r.equilibria[i].stable ? 1 : 0) << " residual "
           << r.equilibria[i].residual << " phi_star";
        for (double v : r.equilibria[i].phi_star) os << " " << v;
        os << "\n";
    }
}

}  // namespace dispatchlab::mfq
