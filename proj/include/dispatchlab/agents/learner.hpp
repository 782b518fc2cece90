#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dispatchlab/agents/embedding.hpp"
#include "dispatchlab/agents/policy.hpp"
#include "dispatchlab/agents/replay.hpp"
#include "dispatchlab/nn/adam.hpp"
#include "dispatchlab/nn/mlp.hpp"
#include "dispatchlab/sim/world.hpp"

namespace dispatchlab {

enum class DispatcherKind { RAN, RES, REV, HOD, QIOD, IOD, COD };

inline bool is_learning(DispatcherKind k) {
    return k == DispatcherKind::QIOD || k == DispatcherKind::IOD || k == DispatcherKind::COD;
}

inline std::string to_string(DispatcherKind k) {
    switch (k) {
        case DispatcherKind::RAN: return "RAN";
        case DispatcherKind::RES: return "RES";
        case DispatcherKind::REV: return "REV";
        case DispatcherKind::HOD: return "HOD";
        case DispatcherKind::QIOD: return "Q-IOD";
        case DispatcherKind::IOD: return "IOD";
        case DispatcherKind::COD: return "COD";
    }
    return "?";
}

inline DispatcherKind dispatcher_from_string(const std::string& s) {
    if (s == "RAN") return DispatcherKind::RAN;
    if (s == "RES") return DispatcherKind::RES;
    if (s == "REV") return DispatcherKind::REV;
    if (s == "HOD") return DispatcherKind::HOD;
    if (s == "Q-IOD" || s == "QIOD") return DispatcherKind::QIOD;
    if (s == "IOD") return DispatcherKind::IOD;
    if (s == "COD") return DispatcherKind::COD;
    throw ConfigError("unknown dispatcher: " + s);
}

/// The one shared parameter set: every driver selects and learns through the
/// same actor and critic (homogeneous agents), with slowly tracking target
/// copies for stable bootstrap targets.
struct AgentNets {
    DispatcherKind kind = DispatcherKind::COD;
    MlpParams actor, actor_target;
    MlpParams critic, critic_target;
    AdamState actor_opt, critic_opt;

    bool uses_mean_action() const { return kind == DispatcherKind::COD; }
    bool has_actor() const { return kind != DispatcherKind::QIOD; }

    static AgentNets make(DispatcherKind kind, const Featurizer& feat,
                          const std::vector<int>& actor_hidden,
                          const std::vector<int>& critic_hidden, Rng& rng) {
        if (!is_learning(kind)) throw DomainError("AgentNets for a rule-based dispatcher");
        AgentNets n;
        n.kind = kind;
        std::vector<int> adims{feat.actor_input_dim()};
        adims.insert(adims.end(), actor_hidden.begin(), actor_hidden.end());
        adims.push_back(1);
        n.actor = MlpParams::make(adims, Activation::Sigmoid, rng);
        n.actor_target = n.actor;
        std::vector<int> cdims{feat.critic_input_dim(n.uses_mean_action())};
        cdims.insert(cdims.end(), critic_hidden.begin(), critic_hidden.end());
        cdims.push_back(1);
        n.critic = MlpParams::make(cdims, Activation::Relu, rng);
        // start the rectified output in its active region
        n.critic.layers.back().b[0] += 0.5;
        n.critic_target = n.critic;
        n.actor_opt = AdamState::zeros_like(n.actor);
        n.critic_opt = AdamState::zeros_like(n.critic);
        return n;
    }
};

namespace detail {

inline std::optional<double> mean_action_input(const AgentNets& nets, const Experience& e) {
    if (nets.uses_mean_action()) return e.mean_action;
    return std::nullopt;
}

inline double critic_eval(const MlpParams& critic, const Featurizer& feat,
                          const ObservationEmbedding& obs, const ActionEmbedding& a,
                          std::optional<double> abar) {
    return forward(critic, feat.critic_input(obs, a, abar))[0];
}

}  // namespace detail

/// Average peer response around one driver: drivers present in its
/// neighborhood (its own cell in grid mode, a disc of twice the receiving
/// radius in coordinate mode — arrivals have already materialized as idle
/// when this is evaluated) divided by the orders available to it. The
/// denominator is floored at one so orderless neighborhoods stay finite.
inline double mean_action(const World& w, DriverId id) {
    const Driver& me = w.driver(id);
    if (me.status != DriverStatus::Idle)
        throw DomainError("mean action queried for a driver that cannot act");

    int arriving = 0;
    if (w.geometry().mode == Mode::Grid) {
        const GridId cell = me.location.grid_id();
        for (const auto& d : w.drivers())
            if (d.status == DriverStatus::Idle && d.location.grid_id() == cell) ++arriving;
    } else {
        const double radius = 2.0 * w.config().order_radius;
        for (const auto& d : w.drivers())
            if (d.status == DriverStatus::Idle &&
                World::unit_distance(d.location.coord(), me.location.coord()) <= radius)
                ++arriving;
    }
    const std::size_t available = w.candidate_orders(id).size();
    return static_cast<double>(arriving) / static_cast<double>(std::max<std::size_t>(available, 1));
}

/// Bootstrap target for the independent learner: the target actor greedily
/// picks the next action, the target critic values it. Empty next candidate
/// sets terminate the recursion at the reward.
inline double critic_target_iod(const AgentNets& nets, const Featurizer& feat,
                                const Experience& e, double gamma) {
    if (gamma < 0.0 || gamma > 1.0) throw DomainError("gamma outside [0,1]");
    if (e.next_candidates.empty() || gamma == 0.0) return e.reward;
    const auto values = rank(nets.actor_target, feat, e.next_obs, e.next_candidates);
    const std::size_t best = static_cast<std::size_t>(
        std::max_element(values.begin(), values.end()) - values.begin());
    const double q = detail::critic_eval(nets.critic_target, feat, e.next_obs,
                                         e.next_candidates[best], std::nullopt);
    return e.reward + gamma * q;
}

/// Q-learning target without a policy network: max over next candidates.
inline double critic_target_qiod(const AgentNets& nets, const Featurizer& feat,
                                 const Experience& e, double gamma) {
    if (gamma < 0.0 || gamma > 1.0) throw DomainError("gamma outside [0,1]");
    if (e.next_candidates.empty() || gamma == 0.0) return e.reward;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& a : e.next_candidates)
        best = std::max(best,
                        detail::critic_eval(nets.critic_target, feat, e.next_obs, a, std::nullopt));
    return e.reward + gamma * best;
}

/// Mean-field state value under the target networks: target-policy Boltzmann
/// probabilities over the next candidates, weighting target critic values
/// evaluated at the stored empirical mean action. A convex combination, so
/// the result lies within [min Q, max Q].
inline double mf_value(const AgentNets& nets, const Featurizer& feat,
                       const ObservationEmbedding& next_obs,
                       const std::vector<ActionEmbedding>& next_candidates, double abar,
                       double beta) {
    if (next_candidates.empty()) return 0.0;
    const auto values = rank(nets.actor_target, feat, next_obs, next_candidates);
    const auto probs = boltzmann_probabilities(values, beta);
    double v = 0.0;
    for (std::size_t i = 0; i < next_candidates.size(); ++i)
        v += probs[i] *
             detail::critic_eval(nets.critic_target, feat, next_obs, next_candidates[i], abar);
    return v;
}

/// Mean-field target: reward plus the discounted target-side value.
inline double critic_target_cod(const AgentNets& nets, const Featurizer& feat,
                                const Experience& e, double gamma, double beta) {
    if (gamma < 0.0 || gamma > 1.0) throw DomainError("gamma outside [0,1]");
    if (gamma == 0.0) return e.reward;
    return e.reward + gamma * mf_value(nets, feat, e.next_obs, e.next_candidates, e.mean_action, beta);
}

inline double critic_target(const AgentNets& nets, const Featurizer& feat, const Experience& e,
                            double gamma, double beta) {
    switch (nets.kind) {
        case DispatcherKind::QIOD: return critic_target_qiod(nets, feat, e, gamma);
        case DispatcherKind::IOD: return critic_target_iod(nets, feat, e, gamma);
        case DispatcherKind::COD: return critic_target_cod(nets, feat, e, gamma, beta);
        default: throw DomainError("critic target for a rule-based dispatcher");
    }
}

/// One squared-error regression step of the online critic towards the
/// variant-specific targets (which are constants: no gradient flows through
/// the target networks). Returns the pre-step loss.
inline double critic_update(AgentNets& nets, const Featurizer& feat,
                            std::span<const Experience* const> batch, double gamma, double lr,
                            double beta) {
    if (batch.empty()) throw DomainError("critic update on an empty batch");
    Gradients grads = Gradients::zeros_like(nets.critic);
    double loss = 0.0;
    const double inv_k = 1.0 / static_cast<double>(batch.size());
    for (const Experience* e : batch) {
        const double y = critic_target(nets, feat, *e, gamma, beta);
        const auto input = feat.critic_input(e->obs, e->action(), detail::mean_action_input(nets, *e));
        const double q = forward(nets.critic, input)[0];
        const double residual = q - y;
        loss += residual * residual * inv_k;
        add_backward(nets.critic, input, {2.0 * residual * inv_k}, grads);
    }
    if (!std::isfinite(loss)) throw NumericError("critic loss diverged");
    adam_step(nets.critic_opt, nets.critic, grads, lr);
    return loss;
}

/// Score-function policy improvement: ascend the expected online-critic value
/// E[sum_a pi(a|o) Q(o,(a-bar,a))] by differentiating the Boltzmann
/// probabilities w.r.t. the actor, with Q treated as constant weights.
/// Returns the mean objective estimate; a no-op for the Q-learning variant.
inline double actor_update(AgentNets& nets, const Featurizer& feat,
                           std::span<const Experience* const> batch, double beta, double lr) {
    if (batch.empty()) throw DomainError("actor update on an empty batch");
    if (!nets.has_actor()) return 0.0;

    Gradients grads = Gradients::zeros_like(nets.actor);
    double objective = 0.0;
    const double inv_k = 1.0 / static_cast<double>(batch.size());
    for (const Experience* e : batch) {
        const auto values = rank(nets.actor, feat, e->obs, e->candidates);
        const auto probs = boltzmann_probabilities(values, beta);
        std::vector<double> q(e->candidates.size());
        double expected = 0.0;
        for (std::size_t i = 0; i < e->candidates.size(); ++i) {
            q[i] = detail::critic_eval(nets.critic, feat, e->obs, e->candidates[i],
                                       detail::mean_action_input(nets, *e));
            expected += probs[i] * q[i];
        }
        objective += expected * inv_k;
        for (std::size_t i = 0; i < e->candidates.size(); ++i) {
            // d(expected)/d(value_i) = beta * p_i * (q_i - expected); negated
            // because the optimizer descends.
            const double up = -beta * probs[i] * (q[i] - expected) * inv_k;
            if (up == 0.0) continue;
            add_backward(nets.actor, feat.actor_input(e->obs, e->candidates[i]), {up}, grads);
        }
    }
    if (!std::isfinite(objective)) throw NumericError("actor objective diverged");
    adam_step(nets.actor_opt, nets.actor, grads, lr);
    return objective;
}

/// Algorithm step: track both target networks towards their online copies.
inline void soft_update_targets(AgentNets& nets, double tau_actor, double tau_critic) {
    if (nets.has_actor()) soft_update(nets.actor_target, nets.actor, tau_actor);
    soft_update(nets.critic_target, nets.critic, tau_critic);
}

}  // namespace dispatchlab
