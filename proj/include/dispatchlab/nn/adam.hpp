#pragma once

#include <cmath>
#include <cstdint>

#include "dispatchlab/nn/mlp.hpp"

namespace dispatchlab {

/// Adam moment accumulators, shaped like the parameters they update.
struct AdamState {
    std::vector<Layer> m;  // first moments
    std::vector<Layer> v;  // second moments
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros_like(const MlpParams& p) {
        AdamState s;
        s.m = Gradients::zeros_like(p).layers;
        s.v = Gradients::zeros_like(p).layers;
        return s;
    }
};

namespace detail {

inline void check_same_shape(const std::vector<Layer>& a, const std::vector<Layer>& b,
                             const char* what) {
    if (a.size() != b.size()) throw DomainError(std::string(what) + ": layer count mismatch");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].w.size() != b[i].w.size() || a[i].b.size() != b[i].b.size())
            throw DomainError(std::string(what) + ": layer shape mismatch");
}

}  // namespace detail

/// One bias-corrected Adam update. Non-finite gradients leave the parameters
/// and moments untouched.
inline void adam_step(AdamState& s, MlpParams& p, const Gradients& g, double lr) {
    detail::check_same_shape(p.layers, g.layers, "adam_step");
    detail::check_same_shape(p.layers, s.m, "adam_step");
    if (!g.finite()) throw NumericError("adam_step: non-finite gradient");

    s.step += 1;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        auto update = [&](std::vector<double>& param, const std::vector<double>& grad,
                          std::vector<double>& m, std::vector<double>& v) {
            for (std::size_t i = 0; i < param.size(); ++i) {
                m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
                v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                param[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
            }
        };
        update(p.layers[li].w, g.layers[li].w, s.m[li].w, s.v[li].w);
        update(p.layers[li].b, g.layers[li].b, s.m[li].b, s.v[li].b);
    }
}

/// target <- tau * online + (1 - tau) * target, elementwise.
inline void soft_update(MlpParams& target, const MlpParams& online, double tau) {
    if (tau < 0.0 || tau > 1.0) throw DomainError("soft_update: tau outside [0,1]");
    detail::check_same_shape(target.layers, online.layers, "soft_update");
    for (std::size_t li = 0; li < target.layers.size(); ++li) {
        for (std::size_t i = 0; i < target.layers[li].w.size(); ++i)
            target.layers[li].w[i] =
                tau * online.layers[li].w[i] + (1.0 - tau) * target.layers[li].w[i];
        for (std::size_t i = 0; i < target.layers[li].b.size(); ++i)
            target.layers[li].b[i] =
                tau * online.layers[li].b[i] + (1.0 - tau) * target.layers[li].b[i];
    }
}

}  // namespace dispatchlab
