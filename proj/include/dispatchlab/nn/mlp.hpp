#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dispatchlab/common.hpp"

namespace dispatchlab {

enum class Activation { Relu, Sigmoid, Identity };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "identity") return Activation::Identity;
    throw ConfigError("unknown activation: " + s);
}

inline double apply_activation(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Identity: return z;
    }
    return z;
}

inline double activation_derivative(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

/// One dense layer, weights row-major (out x in).
struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;
    std::vector<double> b;
};

/// Dense network: rectifier between hidden layers, configurable output
/// activation. Plain value object; copies are independent.
struct MlpParams {
    std::vector<Layer> layers;
    Activation output_activation = Activation::Identity;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.w.size() + l.b.size();
        return n;
    }

    /// dims = {input, hidden..., output}; weights and biases drawn uniform in
    /// +-sqrt(6/(fan_in+fan_out)). Nonzero biases keep rectifier units off
    /// the exact kink when a whole layer goes dead.
    static MlpParams make(const std::vector<int>& dims, Activation output_activation, Rng& rng) {
        if (dims.size() < 2) throw DomainError("an MLP needs at least input and output dims");
        MlpParams p;
        p.output_activation = output_activation;
        for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
            Layer l;
            l.in = dims[i];
            l.out = dims[i + 1];
            if (l.in < 1 || l.out < 1) throw DomainError("layer dims must be >= 1");
            const double bound = std::sqrt(6.0 / (l.in + l.out));
            std::uniform_real_distribution<double> u(-bound, bound);
            l.w.resize(static_cast<std::size_t>(l.in) * l.out);
            for (auto& x : l.w) x = u(rng);
            l.b.resize(l.out);
            for (auto& x : l.b) x = u(rng);
            p.layers.push_back(std::move(l));
        }
        return p;
    }
};

/// Per-parameter partials of a scalar loss, shaped like MlpParams.
struct Gradients {
    std::vector<Layer> layers;

    static Gradients zeros_like(const MlpParams& p) {
        Gradients g;
        g.layers.reserve(p.layers.size());
        for (const auto& l : p.layers) {
            Layer z;
            z.in = l.in;
            z.out = l.out;
            z.w.assign(l.w.size(), 0.0);
            z.b.assign(l.b.size(), 0.0);
            g.layers.push_back(std::move(z));
        }
        return g;
    }

    void scale(double c) {
        for (auto& l : layers) {
            for (auto& x : l.w) x *= c;
            for (auto& x : l.b) x *= c;
        }
    }

    bool finite() const {
        for (const auto& l : layers) {
            for (double x : l.w)
                if (!std::isfinite(x)) return false;
            for (double x : l.b)
                if (!std::isfinite(x)) return false;
        }
        return true;
    }
};

namespace detail {

inline void check_input_dim(const MlpParams& p, std::size_t n) {
    if (p.layers.empty()) throw DomainError("empty network");
    if (static_cast<std::size_t>(p.input_dim()) != n)
        throw DomainError("input length " + std::to_string(n) + " does not match network input " +
                          std::to_string(p.input_dim()));
}

}  // namespace detail

/// Deterministic affine + activation composition.
inline std::vector<double> forward(const MlpParams& p, const std::vector<double>& input) {
    detail::check_input_dim(p, input.size());
    std::vector<double> a = input, next;
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        const Layer& l = p.layers[li];
        const Activation act =
            li + 1 == p.layers.size() ? p.output_activation : Activation::Relu;
        next.assign(l.out, 0.0);
        for (int r = 0; r < l.out; ++r) {
            double z = l.b[r];
            const double* wr = l.w.data() + static_cast<std::size_t>(r) * l.in;
            for (int c = 0; c < l.in; ++c) z += wr[c] * a[c];
            next[r] = apply_activation(act, z);
        }
        a.swap(next);
    }
    return a;
}

/// Reverse-mode derivatives of forward, accumulated into `acc`; returns
/// d(loss)/d(input). `upstream` is d(loss)/d(output).
inline std::vector<double> add_backward(const MlpParams& p, const std::vector<double>& input,
                                        const std::vector<double>& upstream, Gradients& acc) {
    detail::check_input_dim(p, input.size());
    if (static_cast<std::size_t>(p.output_dim()) != upstream.size())
        throw DomainError("upstream length does not match network output");
    if (acc.layers.size() != p.layers.size()) throw DomainError("gradient shape mismatch");

    const std::size_t L = p.layers.size();
    std::vector<std::vector<double>> zs(L), as(L + 1);
    as[0] = input;
    for (std::size_t li = 0; li < L; ++li) {
        const Layer& l = p.layers[li];
        const Activation act = li + 1 == L ? p.output_activation : Activation::Relu;
        zs[li].assign(l.out, 0.0);
        as[li + 1].assign(l.out, 0.0);
        for (int r = 0; r < l.out; ++r) {
            double z = l.b[r];
            const double* wr = l.w.data() + static_cast<std::size_t>(r) * l.in;
            for (int c = 0; c < l.in; ++c) z += wr[c] * as[li][c];
            zs[li][r] = z;
            as[li + 1][r] = apply_activation(act, z);
        }
    }

    std::vector<double> delta = upstream, prev;
    for (std::size_t li = L; li-- > 0;) {
        const Layer& l = p.layers[li];
        const Activation act = li + 1 == L ? p.output_activation : Activation::Relu;
        for (int r = 0; r < l.out; ++r) delta[r] *= activation_derivative(act, zs[li][r]);

        Layer& g = acc.layers[li];
        for (int r = 0; r < l.out; ++r) {
            g.b[r] += delta[r];
            double* gw = g.w.data() + static_cast<std::size_t>(r) * l.in;
            for (int c = 0; c < l.in; ++c) gw[c] += delta[r] * as[li][c];
        }

        prev.assign(l.in, 0.0);
        for (int r = 0; r < l.out; ++r) {
            const double* wr = l.w.data() + static_cast<std::size_t>(r) * l.in;
            for (int c = 0; c < l.in; ++c) prev[c] += wr[c] * delta[r];
        }
        delta.swap(prev);
    }
    return delta;
}

inline std::pair<Gradients, std::vector<double>> backward(const MlpParams& p,
                                                          const std::vector<double>& input,
                                                          const std::vector<double>& upstream) {
    Gradients g = Gradients::zeros_like(p);
    auto dinput = add_backward(p, input, upstream, g);
    return {std::move(g), std::move(dinput)};
}

}  // namespace dispatchlab
