#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "dispatchlab/nn/adam.hpp"
#include "dispatchlab/nn/mlp.hpp"

namespace dispatchlab {

// Versioned text checkpoints. Doubles are written with 17 significant
// digits, which round-trips IEEE754 exactly.

inline void save_mlp(const MlpParams& p, std::ostream& os) {
    os << std::setprecision(17);
    os << "dispatchlab-mlp 1\n";
    os << "output_activation " << to_string(p.output_activation) << "\n";
    os << "layers " << p.layers.size() << "\n";
    for (const auto& l : p.layers) {
        os << "layer " << l.in << " " << l.out << "\n";
        os << "w";
        for (double x : l.w) os << " " << x;
        os << "\nb";
        for (double x : l.b) os << " " << x;
        os << "\n";
    }
}

inline void save_mlp(const MlpParams& p, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write checkpoint: " + path);
    save_mlp(p, os);
}

inline MlpParams load_mlp(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "dispatchlab-mlp" || version != 1)
        throw ConfigError("not a dispatchlab-mlp v1 checkpoint");
    std::string key, value;
    MlpParams p;
    if (!(is >> key >> value) || key != "output_activation")
        throw ConfigError("checkpoint: missing output_activation");
    p.output_activation = activation_from_string(value);
    std::size_t n = 0;
    if (!(is >> key >> n) || key != "layers") throw ConfigError("checkpoint: missing layer count");
    for (std::size_t i = 0; i < n; ++i) {
        Layer l;
        if (!(is >> key >> l.in >> l.out) || key != "layer")
            throw ConfigError("checkpoint: malformed layer header");
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        l.b.resize(l.out);
        if (!(is >> key) || key != "w") throw ConfigError("checkpoint: missing weights");
        for (auto& x : l.w)
            if (!(is >> x)) throw ConfigError("checkpoint: truncated weights");
        if (!(is >> key) || key != "b") throw ConfigError("checkpoint: missing biases");
        for (auto& x : l.b)
            if (!(is >> x)) throw ConfigError("checkpoint: truncated biases");
        p.layers.push_back(std::move(l));
    }
    return p;
}

inline MlpParams load_mlp(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read checkpoint: " + path);
    return load_mlp(is);
}

inline void save_adam(const AdamState& s, std::ostream& os) {
    os << std::setprecision(17);
    os << "dispatchlab-adam 1\n";
    os << "step " << s.step << "\n";
    os << "hyper " << s.beta1 << " " << s.beta2 << " " << s.eps << "\n";
    os << "layers " << s.m.size() << "\n";
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        os << "layer " << s.m[i].in << " " << s.m[i].out << "\n";
        os << "m";
        for (double x : s.m[i].w) os << " " << x;
        for (double x : s.m[i].b) os << " " << x;
        os << "\nv";
        for (double x : s.v[i].w) os << " " << x;
        for (double x : s.v[i].b) os << " " << x;
        os << "\n";
    }
}

inline void save_adam(const AdamState& s, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write optimizer state: " + path);
    save_adam(s, os);
}

inline AdamState load_adam(std::istream& is) {
    std::string magic, key;
    int version = 0;
    if (!(is >> magic >> version) || magic != "dispatchlab-adam" || version != 1)
        throw ConfigError("not a dispatchlab-adam v1 state file");
    AdamState s;
    if (!(is >> key >> s.step) || key != "step") throw ConfigError("adam state: missing step");
    if (!(is >> key >> s.beta1 >> s.beta2 >> s.eps) || key != "hyper")
        throw ConfigError("adam state: missing hyperparameters");
    std::size_t n = 0;
    if (!(is >> key >> n) || key != "layers") throw ConfigError("adam state: missing layer count");
    for (std::size_t i = 0; i < n; ++i) {
        Layer m, v;
        if (!(is >> key >> m.in >> m.out) || key != "layer")
            throw ConfigError("adam state: malformed layer header");
        v.in = m.in;
        v.out = m.out;
        m.w.resize(static_cast<std::size_t>(m.in) * m.out);
        m.b.resize(m.out);
        v.w.resize(m.w.size());
        v.b.resize(m.b.size());
        if (!(is >> key) || key != "m") throw ConfigError("adam state: missing first moments");
        for (auto& x : m.w)
            if (!(is >> x)) throw ConfigError("adam state: truncated");
        for (auto& x : m.b)
            if (!(is >> x)) throw ConfigError("adam state: truncated");
        if (!(is >> key) || key != "v") throw ConfigError("adam state: missing second moments");
        for (auto& x : v.w)
            if (!(is >> x)) throw ConfigError("adam state: truncated");
        for (auto& x : v.b)
            if (!(is >> x)) throw ConfigError("adam state: truncated");
        s.m.push_back(std::move(m));
        s.v.push_back(std::move(v));
    }
    return s;
}

inline AdamState load_adam(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read optimizer state: " + path);
    return load_adam(is);
}

}  // namespace dispatchlab
