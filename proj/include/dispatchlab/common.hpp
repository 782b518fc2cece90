#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace dispatchlab {

/// Violation of an operation's domain contract (bad ids, mixed modes, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent configuration / input files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values where finite ones are required (losses, gradients).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// One root seed split into independent named substreams, so adding a new
/// consumer never perturbs the draws of existing ones.
class RngPool {
public:
    explicit RngPool(std::uint64_t root_seed) : root_(root_seed) {}

    Rng& stream(const std::string& name) {
        auto it = streams_.find(name);
        if (it == streams_.end()) {
            Rng rng(splitmix64(root_ ^ fnv1a64(name)));
            it = streams_.emplace(name, std::move(rng)).first;
        }
        return it->second;
    }

    std::uint64_t root_seed() const { return root_; }

private:
    std::uint64_t root_;
    std::unordered_map<std::string, Rng> streams_;
};

}  // namespace dispatchlab
