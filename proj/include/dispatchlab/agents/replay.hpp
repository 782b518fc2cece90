#pragma once

#include <cstddef>
#include <vector>

#include "dispatchlab/agents/embedding.hpp"
#include "dispatchlab/common.hpp"

namespace dispatchlab {

/// One stored decision transition. The acting step's candidate set feeds the
/// policy-gradient expectation; the next decision point's candidate set feeds
/// the bootstrap target (empty means terminal-like). The mean action is
/// computed once, at the next decision point, and serves both as the critic
/// input and inside the mean-field target value.
struct Experience {
    ObservationEmbedding obs;
    std::size_t action_index = 0;  // into `candidates`
    std::vector<ActionEmbedding> candidates;
    double reward = 0.0;
    ObservationEmbedding next_obs;
    std::vector<ActionEmbedding> next_candidates;
    double mean_action = 0.0;

    const ActionEmbedding& action() const { return candidates.at(action_index); }
};

/// FIFO ring of experiences with uniform sampling without replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 500000) : capacity_(capacity) {
        if (capacity_ == 0) throw DomainError("replay capacity must be positive");
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }

    void push(Experience e) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(e));
        } else {
            items_[head_] = std::move(e);  // overwrite the oldest
            head_ = (head_ + 1) % capacity_;
        }
    }

    const Experience& at(std::size_t i) const { return items_.at(i); }

    /// k distinct experiences, uniformly.
    std::vector<const Experience*> sample(std::size_t k, Rng& rng) const {
        if (k > items_.size())
            throw DomainError("replay sample of " + std::to_string(k) + " from " +
                              std::to_string(items_.size()) + " stored");
        std::vector<std::size_t> idx(items_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<const Experience*> out;
        out.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng)]);
            out.push_back(&items_[idx[i]]);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // oldest slot once full
    std::vector<Experience> items_;
};

}  // namespace dispatchlab
