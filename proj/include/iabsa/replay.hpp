#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "iabsa/common.hpp"
#include "iabsa/env.hpp"

namespace iabsa {

// Transition with a joint-action index (value-based agent).
struct DiscreteTransition {
    Observation s;
    ActionIndex a = 0;
    double r = 0.0;
    Observation s_next;
};

// Transition with the relaxed action matrix that was executed, flattened row
// major (actor-critic agent).
struct RelaxedTransition {
    Observation s;
    Eigen::VectorXd a;
    double r = 0.0;
    Observation s_next;
};

// Fixed-capacity ring buffer; the oldest entry is overwritten when full.
template <class T>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {
        if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
        storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
    }

    void push(T t) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[head_] = std::move(t);
        }
        head_ = (head_ + 1) % capacity_;
    }

    // n uniform draws with replacement.
    std::vector<T> sample(std::size_t n, Rng& rng) const {
        std::vector<T> out;
        out.reserve(n);
        for (std::size_t idx : sample_indices(n, rng)) out.push_back(storage_[idx]);
        return out;
    }

    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
        if (storage_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
        std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
        std::vector<std::size_t> idx(n);
        for (auto& i : idx) i = pick(rng);
        return idx;
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return storage_.empty(); }

    // Entries from oldest to newest.
    std::vector<T> ordered() const {
        std::vector<T> out;
        out.reserve(storage_.size());
        const std::size_t start = storage_.size() < capacity_ ? 0 : head_;
        for (std::size_t k = 0; k < storage_.size(); ++k) out.push_back(storage_[(start + k) % storage_.size()]);
        return out;
    }

    const T& operator[](std::size_t i) const { return storage_[i]; }

private:
    std::size_t capacity_;
    std::vector<T> storage_;
    std::size_t head_ = 0;
};

}  // namespace iabsa
