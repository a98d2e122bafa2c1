#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

namespace swarmplan {

/// Bounded FIFO store. Once full, each push evicts the oldest entry.
template <class T>
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be > 0");
        items_.reserve(capacity);
    }

    void push(T item) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(item));
        } else {
            items_[head_] = std::move(item);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }

    /// i = 0 is the oldest entry still stored.
    const T& at(std::size_t i) const {
        if (i >= items_.size()) throw std::out_of_range("replay buffer index");
        return items_[(head_ + i) % items_.size()];
    }

    /// Uniform sample of min(batch, size) distinct indices (Floyd's algorithm).
    template <class Rng>
    std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
        const std::size_t n = items_.size();
        if (n == 0) throw std::logic_error("cannot sample from an empty replay buffer");
        batch = std::min(batch, n);
        std::vector<std::size_t> out;
        out.reserve(batch);
        std::unordered_set<std::size_t> chosen;
        for (std::size_t j = n - batch; j < n; ++j) {
            std::uniform_int_distribution<std::size_t> pick(0, j);
            const std::size_t t = pick(rng);
            const std::size_t v = chosen.insert(t).second ? t : j;
            if (v == j) chosen.insert(j);
            out.push_back(v);
        }
        return out;
    }

    template <class Rng>
    std::vector<const T*> sample(std::size_t batch, Rng& rng) const {
        std::vector<const T*> out;
        for (std::size_t i : sample_indices(batch, rng)) out.push_back(&at(i));
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<T> items_;
};

}  // namespace swarmplan
