#pragma once

#include <vector>

#include "nmp/env.hpp"
#include "nmp/rng.hpp"

namespace nmp {

// Fixed-capacity FIFO ring with uniform sampling over current contents.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("capacity must be positive");
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  // i-th oldest element, i in [0, size).
  const Transition& oldest(std::size_t i) const {
    return data_[(head_ + i) % data_.size()];
  }

  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const {
    if (data_.empty()) throw std::logic_error("sampling from empty replay");
    std::vector<const Transition*> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = &data_[rng.uniform_int(static_cast<int>(data_.size()))];
    }
    return out;
  }

  void clear() {
    data_.clear();
    head_ = 0;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest element once full
  std::vector<Transition> data_;
};

}  // namespace nmp
