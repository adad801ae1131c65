#include "chdqn/replay_buffer.hpp"

#include <algorithm>

#include "chdqn/errors.hpp"

namespace chdqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be >= 1");
  storage_.reserve(std::min<std::size_t>(capacity, 1u << 16));
}

void ReplayBuffer::push(Transition transition) {
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(transition));
  } else {
    storage_[head_] = std::move(transition);
    head_ = (head_ + 1) % capacity_;
  }
  ++insertions_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= storage_.size()) throw UsageError("replay buffer index out of range");
  return storage_[(head_ + i) % storage_.size()];
}

std::optional<std::vector<const Transition*>> ReplayBuffer::sample(std::size_t batch_size,
                                                                   Rng& rng) const {
  if (batch_size == 0 || storage_.size() < batch_size) return std::nullopt;
  std::vector<const Transition*> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    batch.push_back(&storage_[rng.index(storage_.size())]);
  }
  return batch;
}

}  // namespace chdqn
