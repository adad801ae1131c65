#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "chdqn/random.hpp"

namespace chdqn {

/// One environment transition. Observations are raw (unnormalized);
/// `terminal` marks genuine MDP termination only, never a time-limit cut.
struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Appends, evicting the oldest transition once full.
  void push(Transition transition);

  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertions() const { return insertions_; }
  bool empty() const { return storage_.empty(); }

  /// i-th stored transition in insertion order (0 = oldest).
  const Transition& at(std::size_t i) const;

  /// batch_size draws uniformly with replacement, or nullopt when fewer than
  /// batch_size transitions are stored. Consumes exactly batch_size draws from rng.
  std::optional<std::vector<const Transition*>> sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::uint64_t insertions_ = 0;
};

}  // namespace chdqn
