#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "chdqn/errors.hpp"
#include "chdqn/random.hpp"
#include "chdqn/replay_buffer.hpp"

using namespace chdqn;

namespace {

Transition tagged(int tag) {
  return {{static_cast<double>(tag)}, tag % 3, static_cast<double>(tag), {tag + 1.0}, false};
}

}  // namespace

TEST(ReplayBuffer, RejectsZeroCapacity) { EXPECT_THROW(ReplayBuffer(0), ConfigError); }

TEST(ReplayBuffer, FillsThenEvictsOldest) {
  ReplayBuffer buf(3);
  EXPECT_TRUE(buf.empty());
  for (int i = 0; i < 5; ++i) buf.push(tagged(i));
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.insertions(), 5u);
  EXPECT_EQ(buf.at(0).reward, 2.0);
  EXPECT_EQ(buf.at(1).reward, 3.0);
  EXPECT_EQ(buf.at(2).reward, 4.0);
  EXPECT_THROW(buf.at(3), UsageError);
}

TEST(ReplayBuffer, HoldsLastCapacityInOrder) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cap = 1 + rng.index(20);
    const int pushes = static_cast<int>(rng.index(60));
    ReplayBuffer buf(cap);
    for (int i = 0; i < pushes; ++i) buf.push(tagged(i));
    const std::size_t expected = std::min<std::size_t>(cap, pushes);
    ASSERT_EQ(buf.size(), expected);
    for (std::size_t j = 0; j < expected; ++j) {
      EXPECT_EQ(buf.at(j).reward, static_cast<double>(pushes - expected + j));
    }
  }
}

TEST(ReplayBuffer, InsufficientDataGivesNothing) {
  ReplayBuffer buf(10);
  Rng rng(0);
  EXPECT_FALSE(buf.sample(1, rng).has_value());
  for (int i = 0; i < 4; ++i) buf.push(tagged(i));
  EXPECT_FALSE(buf.sample(5, rng).has_value());
  const auto batch = buf.sample(4, rng);
  ASSERT_TRUE(batch.has_value());
  EXPECT_EQ(batch->size(), 4u);
}

TEST(ReplayBuffer, SamplesOnlyStoredTransitions) {
  ReplayBuffer buf(8);
  for (int i = 0; i < 30; ++i) buf.push(tagged(i));
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const auto batch = buf.sample(16, rng);
    for (const Transition* t : *batch) {
      EXPECT_GE(t->reward, 22.0);
      EXPECT_LE(t->reward, 29.0);
    }
  }
}

TEST(ReplayBuffer, SameSeedSameBatch) {
  ReplayBuffer buf(100);
  for (int i = 0; i < 100; ++i) buf.push(tagged(i));
  Rng a(9), b(9);
  const auto x = *buf.sample(32, a);
  const auto y = *buf.sample(32, b);
  EXPECT_EQ(x, y);
  EXPECT_EQ(a.next(), b.next());
}

TEST(ReplayBuffer, SamplingIsUniform) {
  constexpr int kSlots = 10;
  constexpr int kDraws = 100'000;
  ReplayBuffer buf(kSlots);
  for (int i = 0; i < 25; ++i) buf.push(tagged(i));
  std::vector<int> counts(kSlots, 0);
  Rng rng(2024);
  for (int d = 0; d < kDraws / kSlots; ++d) {
    const auto batch = buf.sample(kSlots, rng);
    ASSERT_TRUE(batch.has_value());
    for (const Transition* t : *batch) ++counts[static_cast<int>(t->reward) - 15];
  }
  const double expected = static_cast<double>(kDraws) / kSlots;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 21.666);  // 99th percentile, 9 degrees of freedom
}
