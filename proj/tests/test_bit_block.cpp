#include <gtest/gtest.h>

#include <random>

#include "modelyap/bit_block.hpp"

using namespace modelyap;

TEST(BitBlock, BinaryRoundTripAndMsbFirstIndexing) {
  const BitBlock b = BitBlock::from_binary("1000");
  EXPECT_EQ(b.width(), 4u);
  EXPECT_TRUE(b.test(0));
  EXPECT_FALSE(b.test(3));
  EXPECT_EQ(b.to_binary(), "1000");
  EXPECT_EQ(b.lo(), 8u);
}

TEST(BitBlock, HexNeedsExactDigitCount) {
  EXPECT_EQ(BitBlock::from_hex(64, "0123456789abcdef").to_hex(), "0123456789abcdef");
  EXPECT_THROW(BitBlock::from_hex(64, "0123"), std::invalid_argument);
  EXPECT_THROW(BitBlock::from_hex(64, "0123456789abcdeg"), std::invalid_argument);
  const BitBlock wide = BitBlock::from_hex(128, "3243f6a8885a308d313198a2e0370734");
  EXPECT_EQ(wide.hi(), 0x3243f6a8885a308dull);
  EXPECT_EQ(wide.lo(), 0x313198a2e0370734ull);
}

TEST(BitBlock, XorWithSelfIsZero) {
  std::mt19937_64 rng(3);
  for (std::size_t n : {4u, 8u, 64u, 128u}) {
    const BitBlock x(n, rng(), rng());
    EXPECT_EQ((x ^ x), BitBlock::zero(n));
  }
}

TEST(BitBlock, WidthMismatchIsDimensionError) {
  const BitBlock a(64), b(128);
  EXPECT_THROW(a ^ b, DimensionError);
  EXPECT_THROW(BitBlock(129), DimensionError);
  EXPECT_THROW(BitBlock(0), DimensionError);
}

TEST(BitBlock, FlipIsAnInvolutionAndChangesOneBit) {
  const BitBlock p = BitBlock::from_binary("0000");
  const BitBlock q = p.flipped(3);
  EXPECT_EQ(q.to_binary(), "0001");
  EXPECT_EQ((p ^ q).popcount(), 1u);
  EXPECT_EQ(q.flipped(3), p);
}

TEST(BitBlock, PlusWrapsModuloWidth) {
  EXPECT_EQ(BitBlock::from_binary("1111").plus(1).to_binary(), "0000");
  const BitBlock top(128, ~0ull, ~0ull);
  EXPECT_EQ(top.plus(1), BitBlock::zero(128));
  EXPECT_EQ(BitBlock(128, 0, ~0ull).plus(1), BitBlock(128, 1, 0));
}

TEST(BitBlock, ForEachSetBitVisitsMsbFirstIndices) {
  const BitBlock b = BitBlock::from_binary("01001");
  std::vector<std::size_t> seen;
  b.for_each_set_bit([&](std::size_t i) { seen.push_back(i); });
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<std::size_t>{1, 4}));
}
