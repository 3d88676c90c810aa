#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "istsim/bitstring.hpp"
#include "istsim/errors.hpp"
#include "oracles.hpp"

using namespace istsim;

namespace {

std::vector<int> as_ints(std::span<const std::int8_t> row) { return {row.begin(), row.end()}; }

std::vector<int> sizes_to_check() {
  std::vector<int> Ns;
  for (int N = 4; N <= 128; N += 2) Ns.push_back(N);
  for (int N = 256; N <= (1 << 14); N *= 2) Ns.push_back(N);
  return Ns;
}

}  // namespace

TEST(BitStringSingle, SmallExamples) {
  const auto a = BitStringSingle::build(LatticeSize(8), 1);
  EXPECT_EQ(a.to_text(), "+++++++-");
  EXPECT_EQ(a.mean(), (Rational{3, 4}));
  EXPECT_EQ(a.outcome({8}), -1);
  EXPECT_EQ(a.outcome({1}), +1);

  const auto b = BitStringSingle::build(LatticeSize(4), 2);
  EXPECT_EQ(as_ints(b.entries()), (std::vector<int>{1, -1, -1, -1}));
  EXPECT_EQ(b.mean(), (Rational{-1, 2}));

  const auto c = BitStringSingle::build(LatticeSize(8), 1, 2);
  EXPECT_EQ(c.to_text(), "+-++++++");
  EXPECT_EQ(c.plus_count(), 7);
  EXPECT_EQ(c.phase(), 2);
}

TEST(BitStringSingle, RangeErrors) {
  EXPECT_THROW(BitStringSingle::build(LatticeSize(8), 0), ParameterError);
  EXPECT_THROW(BitStringSingle::build(LatticeSize(8), 5), ParameterError);
  EXPECT_THROW(BitStringSingle::build(LatticeSize(8), 1, -1), ParameterError);
  EXPECT_THROW(BitStringSingle::build(LatticeSize(8), 1, 9), ParameterError);
  EXPECT_NO_THROW(BitStringSingle::build(LatticeSize(8), 1, 8));
  const auto a = BitStringSingle::build(LatticeSize(8), 1);
  EXPECT_THROW(a.outcome({0}), ParameterError);
  EXPECT_THROW(a.outcome({9}), ParameterError);
}

TEST(BitStringSingle, MeanOverKEqualsLatticeCosineExactly) {
  for (int N : sizes_to_check()) {
    for (int n = 1; n <= N / 2; n += std::max(1, N / 64)) {
      const auto bits = BitStringSingle::build(LatticeSize(N), n);
      std::int64_t sum = 0;
      for (int k = 1; k <= N; ++k) sum += bits.outcome({k});
      ASSERT_EQ(sum, oracle::single_numerator(N, n)) << "N=" << N << " n=" << n;
      ASSERT_EQ(bits.minus_count(), 2 * n - 1);
      ASSERT_EQ(bits.mean(), Rational::make(oracle::single_numerator(N, n), N));
    }
  }
}

TEST(BitStringSingle, PhaseShiftPreservesComposition) {
  for (int N : {4, 6, 8, 10, 16, 34}) {
    for (int n = 1; n <= N / 2; ++n) {
      auto canonical = as_ints(BitStringSingle::build(LatticeSize(N), n).entries());
      for (int l = 0; l <= N; ++l) {
        const auto shifted = BitStringSingle::build(LatticeSize(N), n, l);
        auto got = as_ints(shifted.entries());
        // Right cyclic shift: entry i moves to (i + l) mod N.
        for (int i = 0; i < N; ++i) {
          ASSERT_EQ(got[static_cast<std::size_t>((i + l) % N)], canonical[static_cast<std::size_t>(i)]);
        }
        std::sort(got.begin(), got.end());
        auto sorted = canonical;
        std::sort(sorted.begin(), sorted.end());
        ASSERT_EQ(got, sorted);
      }
    }
  }
}

TEST(BitStringSingle, OutcomeReadsOnlyItsOwnEntry) {
  const int N = 16;
  for (int n = 1; n <= N / 2; ++n) {
    const auto bits = BitStringSingle::build(LatticeSize(N), n, 3);
    const auto base = as_ints(bits.entries());
    for (int k = 1; k <= N; ++k) {
      // Any string agreeing with `bits` at k gives the same outcome at k.
      for (int j = 1; j <= N; ++j) {
        if (j == k) continue;
        auto flipped = base;
        flipped[static_cast<std::size_t>(j - 1)] = -flipped[static_cast<std::size_t>(j - 1)];
        ASSERT_EQ(flipped[static_cast<std::size_t>(k - 1)], bits.outcome({k}));
      }
    }
  }
}

TEST(BitStringSinglet, SmallExamples) {
  const auto a = BitStringSinglet::build(LatticeSize(8), 2);
  EXPECT_EQ(as_ints(a.row1()), (std::vector<int>{1, 1, 1, 1, -1, -1, -1, -1}));
  EXPECT_EQ(as_ints(a.row2()), (std::vector<int>{1, 1, -1, -1, -1, -1, 1, 1}));
  EXPECT_EQ(a.counts().plus_plus, 2);
  EXPECT_EQ(a.counts().minus_minus, 2);
  EXPECT_EQ(a.outcome_pair({1}), std::make_pair(1, 1));
  EXPECT_EQ(a.outcome_pair({3}), std::make_pair(1, -1));
  EXPECT_EQ(correlation_exact(a), (Rational{0, 1}));
  EXPECT_EQ(a.to_text(), "++++----\n++----++");

  const auto b = BitStringSinglet::build(LatticeSize(4), 2);
  EXPECT_EQ(as_ints(b.row2()), as_ints(b.row1()));
  EXPECT_EQ(correlation_exact(b), (Rational{1, 1}));

  EXPECT_EQ(correlation_exact(BitStringSinglet::build(LatticeSize(8), 1)), (Rational{-1, 2}));
  EXPECT_EQ(correlation_exact(BitStringSinglet::build(LatticeSize(64), 32)), (Rational{1, 1}));

  EXPECT_THROW(BitStringSinglet::build(LatticeSize(8), 0), ParameterError);
  EXPECT_THROW(BitStringSinglet::build(LatticeSize(8), 5), ParameterError);
  EXPECT_THROW(a.outcome_pair({9}), ParameterError);
}

TEST(BitStringSinglet, LayoutCountsAndCorrelationMatchBruteForce) {
  for (int N : sizes_to_check()) {
    const int half = N / 2;
    for (int n = 1; n <= half; n += std::max(1, N / 64)) {
      const auto bits = BitStringSinglet::build(LatticeSize(N), n);
      int pp = 0, mm = 0, pm = 0, mp = 0;
      std::int64_t product_sum = 0;
      for (int k = 1; k <= N; ++k) {
        const auto [o1, o2] = bits.outcome_pair({k});
        ASSERT_EQ(o1, k <= half ? 1 : -1);
        ASSERT_EQ(o2, oracle::singlet_row2(N, n, k));
        product_sum += o1 * o2;
        pp += o1 > 0 && o2 > 0;
        mm += o1 < 0 && o2 < 0;
        pm += o1 > 0 && o2 < 0;
        mp += o1 < 0 && o2 > 0;
      }
      ASSERT_EQ(pp, n);
      ASSERT_EQ(mm, n);
      ASSERT_EQ(pm, half - n);
      ASSERT_EQ(mp, half - n);
      ASSERT_EQ(bits.counts().plus_plus, pp);
      ASSERT_EQ(bits.counts().plus_minus, pm);
      // Average of O1*O2 is minus the bell-lattice cosine.
      ASSERT_EQ(Rational::make(product_sum, N), correlation_exact(bits));
      ASSERT_EQ(Rational::make(product_sum, N), Rational::make(-oracle::bell_numerator(N, n), N));
    }
  }
}

TEST(BitStringSinglet, RowOneIndependentOfN) {
  const int N = 32;
  const auto ref = as_ints(BitStringSinglet::build(LatticeSize(N), 1).row1());
  for (int n = 2; n <= N / 2; ++n) {
    EXPECT_EQ(as_ints(BitStringSinglet::build(LatticeSize(N), n).row1()), ref);
  }
}

TEST(Rational, ReducesAndFormats) {
  EXPECT_EQ(Rational::make(6, -8), (Rational{-3, 4}));
  EXPECT_EQ(Rational::make(0, 5), (Rational{0, 1}));
  EXPECT_EQ(Rational::make(-3, 4).to_string(), "-3/4");
  EXPECT_EQ(Rational::make(4, 4).to_string(), "1");
  EXPECT_THROW(Rational::make(1, 0), ParameterError);
}
