#include "istsim/bitstring.hpp"

#include <algorithm>
#include <numeric>

#include "istsim/errors.hpp"

namespace istsim {

namespace {

void check_k(TrajectoryIndex k, int size) {
  if (k.k < 1 || k.k > size) {
    throw ParameterError("trajectory index k=" + std::to_string(k.k) + " outside {1.." +
                         std::to_string(size) + "}");
  }
}

std::string render(std::span<const std::int8_t> row) {
  std::string s;
  s.reserve(row.size());
  for (std::int8_t e : row) s.push_back(e > 0 ? '+' : '-');
  return s;
}

}  // namespace

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw ParameterError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  return Rational{num / g, den / g};
}

std::string Rational::to_string() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

BitStringSingle BitStringSingle::build(LatticeSize size, int n, int l) {
  const int N = size.value();
  if (n < 1 || n > size.half()) {
    throw ParameterError("bit string index n=" + std::to_string(n) + " outside {1.." +
                         std::to_string(size.half()) + "}");
  }
  if (l < 0 || l > N) {
    throw ParameterError("phase index l=" + std::to_string(l) + " outside {0.." +
                         std::to_string(N) + "}");
  }
  BitStringSingle bits;
  bits.n_ = n;
  bits.l_ = l;
  bits.plus_ = N - (2 * n - 1);
  bits.entries_.assign(static_cast<std::size_t>(N), std::int8_t{-1});
  std::fill_n(bits.entries_.begin(), bits.plus_, std::int8_t{1});
  const int shift = l % N;
  if (shift != 0) {
    std::rotate(bits.entries_.rbegin(), bits.entries_.rbegin() + shift, bits.entries_.rend());
  }
  return bits;
}

int BitStringSingle::outcome(TrajectoryIndex k) const {
  check_k(k, size());
  return entries_[static_cast<std::size_t>(k.k - 1)];
}

std::string BitStringSingle::to_text() const { return render(entries_); }

BitStringSinglet BitStringSinglet::build(LatticeSize size, int n) {
  const int N = size.value();
  const int half = size.half();
  if (n < 1 || n > half) {
    throw ParameterError("singlet index n=" + std::to_string(n) + " outside {1.." +
                         std::to_string(half) + "}");
  }
  BitStringSinglet bits;
  bits.n_ = n;
  bits.row1_.assign(static_cast<std::size_t>(N), std::int8_t{-1});
  std::fill_n(bits.row1_.begin(), half, std::int8_t{1});

  bits.row2_.resize(static_cast<std::size_t>(N));
  auto it = bits.row2_.begin();
  it = std::fill_n(it, n, std::int8_t{1});
  it = std::fill_n(it, half - n, std::int8_t{-1});
  it = std::fill_n(it, n, std::int8_t{-1});
  std::fill_n(it, half - n, std::int8_t{1});

  bits.counts_ = ColumnCounts{n, n, half - n, half - n};
  return bits;
}

std::pair<int, int> BitStringSinglet::outcome_pair(TrajectoryIndex k) const {
  check_k(k, size());
  const auto i = static_cast<std::size_t>(k.k - 1);
  return {row1_[i], row2_[i]};
}

std::string BitStringSinglet::to_text() const { return render(row1_) + "\n" + render(row2_); }

Rational correlation_exact(const BitStringSinglet& bits) {
  const ColumnCounts& c = bits.counts();
  const std::int64_t agree = std::int64_t{c.plus_plus} + c.minus_minus;
  const std::int64_t disagree = std::int64_t{c.plus_minus} + c.minus_plus;
  return Rational::make(agree - disagree, bits.size());
}

}  // namespace istsim
