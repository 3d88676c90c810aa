#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "istsim/geometry.hpp"

namespace istsim {

// Position k in {1..N} on a bit string.
struct TrajectoryIndex {
  int k = 1;
};

// Reduced fraction with positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;
  bool operator==(const Rational&) const = default;
};

// L_{1xN}: N-(2n-1) entries +1 and 2n-1 entries -1. Phase index l orders
// the entries: l = 0 is the canonical order (+1 block first), l > 0 is that
// order cyclically shifted right by l. The shift is a stand-in; the
// underlying theory fixes only the composition, not the phase-to-order map.
class BitStringSingle {
 public:
  static BitStringSingle build(LatticeSize size, int n, int l = 0);

  int size() const { return static_cast<int>(entries_.size()); }
  int n() const { return n_; }
  int phase() const { return l_; }
  int plus_count() const { return plus_; }
  int minus_count() const { return size() - plus_; }
  std::span<const std::int8_t> entries() const { return entries_; }

  int outcome(TrajectoryIndex k) const;
  // Exact mean of the entries; equals the lattice cosine for n.
  Rational mean() const { return Rational::make(2 * std::int64_t{plus_} - size(), size()); }
  std::string to_text() const;

  BitStringSingle() = default;

 private:
  std::vector<std::int8_t> entries_;
  int n_ = 0;
  int l_ = 0;
  int plus_ = 0;
};

struct ColumnCounts {
  int plus_plus = 0;
  int minus_minus = 0;
  int plus_minus = 0;
  int minus_plus = 0;
};

// L_{2xN} for the singlet: row 1 is N/2 (+1) then N/2 (-1); row 2 is
// n (+1), N/2-n (-1), n (-1), N/2-n (+1).
class BitStringSinglet {
 public:
  static BitStringSinglet build(LatticeSize size, int n);

  int size() const { return static_cast<int>(row1_.size()); }
  int n() const { return n_; }
  std::span<const std::int8_t> row1() const { return row1_; }
  std::span<const std::int8_t> row2() const { return row2_; }
  const ColumnCounts& counts() const { return counts_; }

  std::pair<int, int> outcome_pair(TrajectoryIndex k) const;
  std::string to_text() const;

  BitStringSinglet() = default;

 private:
  std::vector<std::int8_t> row1_, row2_;
  int n_ = 0;
  ColumnCounts counts_;
};

// Correlation (pp + mm - pm - mp)/N from the column counts; (4n - N)/N.
Rational correlation_exact(const BitStringSinglet& bits);

}  // namespace istsim
