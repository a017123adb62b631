#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qkd/rng.hpp"

namespace qkd {

// Dense GF(2) vector, bit-packed into 64-bit words. Bit i lives at word i/64,
// bit position i%64. Trailing pad bits of the last word are kept at zero so
// whole-word XOR and popcount are always valid.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t length) : len_(length), words_(word_count(length), 0) {}

  static BitVec from_bits(std::initializer_list<int> bits) {
    BitVec v(bits.size());
    std::size_t i = 0;
    for (int b : bits) v.set(i++, b != 0);
    return v;
  }

  static BitVec from_string(std::string_view s) {
    BitVec v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] != '0' && s[i] != '1') throw std::invalid_argument("BitVec: expected '0'/'1'");
      v.set(i, s[i] == '1');
    }
    return v;
  }

  std::size_t size() const noexcept { return len_; }
  bool empty() const noexcept { return len_ == 0; }

  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1ULL;
  }
  void set(std::size_t i, bool value) {
    std::uint64_t mask = 1ULL << (i & 63);
    if (value)
      words_[i >> 6] |= mask;
    else
      words_[i >> 6] &= ~mask;
  }
  void flip(std::size_t i) { words_[i >> 6] ^= 1ULL << (i & 63); }

  BitVec& operator^=(const BitVec& other) {
    if (other.len_ != len_) throw std::invalid_argument("BitVec xor: length mismatch");
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
    return *this;
  }
  friend BitVec operator^(BitVec a, const BitVec& b) { return a ^= b; }

  bool operator==(const BitVec&) const = default;

  std::size_t weight() const noexcept {
    std::size_t c = 0;
    for (std::uint64_t w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  std::string to_string() const {
    std::string s(len_, '0');
    for (std::size_t i = 0; i < len_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }

  // Pad-bit invariant; every mutating path preserves it by construction, the
  // tests assert it after randomized operations.
  bool normalized() const noexcept {
    if (len_ % 64 == 0 || words_.empty()) return true;
    return (words_.back() & ~last_word_mask(len_)) == 0;
  }

  static std::size_t word_count(std::size_t bits) { return (bits + 63) / 64; }
  static std::uint64_t last_word_mask(std::size_t bits) {
    std::size_t r = bits % 64;
    return r == 0 ? ~0ULL : ((1ULL << r) - 1);
  }

 private:
  std::size_t len_ = 0;
  std::vector<std::uint64_t> words_;
};

inline std::size_t hamming_weight(const BitVec& v) noexcept { return v.weight(); }

inline std::size_t hamming_distance(const BitVec& u, const BitVec& v) {
  if (u.size() != v.size()) throw std::invalid_argument("hamming_distance: length mismatch");
  std::size_t c = 0;
  auto uw = u.words(), vw = v.words();
  for (std::size_t i = 0; i < uw.size(); ++i)
    c += static_cast<std::size_t>(std::popcount(uw[i] ^ vw[i]));
  return c;
}

// Dense GF(2) matrix, row-major, each row bit-packed like BitVec.
class BitMat {
 public:
  BitMat() = default;
  BitMat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), wpr_(BitVec::word_count(cols)), words_(rows * wpr_, 0) {}

  static BitMat identity(std::size_t n) {
    BitMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
  }

  static BitMat from_rows(std::initializer_list<std::initializer_list<int>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    BitMat m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw std::invalid_argument("BitMat: ragged rows");
      std::size_t j = 0;
      for (int b : row) m.set(i, j++, b != 0);
      ++i;
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  bool get(std::size_t r, std::size_t c) const {
    return (words_[r * wpr_ + (c >> 6)] >> (c & 63)) & 1ULL;
  }
  void set(std::size_t r, std::size_t c, bool value) {
    std::uint64_t mask = 1ULL << (c & 63);
    if (value)
      words_[r * wpr_ + (c >> 6)] |= mask;
    else
      words_[r * wpr_ + (c >> 6)] &= ~mask;
  }

  std::span<const std::uint64_t> row_words(std::size_t r) const {
    return {words_.data() + r * wpr_, wpr_};
  }
  std::span<std::uint64_t> row_words(std::size_t r) { return {words_.data() + r * wpr_, wpr_}; }

  BitVec row(std::size_t r) const {
    BitVec v(cols_);
    auto src = row_words(r);
    std::copy(src.begin(), src.end(), v.words().begin());
    return v;
  }
  void set_row(std::size_t r, const BitVec& v) {
    if (v.size() != cols_) throw std::invalid_argument("BitMat::set_row: length mismatch");
    auto dst = row_words(r);
    std::copy(v.words().begin(), v.words().end(), dst.begin());
  }

  bool operator==(const BitMat&) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0, wpr_ = 0;
  std::vector<std::uint64_t> words_;
};

// result_i = sum_j M_ij v_j (mod 2).
inline BitVec mat_vec_mul(const BitMat& m, const BitVec& v) {
  if (v.size() != m.cols()) throw std::invalid_argument("mat_vec_mul: dimension mismatch");
  BitVec out(m.rows());
  auto vw = v.words();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto rw = m.row_words(r);
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < rw.size(); ++w) acc ^= rw[w] & vw[w];
    out.set(r, (std::popcount(acc) & 1) != 0);
  }
  return out;
}

// GF(2) row rank via elimination on a scratch copy.
inline std::size_t rank(const BitMat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  std::vector<BitVec> rows;
  rows.reserve(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(m.row(r));
  std::size_t rk = 0;
  for (std::size_t c = 0; c < m.cols() && rk < rows.size(); ++c) {
    std::size_t pivot = rk;
    while (pivot < rows.size() && !rows[pivot].get(c)) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[rk], rows[pivot]);
    for (std::size_t r = rk + 1; r < rows.size(); ++r)
      if (rows[r].get(c)) rows[r] ^= rows[rk];
    ++rk;
  }
  return rk;
}

// Keeps the given columns (ascending index order), preserves rows.
inline BitMat column_submatrix(const BitMat& m, std::span<const std::size_t> keep) {
  std::vector<std::size_t> idx(keep.begin(), keep.end());
  std::sort(idx.begin(), idx.end());
  if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
    throw std::invalid_argument("column_submatrix: duplicate column index");
  for (std::size_t c : idx)
    if (c >= m.cols()) throw std::invalid_argument("column_submatrix: column index out of range");
  BitMat out(m.rows(), idx.size());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t j = 0; j < idx.size(); ++j)
      if (m.get(r, idx[j])) out.set(r, j, true);
  return out;
}

// Exact minimum Hamming weight of u^T F + v^T K over all u in {0,1}^r and
// v in {0,1}^m \ {0}. Sentinel cols+1 when K has no rows (no combination
// exists); strictly above any achievable weight, so comparisons stay total.
// Gray-code order over the stacked rows costs one row-XOR per step.
inline std::size_t min_weight_combined(const BitMat& f_hat, const BitMat& k_hat) {
  if (f_hat.cols() != k_hat.cols())
    throw std::invalid_argument("min_weight_combined: column count mismatch");
  const std::size_t r = f_hat.rows(), m = k_hat.rows(), cols = f_hat.cols();
  if (m == 0) return cols + 1;
  if (r + m > 24)
    throw std::length_error("min_weight_combined: too large for exhaustive search (rows > 24)");

  std::vector<BitVec> stacked;
  stacked.reserve(r + m);
  for (std::size_t i = 0; i < r; ++i) stacked.push_back(f_hat.row(i));
  for (std::size_t i = 0; i < m; ++i) stacked.push_back(k_hat.row(i));

  BitVec acc(cols);
  std::size_t best = cols + 1;
  const std::uint64_t total = 1ULL << (r + m);
  const std::uint64_t v_mask = ((1ULL << m) - 1) << r;
  for (std::uint64_t j = 1; j < total; ++j) {
    unsigned flip = static_cast<unsigned>(std::countr_zero(j));
    acc ^= stacked[flip];
    std::uint64_t gray = j ^ (j >> 1);
    if ((gray & v_mask) != 0) best = std::min(best, acc.weight());
  }
  return best;
}

// Uniform random matrix from the supplied generator; entries are drawn 64 at
// a time in row-major order.
inline BitMat sample_random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  BitMat m(rows, cols);
  const std::uint64_t tail = BitVec::last_word_mask(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto words = m.row_words(r);
    for (std::size_t w = 0; w < words.size(); ++w) words[w] = rng.next_u64();
    if (!words.empty()) words.back() &= tail;
  }
  return m;
}

}  // namespace qkd
