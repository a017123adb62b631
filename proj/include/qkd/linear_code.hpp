#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qkd/gf2.hpp"
#include "qkd/math.hpp"
#include "qkd/rng.hpp"

namespace qkd {

struct unsupported_code_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary linear block code in parity-check form. min_distance is exact for
// every registered construction; t_capability = floor((min_distance-1)/2).
//
// Decoding returns the coset member nearest to the received word, ties broken
// by the lexicographically smallest error pattern (patterns compared as the
// bit sequence e_0, e_1, ..., e_{l-1}). Two decoders implement that contract:
// a precomputed syndrome table for block lengths up to 24, and a closed-form
// search for the shortened Hamming family at any length (every coset there
// has a representative of weight <= 2).
class LinearCode {
 public:
  enum class Family { Trivial, Hamming, RandomSearched };

  LinearCode(BitMat parity_check, std::size_t min_distance, Family family)
      : parity_check_(std::move(parity_check)),
        min_distance_(min_distance),
        t_capability_(min_distance >= 1 ? (min_distance - 1) / 2 : 0),
        family_(family) {
    if (parity_check_.rows() >= parity_check_.cols() && parity_check_.rows() != 0)
      throw std::invalid_argument("LinearCode: parity check must have r < l");
    if (block_length() <= 24 && parity_check_.rows() <= 22) build_syndrome_table();
  }

  std::size_t block_length() const noexcept { return parity_check_.cols(); }
  std::size_t redundancy() const noexcept { return parity_check_.rows(); }
  std::size_t min_distance() const noexcept { return min_distance_; }
  std::size_t t_capability() const noexcept { return t_capability_; }
  Family family() const noexcept { return family_; }
  const BitMat& parity_check() const noexcept { return parity_check_; }

  bool has_syndrome_table() const noexcept { return !table_.empty() || redundancy() == 0; }

  // Syndrome as packed integer, low row first.
  std::uint32_t syndrome_bits(const BitVec& word) const {
    BitVec s = mat_vec_mul(parity_check_, word);
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.get(i)) v |= 1u << i;
    return v;
  }

  // Error pattern of minimal weight (tie-broken) whose syndrome equals the
  // packed value. Exposed separately so the two decode paths can be
  // cross-checked against each other.
  BitVec coset_leader(std::uint32_t syndrome_value) const {
    if (redundancy() == 0) return BitVec(block_length());
    if (!table_.empty()) {
      BitVec e(block_length());
      std::uint32_t rev = table_[syndrome_value];
      const std::size_t l = block_length();
      for (std::size_t i = 0; i < l; ++i)
        if ((rev >> (l - 1 - i)) & 1u) e.set(i, true);
      return e;
    }
    if (family_ == Family::Hamming) return hamming_leader(syndrome_value);
    throw std::length_error("LinearCode: no decoder for this block length");
  }

 private:
  // Column value of the shortened Hamming check at position j is j+1.
  BitVec hamming_leader(std::uint32_t delta) const {
    const std::size_t l = block_length();
    BitVec e(l);
    if (delta == 0) return e;
    if (delta <= l) {
      e.set(delta - 1, true);
      return e;
    }
    // Weight-2 representatives: positions (i, j) with (i+1)^(j+1) = delta.
    // Lexicographically smallest pattern = largest first position, then
    // largest second position.
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (std::size_t i = 0; i < l; ++i) {
      std::uint32_t partner = (static_cast<std::uint32_t>(i + 1)) ^ delta;
      if (partner == 0 || partner > l) continue;
      std::size_t j = partner - 1;
      if (j <= i) continue;
      if (!best || i > best->first || (i == best->first && j > best->second)) best = {{i, j}};
    }
    if (!best) throw std::logic_error("LinearCode: syndrome unreachable at weight 2");
    e.set(best->first, true);
    e.set(best->second, true);
    return e;
  }

  // Table entry stores the pattern with position i at bit (l-1-i) so that
  // ascending integer enumeration is ascending lexicographic pattern order.
  void build_syndrome_table() {
    const std::size_t l = block_length();
    const std::size_t r = redundancy();
    if (r == 0) return;
    std::vector<std::uint32_t> col_syn(l, 0);
    for (std::size_t j = 0; j < l; ++j) {
      std::uint32_t v = 0;
      for (std::size_t i = 0; i < r; ++i)
        if (parity_check_.get(i, j)) v |= 1u << i;
      col_syn[j] = v;
    }
    const std::size_t table_size = std::size_t{1} << r;
    table_.assign(table_size, 0);
    std::vector<bool> filled(table_size, false);
    std::size_t remaining = table_size;
    filled[0] = true;
    --remaining;
    for (std::size_t w = 1; w <= l && remaining > 0; ++w) {
      // Gosper's hack over reversed-bit masks: ascending order here is
      // ascending lexicographic order of the error pattern.
      std::uint32_t mask = (1u << w) - 1;
      const std::uint32_t limit = l == 32 ? 0xFFFFFFFFu : ((1u << l) - 1);
      while (mask <= limit) {
        std::uint32_t syn = 0;
        std::uint32_t bits = mask;
        while (bits) {
          unsigned b = static_cast<unsigned>(std::countr_zero(bits));
          bits &= bits - 1;
          syn ^= col_syn[l - 1 - b];
        }
        if (!filled[syn]) {
          filled[syn] = true;
          table_[syn] = mask;
          if (--remaining == 0) break;
        }
        std::uint32_t c = mask & static_cast<std::uint32_t>(-static_cast<std::int32_t>(mask));
        std::uint32_t rr = mask + c;
        std::uint32_t next = (((rr ^ mask) >> 2) / c) | rr;
        if (next < mask) break;
        mask = next;
      }
    }
  }

  BitMat parity_check_;
  std::size_t min_distance_;
  std::size_t t_capability_;
  Family family_;
  std::vector<std::uint32_t> table_;
};

namespace detail {

// Exact minimum distance by enumerating the null space of F (Gray order).
// Returns 0 for the degenerate case of an empty null space basis handled by
// callers. early_stop short-circuits as soon as the minimum drops below it.
inline std::size_t exact_min_distance(const BitMat& f, std::size_t early_stop = 0) {
  const std::size_t l = f.cols();
  // Null space basis via elimination on the transposed system.
  std::vector<BitVec> rows;
  for (std::size_t r = 0; r < f.rows(); ++r) rows.push_back(f.row(r));
  std::vector<std::size_t> pivot_col;
  std::size_t rk = 0;
  for (std::size_t c = 0; c < l && rk < rows.size(); ++c) {
    std::size_t p = rk;
    while (p < rows.size() && !rows[p].get(c)) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[rk], rows[p]);
    for (std::size_t rr = 0; rr < rows.size(); ++rr)
      if (rr != rk && rows[rr].get(c)) rows[rr] ^= rows[rk];
    pivot_col.push_back(c);
    ++rk;
  }
  std::vector<bool> is_pivot(l, false);
  for (std::size_t c : pivot_col) is_pivot[c] = true;
  std::vector<BitVec> basis;
  for (std::size_t c = 0; c < l; ++c) {
    if (is_pivot[c]) continue;
    BitVec v(l);
    v.set(c, true);
    for (std::size_t i = 0; i < rk; ++i)
      if (rows[i].get(c)) v.set(pivot_col[i], true);
    basis.push_back(v);
  }
  if (basis.empty()) return l + 1;  // null space is {0}: no nonzero codeword
  if (basis.size() > 26) throw std::length_error("exact_min_distance: enumeration too large");
  std::size_t best = l + 1;
  BitVec acc(l);
  const std::uint64_t total = 1ULL << basis.size();
  for (std::uint64_t j = 1; j < total; ++j) {
    acc ^= basis[static_cast<unsigned>(std::countr_zero(j))];
    best = std::min(best, acc.weight());
    if (early_stop != 0 && best < early_stop) return best;
  }
  return best;
}

inline LinearCode make_trivial(std::size_t l) {
  // r = 0: every word is a codeword, so the minimum distance is 1.
  return LinearCode(BitMat(0, l), 1, LinearCode::Family::Trivial);
}

inline LinearCode make_shortened_hamming(std::size_t l) {
  std::size_t r = 1;
  while ((std::size_t{1} << r) - 1 < l) ++r;
  BitMat f(r, l);
  for (std::size_t j = 0; j < l; ++j) {
    std::uint32_t v = static_cast<std::uint32_t>(j + 1);
    for (std::size_t i = 0; i < r; ++i)
      if ((v >> i) & 1u) f.set(i, j, true);
  }
  // Distinct nonzero columns give d >= 3; columns 1,2,3 are dependent, so
  // d = 3 exactly for l >= 3. Verified by enumeration at desk scale.
  if (l <= 24) {
    std::size_t d = exact_min_distance(f);
    if (d != 3) throw std::logic_error("shortened Hamming: unexpected min distance");
  }
  return LinearCode(std::move(f), 3, LinearCode::Family::Hamming);
}

inline std::optional<LinearCode> try_random_code(std::size_t l, std::size_t t) {
  const std::size_t target = 2 * t + 1;
  if (target > l) return std::nullopt;
  // Fixed internal seed: the registry is a pure function of (l, t).
  Rng rng(0x51D5C0DEULL ^ (static_cast<std::uint64_t>(l) << 8) ^ t);
  // Start near the Gilbert-Varshamov redundancy; below it random checks
  // almost never reach the target distance.
  double log_ball = 0.0;
  {
    double acc = 0.0;
    for (std::size_t i = 0; i <= 2 * t && i <= l; ++i)
      acc += std::exp(log_binomial(static_cast<std::int64_t>(l), static_cast<std::int64_t>(i)));
    log_ball = std::log2(acc);
  }
  std::size_t r_start = static_cast<std::size_t>(std::max(1.0, std::floor(log_ball) - 2.0));
  // Cap r so every registered code keeps a syndrome table (decodability).
  for (std::size_t r = std::min(r_start, l - 1); r < l && r <= 22; ++r) {
    for (int attempt = 0; attempt < 400; ++attempt) {
      BitMat f = sample_random_matrix(r, l, rng);
      if (rank(f) != r) continue;
      std::size_t d = exact_min_distance(f, target);
      if (d >= target && d <= l) return LinearCode(std::move(f), d, LinearCode::Family::RandomSearched);
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Construction registry. Supported: t = 0 at any length, t = 1 (shortened
// Hamming) at any length >= 3, and exhaustively verified random codes for
// l <= 24, t <= 3. Anything else raises unsupported_code_error; callers
// treat that as a failed session rather than guessing a weaker code.
inline LinearCode build_code(std::size_t l, std::size_t t) {
  if (l == 0) throw unsupported_code_error("build_code: empty block");
  if (t == 0) return detail::make_trivial(l);
  if (t == 1 && l >= 3) return detail::make_shortened_hamming(l);
  if (l <= 24 && t <= 3) {
    static std::mutex mu;
    static std::map<std::pair<std::size_t, std::size_t>, LinearCode> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({l, t});
    if (it != cache.end()) return it->second;
    if (auto code = detail::try_random_code(l, t)) {
      cache.emplace(std::make_pair(l, t), *code);
      return *code;
    }
  }
  throw unsupported_code_error("build_code: no construction for l=" + std::to_string(l) +
                               ", t=" + std::to_string(t));
}

inline BitVec syndrome(const LinearCode& code, const BitVec& word) {
  if (word.size() != code.block_length())
    throw std::invalid_argument("syndrome: word length mismatch");
  return mat_vec_mul(code.parity_check(), word);
}

// Nearest coset member to `received` subject to F h' = target_syndrome.
// If the true error count is within t_capability this recovers the unique
// coset member at that distance.
inline BitVec decode_to_coset(const LinearCode& code, const BitVec& received,
                              const BitVec& target_syndrome) {
  if (received.size() != code.block_length())
    throw std::invalid_argument("decode_to_coset: word length mismatch");
  if (target_syndrome.size() != code.redundancy())
    throw std::invalid_argument("decode_to_coset: syndrome length mismatch");
  std::uint32_t target = 0;
  for (std::size_t i = 0; i < target_syndrome.size(); ++i)
    if (target_syndrome.get(i)) target |= 1u << i;
  std::uint32_t delta = code.syndrome_bits(received) ^ target;
  BitVec out = received;
  out ^= code.coset_leader(delta);
  return out;
}

// Redundancy of an ideal Shannon-limit code: l * H1(delta). Used only by the
// asymptotic rate formulas, never by actual decoding.
inline double shannon_redundancy(std::size_t l, double delta) {
  if (!(delta >= 0.0 && delta <= 0.5))
    throw std::domain_error("shannon_redundancy: delta outside [0, 1/2]");
  return static_cast<double>(l) * binary_entropy(delta);
}

}  // namespace qkd
