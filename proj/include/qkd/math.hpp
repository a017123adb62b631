#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace qkd {

// Binary entropy H1(x) = -x log2 x - (1-x) log2 (1-x), with H1(0) = H1(1) = 0
// by continuity. Exact at the anchors: H1(0) and H1(1) return 0.0, H1(1/2)
// returns 1.0.
inline double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("binary_entropy: argument outside [0,1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// log(exp(a) + exp(b)) without overflow/underflow.
inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double hi = a > b ? a : b;
  double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// log C(n, k) via lgamma.
inline double log_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// Index helpers for tail sums over "i >= x" / "i <= x" with a real-valued x.
// The nudge absorbs round-off when x is meant to be an exact integer
// (e.g. (0.3+0.2)*10 evaluating to 5.0000000000000009).
inline std::int64_t ceil_index(double x) {
  return static_cast<std::int64_t>(std::ceil(x - 1e-9));
}
inline std::int64_t floor_index(double x) {
  return static_cast<std::int64_t>(std::floor(x + 1e-9));
}

}  // namespace qkd
