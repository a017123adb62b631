#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "qkd/math.hpp"

namespace qkd {

// Inputs of the finite-size security bounds. m_max is the assumed bound on
// the number of multi-photon signals among the N pulses.
struct BoundInputs {
  std::int64_t N = 0;
  std::int64_t m = 1;
  double delta = 0.0;
  double r_min = 0.0;
  double p_R = 0.0;
  double tau_ec = 0.0;
  double tau_f = 0.0;
  double tau_M = 0.0;
  double tau_hat = 0.0;
  double tau_p = 0.0;
  double m_max = 0.0;

  void validate() const {
    if (N < 1) throw std::invalid_argument("BoundInputs: N must be >= 1");
    if (m < 1) throw std::invalid_argument("BoundInputs: m must be >= 1");
    if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("BoundInputs: delta outside [0,1)");
    if (!(tau_ec > 0.0 && delta + tau_ec < 1.0))
      throw std::invalid_argument("BoundInputs: need 0 < tau_ec and delta+tau_ec < 1");
    if (!(tau_f > 0.0 && delta + tau_f < 1.0))
      throw std::invalid_argument("BoundInputs: need 0 < tau_f and delta+tau_f < 1");
    if (!(p_R > 0.0 && p_R <= 0.5)) throw std::invalid_argument("BoundInputs: p_R outside (0,1/2]");
    if (!(tau_M > 0.0)) throw std::invalid_argument("BoundInputs: tau_M must be positive");
    if (!(tau_hat > 0.0 && tau_hat < (1.0 - p_R) / 2.0))
      throw std::invalid_argument("BoundInputs: tau_hat outside (0,(1-p_R)/2)");
    if (!(tau_p > 0.0 && tau_p < 1.0)) throw std::invalid_argument("BoundInputs: tau_p outside (0,1)");
    if (!(r_min > 0.0 && r_min < 1.0)) throw std::invalid_argument("BoundInputs: r_min outside (0,1)");
    if (!(r_min * static_cast<double>(N) > m_max))
      throw std::invalid_argument("BoundInputs: r_min N must exceed m_max");
  }
};

// log g for an arbitrary signal count in place of r_min N; the printed bound
// uses r_min N, the observed-n variant is exposed for sensitivity studies.
inline double log_g_func_at(const BoundInputs& in, double n_value) {
  const double den = 2.0 * in.delta + in.tau_f;
  return -(1.0 / den) * in.tau_f * in.tau_f * (in.p_R * in.p_R / 4.0) * n_value +
         2.0 * (in.tau_f / den) * (in.tau_f / den);
}

inline double log_g_func(const BoundInputs& in) {
  return log_g_func_at(in, in.r_min * static_cast<double>(in.N));
}

inline double g_func(const BoundInputs& in) { return std::exp(log_g_func(in)); }

// h = 2 g^{1/4} + g^{1/2}, evaluated from log g so huge N cannot underflow
// intermediate values.
inline double log_h_from_log_g(double log_g) {
  return log_add_exp(std::log(2.0) + log_g / 4.0, log_g / 2.0);
}

inline double h_func(const BoundInputs& in) { return std::exp(log_h_from_log_g(log_g_func(in))); }

struct Epsilon1Breakdown {
  double value = 0.0;      // epsilon_1(N, m)
  double log_value = 0.0;  // natural log, exact even when value underflows
  double g = 0.0;
  double h = 0.0;
  double smooth_main = 0.0;   // 2 (m + 1/ln 2) h
  double smooth_cross = 0.0;  // 2 sqrt(2 (m + 1/ln 2) m h)
  // The four additive tail terms (without the leading factor m).
  double tail_multiphoton = 0.0;  // e^{-2 tau_M^2 N}
  double tail_singles = 0.0;      // e^{-2 tau_hat^2 (r_min N - M_max)}
  double tail_privacy = 0.0;      // 2^{-tau_p ((1-p_R)/2 - tau_hat)(r_min N - M_max)}
  double tail_sqrt_g = 0.0;       // sqrt(g)
};

inline Epsilon1Breakdown epsilon1_at(const BoundInputs& in, double n_value) {
  in.validate();
  const double surplus = in.r_min * static_cast<double>(in.N) - in.m_max;
  if (!(surplus > 0.0)) throw std::invalid_argument("epsilon1: r_min N must exceed m_max");
  const double m = static_cast<double>(in.m);
  const double ln2 = std::log(2.0);
  const double mc = m + 1.0 / ln2;

  Epsilon1Breakdown out;
  const double log_g = log_g_func_at(in, n_value);
  const double log_h = log_h_from_log_g(log_g);
  out.g = std::exp(log_g);
  out.h = std::exp(log_h);

  const double log_main = std::log(2.0 * mc) + log_h;
  const double log_cross = std::log(2.0) + 0.5 * (std::log(2.0 * mc) + std::log(m) + log_h);
  const double log_tail_m = -2.0 * in.tau_M * in.tau_M * static_cast<double>(in.N);
  const double log_tail_hat = -2.0 * in.tau_hat * in.tau_hat * surplus;
  const double log_tail_p = -in.tau_p * ((1.0 - in.p_R) / 2.0 - in.tau_hat) * surplus * ln2;
  const double log_tail_g = 0.5 * log_g;

  out.smooth_main = std::exp(log_main);
  out.smooth_cross = std::exp(log_cross);
  out.tail_multiphoton = std::exp(log_tail_m);
  out.tail_singles = std::exp(log_tail_hat);
  out.tail_privacy = std::exp(log_tail_p);
  out.tail_sqrt_g = std::exp(log_tail_g);

  double log_sum = log_add_exp(log_main, log_cross);
  const double log_m = std::log(m);
  log_sum = log_add_exp(log_sum, log_m + log_tail_m);
  log_sum = log_add_exp(log_sum, log_m + log_tail_hat);
  log_sum = log_add_exp(log_sum, log_m + log_tail_p);
  log_sum = log_add_exp(log_sum, log_m + log_tail_g);
  out.log_value = log_sum;
  out.value = std::exp(log_sum);
  return out;
}

inline Epsilon1Breakdown epsilon1(const BoundInputs& in) {
  return epsilon1_at(in, in.r_min * static_cast<double>(in.N));
}

// log of the epsilon_2 objective at a fixed tau_Omega in (0, 1/2).
inline double epsilon2_objective_log(const BoundInputs& in, double tau_omega) {
  const double den = 2.0 * in.delta + in.tau_ec;
  const double rn = in.r_min * static_cast<double>(in.N);
  const double e1 = -(1.0 / den) * in.tau_ec * in.tau_ec * in.p_R * in.p_R * (0.5 - tau_omega) * rn +
                    2.0 * (in.tau_ec / den) * (in.tau_ec / den);
  const double e2 = -2.0 * tau_omega * tau_omega * rn;
  return log_add_exp(e1, e2);
}

struct Epsilon2Result {
  double value = 0.0;
  double log_value = 0.0;
  double minimizer = 0.0;  // tau_Omega achieving the minimum
};

// Minimises the two-term bound over tau_Omega: a coarse scan brackets the
// global basin, then golden-section refines to 1e-12 interval width.
inline Epsilon2Result epsilon2(const BoundInputs& in) {
  in.validate();
  const double lo_limit = 1e-9, hi_limit = 0.5 - 1e-9;
  const int scan_points = 4097;
  double best_x = lo_limit;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scan_points; ++i) {
    double x = lo_limit + (hi_limit - lo_limit) * static_cast<double>(i) / (scan_points - 1);
    double f = epsilon2_objective_log(in, x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  const double cell = (hi_limit - lo_limit) / (scan_points - 1);
  double a = std::max(lo_limit, best_x - 2.0 * cell);
  double b = std::min(hi_limit, best_x + 2.0 * cell);
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = epsilon2_objective_log(in, c);
  double fd = epsilon2_objective_log(in, d);
  while (b - a > 1e-12) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = epsilon2_objective_log(in, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = epsilon2_objective_log(in, d);
    }
  }
  Epsilon2Result out;
  out.minimizer = 0.5 * (a + b);
  out.log_value = epsilon2_objective_log(in, out.minimizer);
  if (best_f < out.log_value) {  // scan already at the optimum cell edge
    out.log_value = best_f;
    out.minimizer = best_x;
  }
  out.value = std::exp(out.log_value);
  return out;
}

// Error-sampling bound f(delta, epsilon, p_A, p_B, s) =
// exp[-eps^2 min(p_A,p_B)^2 s / (2 delta + eps) + 2 (eps/(2 delta+eps))^2].
inline double hoeffding_f(double delta, double epsilon, double p_a, double p_b, double s) {
  if (!(delta > 0.0 && delta + epsilon < 1.0 && epsilon > 0.0))
    throw std::domain_error("hoeffding_f: need 0 < delta < delta+epsilon < 1");
  if (!(p_a > 0.0 && p_a <= 1.0 && p_b > 0.0 && p_b <= 1.0))
    throw std::domain_error("hoeffding_f: probabilities outside (0,1]");
  if (!(s >= 1.0)) throw std::domain_error("hoeffding_f: s must be >= 1");
  const double den = 2.0 * delta + epsilon;
  const double pm = std::min(p_a, p_b);
  return std::exp(-(1.0 / den) * epsilon * epsilon * pm * pm * s +
                  2.0 * (epsilon / den) * (epsilon / den));
}

struct MMaxResult {
  double m_max = 0.0;               // (p_M + tau_M) N, real-valued
  double failure_probability = 0.0; // e^{-2 tau_M^2 N}
};

inline MMaxResult m_max_signals(double p_m_bound, double tau_m, double n_signals) {
  if (!(p_m_bound >= 0.0 && tau_m >= 0.0 && p_m_bound + tau_m < 1.0))
    throw std::domain_error("m_max_signals: need 0 <= p_M + tau_M < 1");
  MMaxResult out;
  out.m_max = (p_m_bound + tau_m) * n_signals;
  out.failure_probability = std::exp(-2.0 * tau_m * tau_m * n_signals);
  return out;
}

struct KeyFractionResult {
  double value = 0.0;
  bool multiphoton_dominated = false;  // p_D <= p_M
  bool entropy_arg_clamped = false;    // inner H1 argument above 1/2
  bool negative_clamped = false;       // formula value below 0
};

// Asymptotic secure bits per sifted bit:
// m/l = (1 - p_M/p_D)[1 - H1(2 delta / (1 - p_M/p_D))] - H1(delta),
// clamped to 0 whenever the formula leaves its domain.
inline KeyFractionResult asymptotic_key_fraction(double delta, double p_m, double p_d) {
  if (!(delta >= 0.0 && delta <= 0.5))
    throw std::domain_error("asymptotic_key_fraction: delta outside [0,1/2]");
  if (!(p_m >= 0.0 && p_d >= 0.0))
    throw std::domain_error("asymptotic_key_fraction: negative probability");
  KeyFractionResult out;
  if (p_d <= p_m) {
    out.multiphoton_dominated = true;
    return out;
  }
  const double single_fraction = 1.0 - p_m / p_d;
  const double arg = 2.0 * delta / single_fraction;
  if (arg > 0.5) {
    out.entropy_arg_clamped = true;
    return out;
  }
  double v = single_fraction * (1.0 - binary_entropy(arg)) - binary_entropy(delta);
  if (v < 0.0) {
    out.negative_clamped = true;
    return out;
  }
  out.value = v;
  return out;
}

struct GainRates {
  double m_per_l = 0.0;  // secure bits per sifted bit
  double l_per_n = 0.0;  // sifted bits per sent signal: (1-p_R)/2 p_D
  double m_per_signal = 0.0;   // m/N = m_per_l * l_per_n
  double m_per_detected = 0.0; // m/n = m_per_l * (1-p_R)/2
  KeyFractionResult fraction;
};

inline GainRates gain_rates(double delta, double p_m, double p_d, double p_r) {
  if (!(p_r >= 0.0 && p_r <= 0.5)) throw std::domain_error("gain_rates: p_R outside [0,1/2]");
  GainRates out;
  out.fraction = asymptotic_key_fraction(delta, p_m, p_d);
  out.m_per_l = out.fraction.value;
  out.l_per_n = (1.0 - p_r) / 2.0 * p_d;
  out.m_per_signal = out.m_per_l * out.l_per_n;
  out.m_per_detected = out.m_per_l * (1.0 - p_r) / 2.0;
  return out;
}

// Source-statistics ceiling on the gain per sent signal.
inline double g_bound(double p_d, double p_m) {
  double v = 0.5 * (p_d - p_m);
  return v > 0.0 ? v : 0.0;
}

// Minimal transmission efficiency under Poissonian statistics and detector
// dark counts; below it no secure distance remains.
inline double f_wcp(double d_b, double eta_b) {
  if (!(eta_b > 0.0)) throw std::domain_error("f_wcp: detector efficiency must be positive");
  if (!(d_b >= 0.0)) throw std::domain_error("f_wcp: negative dark count");
  return 2.0 * std::sqrt(d_b) / eta_b;
}

// The size/rate validation constraint, shared verbatim by the protocol
// validation test and the maximal-m solver.
struct SizeRateCheck {
  double l_hat_min = 0.0;
  double h1_argument = 0.0;  // 2 (delta+tau_f) ((1-p_R)/2) n / l_hat_min
  double bracket = 0.0;      // l_hat_min [1 - H1(arg) - tau_p]
  bool half_ok = false;      // l_hat_min / 2 >= (delta+tau_f)(1-p_R) n
  bool ok = false;           // half_ok and m + r <= bracket
};

inline SizeRateCheck check_size_rate(double n, double m, double r, double delta, double tau_f,
                                     double tau_hat, double tau_p, double p_r, double m_max) {
  SizeRateCheck out;
  out.l_hat_min = ((1.0 - p_r) / 2.0 - tau_hat) * (n - m_max);
  const double rhs = (delta + tau_f) * (1.0 - p_r) * n;
  out.half_ok = out.l_hat_min / 2.0 >= rhs;
  if (out.l_hat_min > 0.0) {
    out.h1_argument = rhs / out.l_hat_min;
    if (out.half_ok) {
      out.bracket = out.l_hat_min * (1.0 - binary_entropy(out.h1_argument) - tau_p);
      out.ok = m + r <= out.bracket;
    }
  }
  return out;
}

// Largest key length m satisfying the size/rate constraint at the expected
// detection count, with the code redundancy taken at the Shannon limit
// r = l H1(delta), l = (1-p_R)/2 n. Returns 0 when infeasible.
inline std::int64_t max_secure_m(const BoundInputs& in, double expected_n) {
  const double l_expected = (1.0 - in.p_R) / 2.0 * expected_n;
  const double r = l_expected * binary_entropy(std::min(in.delta, 0.5));
  SizeRateCheck probe =
      check_size_rate(expected_n, 0.0, r, in.delta, in.tau_f, in.tau_hat, in.tau_p, in.p_R, in.m_max);
  if (!(probe.l_hat_min > 0.0) || !probe.half_ok) return 0;
  double m_real = probe.bracket - r;
  if (!(m_real > 0.0)) return 0;
  return static_cast<std::int64_t>(std::floor(m_real));
}

}  // namespace qkd
