#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qkd/bounds.hpp"
#include "qkd/gf2.hpp"
#include "qkd/linear_code.hpp"
#include "qkd/photonics.hpp"
#include "qkd/rng.hpp"

namespace qkd {

// Pre-agreed parameters and security constants of a session.
struct ProtocolConfig {
  std::int64_t m = 0;       // private key length in bits
  std::int64_t N = 0;       // number of quantum signals (security parameter)
  double delta = 0.0;       // error-rate threshold of the validation test
  double r_min = 0.0;       // minimum detection rate
  double p_R = 0.0;         // per-index reveal probability
  double tau_ec = 0.0;
  double tau_f = 0.0;
  double tau_M = 0.0;
  double tau_hat = 0.0;
  double tau_p = 0.0;
  double p_M_bound = 0.0;   // assumed multi-photon probability of the source

  // M_max = ceil((p_M + tau_M) N); the ceiling is conservative (it shrinks
  // the single-photon floor l_hat_min).
  double m_max() const { return std::ceil((p_M_bound + tau_M) * static_cast<double>(N)); }

  void validate() const {
    if (N < 1) throw std::invalid_argument("ProtocolConfig: N must be >= 1");
    if (m < 0) throw std::invalid_argument("ProtocolConfig: m must be >= 0");
    if (!(delta >= 0.0)) throw std::invalid_argument("ProtocolConfig: delta must be >= 0");
    if (!(tau_ec > 0.0 && delta + tau_ec < 1.0))
      throw std::invalid_argument("ProtocolConfig: need 0 < tau_ec, delta+tau_ec < 1");
    if (!(tau_f > 0.0 && delta + tau_f < 1.0))
      throw std::invalid_argument("ProtocolConfig: need 0 < tau_f, delta+tau_f < 1");
    if (!(p_R > 0.0 && p_R <= 0.5)) throw std::invalid_argument("ProtocolConfig: p_R outside (0,1/2]");
    if (!(tau_M > 0.0)) throw std::invalid_argument("ProtocolConfig: tau_M must be positive");
    if (!(tau_hat > 0.0 && tau_hat < (1.0 - p_R) / 2.0))
      throw std::invalid_argument("ProtocolConfig: tau_hat outside (0,(1-p_R)/2)");
    if (!(tau_p > 0.0 && tau_p < 1.0)) throw std::invalid_argument("ProtocolConfig: tau_p outside (0,1)");
    if (!(p_M_bound >= 0.0 && p_M_bound < 1.0))
      throw std::invalid_argument("ProtocolConfig: p_M_bound outside [0,1)");
    if (!(r_min > m_max() / static_cast<double>(N) && r_min < 1.0))
      throw std::invalid_argument("ProtocolConfig: need M_max/N < r_min < 1");
  }

  BoundInputs bound_inputs() const {
    BoundInputs b;
    b.N = N;
    b.m = m > 0 ? m : 1;
    b.delta = delta;
    b.r_min = r_min;
    b.p_R = p_R;
    b.tau_ec = tau_ec;
    b.tau_f = tau_f;
    b.tau_M = tau_M;
    b.tau_hat = tau_hat;
    b.tau_p = tau_p;
    b.m_max = m_max();
    return b;
  }
};

struct EveStrategy {
  enum class Kind { None, InterceptResend, PhotonNumberSplitting };
  Kind kind = Kind::None;
  double fraction = 0.0;  // intercepted fraction / blocked single-photon fraction

  static EveStrategy none() { return {}; }
  static EveStrategy intercept_resend(double f) { return {Kind::InterceptResend, f}; }
  static EveStrategy pns(double block_fraction) {
    return {Kind::PhotonNumberSplitting, block_fraction};
  }

  void validate() const {
    if (!(fraction >= 0.0 && fraction <= 1.0))
      throw std::invalid_argument("EveStrategy: fraction outside [0,1]");
  }
};

struct SessionModels {
  SourceModel source;
  ChannelModel channel;
  DetectorModel detector;

  void validate() const {
    source.validate();
    channel.validate();
    detector.validate();
  }
};

// What Eve learned about one pulse. `deterministic` marks bits she knows
// with certainty (matching-basis intercepts and stored split-off photons).
struct EveTap {
  std::uint32_t index = 0;
  Basis basis = Basis::Rect;
  bool bit = false;
  bool deterministic = false;
};

struct ValidationReport {
  std::int64_t n = 0;           // |D|
  std::size_t omega_size = 0;   // |Omega|
  std::size_t tested_size = 0;  // |T|
  std::size_t sifted_size = 0;  // l = |E|
  double expected_test_size = 0.0;  // |Omega| p_R, the basis of the d threshold
  double l_hat_min = 0.0;
  double h1_argument = 0.0;
  double size_bracket = 0.0;
  std::size_t test_errors = 0;
  double d_threshold = 0.0;     // delta |Omega| p_R
  std::size_t code_redundancy = 0;
  bool code_available = false;
  bool cond_detection_rate = false;
  bool cond_size_rate = false;
  bool cond_error_count = false;
  bool passed = false;
};

enum class Phase { Fresh, QuantumDone, ClassicalDone, Validated, KeysExtracted };

// The complete classical record of one session plus the ground truth only a
// simulator can see (per-pulse photon counts, Eve's notebook).
struct Transcript {
  std::int64_t N = 0;
  Phase phase = Phase::Fresh;

  std::vector<Basis> alice_basis;  // a
  std::vector<Basis> bob_basis;    // b
  BitVec alice_bits;               // g
  std::vector<std::int8_t> bob_outcomes;    // h: 0/1, -1 for no click
  std::vector<std::uint8_t> photon_counts;  // ground-truth emission counts

  std::vector<std::uint32_t> detected;       // D (ascending)
  std::vector<std::uint32_t> revealed;       // R
  std::vector<std::uint32_t> corresponding;  // Omega
  std::vector<std::uint32_t> tested;         // T
  std::vector<std::uint32_t> sifted;         // E

  std::optional<LinearCode> code;
  BitVec syndrome_bits;    // s = F g(E)
  BitMat privacy_matrix;   // K
  BitVec bob_corrected;    // h'(E)
  BitVec kappa;            // Alice's key
  BitVec kappa_prime;      // Bob's key
  bool kappa_prime_defined = false;

  bool aborted = false;
  std::string abort_reason;
  std::optional<ValidationReport> report;
  bool valid = false;
  bool share = false;

  std::vector<EveTap> eve_taps;

  std::size_t multi_count() const {
    std::size_t c = 0;
    for (auto k : photon_counts) c += (k >= 2);
    return c;
  }

  bool in_multi(std::uint32_t i) const { return photon_counts[i] >= 2; }

  // Bits of the sifted key not arising from multi-photon pulses.
  std::size_t l_hat() const {
    std::size_t c = 0;
    for (auto i : sifted) c += !in_multi(i);
    return c;
  }

  std::size_t errors_on(const std::vector<std::uint32_t>& idx) const {
    std::size_t c = 0;
    for (auto i : idx) c += (bob_outcomes[i] >= 0 && (bob_outcomes[i] != 0) != alice_bits.get(i));
    return c;
  }

  BitVec alice_restriction(const std::vector<std::uint32_t>& idx) const {
    BitVec v(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) v.set(k, alice_bits.get(idx[k]));
    return v;
  }

  BitVec bob_restriction(const std::vector<std::uint32_t>& idx) const {
    BitVec v(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (bob_outcomes[idx[k]] < 0)
        throw std::logic_error("Transcript: no outcome at requested index");
      v.set(k, bob_outcomes[idx[k]] == 1);
    }
    return v;
  }
};

// Quantum transmission (protocol steps 2a-2d). Eve acts on the channel per
// strategy; ground truth photon counts and Eve's knowledge are recorded for
// the analysis layers.
inline Transcript run_quantum_phase(const ProtocolConfig& cfg, const SessionModels& models,
                                    const EveStrategy& eve, Rng& rng) {
  cfg.validate();
  models.validate();
  eve.validate();

  Transcript tr;
  tr.N = cfg.N;
  tr.alice_basis.resize(static_cast<std::size_t>(cfg.N));
  tr.bob_basis.resize(static_cast<std::size_t>(cfg.N));
  tr.alice_bits = BitVec(static_cast<std::size_t>(cfg.N));
  tr.bob_outcomes.assign(static_cast<std::size_t>(cfg.N), -1);
  tr.photon_counts.assign(static_cast<std::size_t>(cfg.N), 0);

  const ChannelModel lossless{1.0, 0.0};

  for (std::int64_t i = 0; i < cfg.N; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const Basis a = rng.next_bit() ? Basis::Diag : Basis::Rect;
    const bool g = rng.next_bit();
    tr.alice_basis[idx] = a;
    tr.alice_bits.set(idx, g);

    const int emitted = models.source.emit(rng);
    tr.photon_counts[idx] = static_cast<std::uint8_t>(std::min(emitted, 255));

    // Pulse state as it reaches Bob's detector.
    int arriving = 0;
    bool pulse_bit = g;
    Basis pulse_basis = a;
    const ChannelModel* path = &models.channel;

    switch (eve.kind) {
      case EveStrategy::Kind::None:
        arriving = models.channel.transmit(emitted, rng);
        break;
      case EveStrategy::Kind::InterceptResend: {
        const bool intercept = rng.bernoulli(eve.fraction);
        if (intercept) {
          path = &lossless;
          if (emitted >= 1) {
            const Basis e_basis = rng.next_bit() ? Basis::Diag : Basis::Rect;
            const bool e_bit = (e_basis == a) ? g : rng.next_bit();
            tr.eve_taps.push_back(
                {static_cast<std::uint32_t>(i), e_basis, e_bit, e_basis == a});
            pulse_bit = e_bit;
            pulse_basis = e_basis;
            arriving = 1;  // Eve resends exactly one photon, losslessly
          } else {
            arriving = 0;
          }
        } else {
          arriving = models.channel.transmit(emitted, rng);
        }
        break;
      }
      case EveStrategy::Kind::PhotonNumberSplitting: {
        // Eve swaps in a lossless noiseless line. She splits one photon off
        // every multi-photon pulse (read deterministically after the basis
        // announcement) and blocks the configured fraction of singles.
        path = &lossless;
        if (emitted >= 2) {
          arriving = emitted - 1;
          tr.eve_taps.push_back({static_cast<std::uint32_t>(i), a, g, true});
        } else if (emitted == 1) {
          arriving = rng.bernoulli(eve.fraction) ? 0 : 1;
        } else {
          arriving = 0;
        }
        break;
      }
    }

    const Basis b = rng.next_bit() ? Basis::Diag : Basis::Rect;
    tr.bob_basis[idx] = b;
    const Outcome h = detect(models.detector, *path, arriving, pulse_bit, pulse_basis, b, rng);
    if (h != Outcome::NoClick) {
      tr.bob_outcomes[idx] = static_cast<std::int8_t>(h);
      tr.detected.push_back(static_cast<std::uint32_t>(i));
    }
  }

  tr.phase = Phase::QuantumDone;
  return tr;
}

// Classical exchange (steps 3-12): reveal-set sampling, sifting, error
// correction and privacy amplification. Bob's detections and test bits are
// committed before Alice's bases enter any computation; the transcript keeps
// the phases ordered so the reverse is impossible to express.
inline void run_classical_phase(const ProtocolConfig& cfg, Transcript& tr, Rng& rng) {
  if (tr.phase != Phase::QuantumDone)
    throw std::logic_error("run_classical_phase: quantum phase not completed");

  // Step 4: Bob's reveal set over all indices.
  for (std::int64_t i = 0; i < cfg.N; ++i)
    if (rng.bernoulli(cfg.p_R)) tr.revealed.push_back(static_cast<std::uint32_t>(i));

  // Step 7: Omega, T, E.
  std::vector<bool> in_revealed(static_cast<std::size_t>(cfg.N), false);
  for (auto i : tr.revealed) in_revealed[i] = true;
  for (auto i : tr.detected) {
    if (tr.alice_basis[i] != tr.bob_basis[i]) continue;
    tr.corresponding.push_back(i);
    if (in_revealed[i])
      tr.tested.push_back(i);
    else
      tr.sifted.push_back(i);
  }

  tr.phase = Phase::ClassicalDone;

  if (tr.sifted.empty()) {
    tr.aborted = true;
    tr.abort_reason = "empty sifted set";
    return;
  }

  // Step 9: code sized to correct ceil((delta+tau_ec)(1-p_R)|Omega|) errors.
  // The small downward nudge keeps exactly-integer products from rounding up
  // through floating-point noise.
  const double t_real =
      (cfg.delta + cfg.tau_ec) * (1.0 - cfg.p_R) * static_cast<double>(tr.corresponding.size());
  const auto t_req = static_cast<std::size_t>(std::max(0.0, std::ceil(t_real - 1e-9)));
  const std::size_t l = tr.sifted.size();

  std::optional<LinearCode> code;
  try {
    code = build_code(l, t_req);
  } catch (const unsupported_code_error& e) {
    tr.aborted = true;
    tr.abort_reason = e.what();
    return;
  }
  tr.code = std::move(code);

  const BitVec alice_sifted = tr.alice_restriction(tr.sifted);
  tr.syndrome_bits = syndrome(*tr.code, alice_sifted);

  // Step 10: Bob corrects toward Alice's coset.
  const BitVec bob_sifted = tr.bob_restriction(tr.sifted);
  tr.bob_corrected = decode_to_coset(*tr.code, bob_sifted, tr.syndrome_bits);

  // Steps 11-12: uniform privacy amplification matrix, Bob's key.
  tr.privacy_matrix = sample_random_matrix(static_cast<std::size_t>(cfg.m), l, rng);
  tr.kappa_prime = mat_vec_mul(tr.privacy_matrix, tr.bob_corrected);
  tr.kappa_prime_defined = true;
}

// Step 13: the three-condition validation test, comparisons exactly as
// printed (strict detection rate, non-strict size/rate, strict error count
// against the real-valued threshold d).
inline ValidationReport validate(const ProtocolConfig& cfg, const Transcript& tr) {
  if (tr.phase < Phase::ClassicalDone)
    throw std::logic_error("validate: classical phase not completed");

  ValidationReport rep;
  rep.n = static_cast<std::int64_t>(tr.detected.size());
  rep.omega_size = tr.corresponding.size();
  rep.tested_size = tr.tested.size();
  rep.sifted_size = tr.sifted.size();
  rep.expected_test_size = static_cast<double>(rep.omega_size) * cfg.p_R;

  rep.cond_detection_rate =
      static_cast<double>(rep.n) > cfg.r_min * static_cast<double>(cfg.N);

  rep.code_available = tr.code.has_value();
  rep.code_redundancy = tr.code ? tr.code->redundancy() : 0;
  const SizeRateCheck src =
      check_size_rate(static_cast<double>(rep.n), static_cast<double>(cfg.m),
                      static_cast<double>(rep.code_redundancy), cfg.delta, cfg.tau_f, cfg.tau_hat,
                      cfg.tau_p, cfg.p_R, cfg.m_max());
  rep.l_hat_min = src.l_hat_min;
  rep.h1_argument = src.h1_argument;
  rep.size_bracket = src.bracket;
  rep.cond_size_rate = rep.code_available && src.ok;

  rep.test_errors = tr.errors_on(tr.tested);
  rep.d_threshold = cfg.delta * static_cast<double>(rep.omega_size) * cfg.p_R;
  rep.cond_error_count = static_cast<double>(rep.test_errors) < rep.d_threshold;

  rep.passed =
      rep.cond_detection_rate && rep.cond_size_rate && rep.cond_error_count && !tr.aborted;
  return rep;
}

// Step 14: Alice's key; uniform when the test failed, K g(E) when it passed.
inline void extract_keys(const ProtocolConfig& cfg, Transcript& tr, Rng& rng) {
  if (tr.phase < Phase::ClassicalDone)
    throw std::logic_error("extract_keys: classical phase not completed");
  if (!tr.report) tr.report = validate(cfg, tr);
  tr.phase = Phase::KeysExtracted;
  tr.valid = tr.report->passed;

  if (tr.valid) {
    tr.kappa = mat_vec_mul(tr.privacy_matrix, tr.alice_restriction(tr.sifted));
  } else {
    tr.kappa = BitVec(static_cast<std::size_t>(cfg.m));
    for (std::int64_t i = 0; i < cfg.m; ++i) tr.kappa.set(static_cast<std::size_t>(i), rng.next_bit());
  }
  tr.share = tr.valid && tr.kappa_prime_defined && tr.kappa == tr.kappa_prime;
}

struct SessionResult {
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  std::size_t omega_size = 0;
  std::size_t tested_size = 0;
  std::size_t sifted_size = 0;
  std::size_t test_errors = 0;
  std::size_t sifted_errors = 0;  // ground-truth errors on E before correction
  std::size_t multi_count = 0;
  std::size_t l_hat = 0;
  std::size_t code_t_capability = 0;
  bool valid = false;
  bool share = false;
  bool aborted = false;
  BitVec kappa;
  BitVec kappa_prime;
  bool kappa_prime_defined = false;
};

inline SessionResult summarize(const Transcript& tr) {
  SessionResult r;
  r.n = static_cast<std::int64_t>(tr.detected.size());
  r.omega_size = tr.corresponding.size();
  r.tested_size = tr.tested.size();
  r.sifted_size = tr.sifted.size();
  r.test_errors = tr.errors_on(tr.tested);
  r.sifted_errors = tr.errors_on(tr.sifted);
  r.multi_count = tr.multi_count();
  r.l_hat = tr.l_hat();
  r.code_t_capability = tr.code ? tr.code->t_capability() : 0;
  r.valid = tr.valid;
  r.share = tr.share;
  r.aborted = tr.aborted;
  r.kappa = tr.kappa;
  r.kappa_prime = tr.kappa_prime;
  r.kappa_prime_defined = tr.kappa_prime_defined;
  return r;
}

inline Transcript run_session_transcript(const ProtocolConfig& cfg, const SessionModels& models,
                                         const EveStrategy& eve, std::uint64_t seed) {
  Rng rng(seed);
  Transcript tr = run_quantum_phase(cfg, models, eve, rng);
  run_classical_phase(cfg, tr, rng);
  tr.report = validate(cfg, tr);
  tr.phase = Phase::Validated;
  extract_keys(cfg, tr, rng);
  return tr;
}

inline SessionResult run_session(const ProtocolConfig& cfg, const SessionModels& models,
                                 const EveStrategy& eve, std::uint64_t seed) {
  Transcript tr = run_session_transcript(cfg, models, eve, seed);
  SessionResult r = summarize(tr);
  r.seed = seed;
  return r;
}

struct MonteCarloStats {
  std::vector<SessionResult> rows;
  std::int64_t trials = 0;
  double pass_rate = 0.0;
  double mismatch_and_valid_rate = 0.0;
  double mean_detection_rate = 0.0;
  double mean_error_rate_tested = 0.0;   // over trials with |T| > 0
  double mean_error_rate_sifted = 0.0;   // over trials with |E| > 0
  double mean_multi_count = 0.0;
};

// Independent sessions with per-trial seeds derived from the master seed.
// Trials may run on several threads; results are merged in trial order so
// every aggregate is a pure function of (config, master seed).
inline MonteCarloStats monte_carlo(const ProtocolConfig& cfg, const SessionModels& models,
                                   const EveStrategy& eve, std::int64_t trials,
                                   std::uint64_t master_seed, int threads = 1) {
  if (trials < 1) throw std::invalid_argument("monte_carlo: trials must be >= 1");
  MonteCarloStats stats;
  stats.trials = trials;
  stats.rows.resize(static_cast<std::size_t>(trials));

  const int workers = std::max(1, threads);
  auto work = [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const std::uint64_t seed = Rng::derive(master_seed, static_cast<std::uint64_t>(i));
      stats.rows[static_cast<std::size_t>(i)] = run_session(cfg, models, eve, seed);
    }
  };
  if (workers == 1) {
    work(0, trials);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (trials + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::int64_t lo = w * chunk;
      const std::int64_t hi = std::min<std::int64_t>(trials, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  std::int64_t pass = 0, mismatch_valid = 0, tested_trials = 0, sifted_trials = 0;
  double det = 0.0, err_t = 0.0, err_e = 0.0, multi = 0.0;
  for (const auto& r : stats.rows) {
    pass += r.valid;
    mismatch_valid += (r.valid && !r.share);
    det += static_cast<double>(r.n) / static_cast<double>(cfg.N);
    multi += static_cast<double>(r.multi_count);
    if (r.tested_size > 0) {
      err_t += static_cast<double>(r.test_errors) / static_cast<double>(r.tested_size);
      ++tested_trials;
    }
    if (r.sifted_size > 0) {
      err_e += static_cast<double>(r.sifted_errors) / static_cast<double>(r.sifted_size);
      ++sifted_trials;
    }
  }
  const double tr_d = static_cast<double>(trials);
  stats.pass_rate = static_cast<double>(pass) / tr_d;
  stats.mismatch_and_valid_rate = static_cast<double>(mismatch_valid) / tr_d;
  stats.mean_detection_rate = det / tr_d;
  stats.mean_error_rate_tested = tested_trials ? err_t / static_cast<double>(tested_trials) : 0.0;
  stats.mean_error_rate_sifted = sifted_trials ? err_e / static_cast<double>(sifted_trials) : 0.0;
  stats.mean_multi_count = multi / tr_d;
  return stats;
}

namespace detail {
inline void dump_indices(std::ostringstream& os, const char* name,
                         const std::vector<std::uint32_t>& idx) {
  os << name << ":";
  for (std::size_t k = 0; k < idx.size(); ++k) os << (k ? "," : " ") << idx[k];
  os << "\n";
}
}  // namespace detail

// Line-oriented text dump for golden-file tests: one field per line, index
// sets as sorted comma-separated integers.
inline std::string transcript_to_text(const Transcript& tr) {
  std::ostringstream os;
  os << "N: " << tr.N << "\n";
  auto basis_string = [](const std::vector<Basis>& bs) {
    std::string s;
    s.reserve(bs.size());
    for (Basis b : bs) s.push_back(b == Basis::Rect ? '+' : 'x');
    return s;
  };
  os << "alice_basis: " << basis_string(tr.alice_basis) << "\n";
  os << "bob_basis: " << basis_string(tr.bob_basis) << "\n";
  os << "alice_bits: " << tr.alice_bits.to_string() << "\n";
  os << "bob_outcomes: ";
  for (auto h : tr.bob_outcomes) os << (h < 0 ? '-' : static_cast<char>('0' + h));
  os << "\n";
  os << "photon_counts:";
  for (std::size_t i = 0; i < tr.photon_counts.size(); ++i)
    os << (i ? "," : " ") << static_cast<int>(tr.photon_counts[i]);
  os << "\n";
  detail::dump_indices(os, "detected", tr.detected);
  detail::dump_indices(os, "revealed", tr.revealed);
  detail::dump_indices(os, "corresponding", tr.corresponding);
  detail::dump_indices(os, "tested", tr.tested);
  detail::dump_indices(os, "sifted", tr.sifted);
  os << "code_redundancy: " << (tr.code ? static_cast<std::int64_t>(tr.code->redundancy()) : -1)
     << "\n";
  os << "syndrome: " << tr.syndrome_bits.to_string() << "\n";
  os << "bob_corrected: " << tr.bob_corrected.to_string() << "\n";
  os << "kappa: " << tr.kappa.to_string() << "\n";
  os << "kappa_prime: " << (tr.kappa_prime_defined ? tr.kappa_prime.to_string() : "-") << "\n";
  os << "valid: " << (tr.valid ? 1 : 0) << "\n";
  os << "share: " << (tr.share ? 1 : 0) << "\n";
  os << "aborted: " << (tr.aborted ? 1 : 0) << "\n";
  os << "abort_reason: " << tr.abort_reason << "\n";
  return os.str();
}

}  // namespace qkd
