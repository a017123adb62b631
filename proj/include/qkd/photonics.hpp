#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qkd/rng.hpp"

namespace qkd {

enum class Basis : std::uint8_t { Rect = 0, Diag = 1 };

// Photon-number distribution of the source, truncated with the residual tail
// mass folded into the last bin so the probabilities sum to one exactly.
struct SourceModel {
  std::vector<double> photon_dist;  // p_0 .. p_nmax

  double p_vacuum() const { return photon_dist.empty() ? 1.0 : photon_dist[0]; }
  double p_single() const { return photon_dist.size() > 1 ? photon_dist[1] : 0.0; }
  double p_multi() const {
    double s = 0.0;
    for (std::size_t n = 2; n < photon_dist.size(); ++n) s += photon_dist[n];
    return s;
  }

  void validate() const {
    double sum = 0.0;
    for (double p : photon_dist) {
      if (p < 0.0) throw std::invalid_argument("SourceModel: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("SourceModel: probabilities do not sum to 1");
  }

  int emit(Rng& rng) const {
    double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t n = 0; n + 1 < photon_dist.size(); ++n) {
      acc += photon_dist[n];
      if (u < acc) return static_cast<int>(n);
    }
    return photon_dist.empty() ? 0 : static_cast<int>(photon_dist.size() - 1);
  }
};

// Poissonian photon statistics of a phase-randomised weak pulse:
// p_j = e^{-mu} mu^j / j!. The tail beyond nmax must be below 1e-12 and is
// folded into the last bin.
inline SourceModel poisson_source(double mu, int nmax) {
  if (mu < 0.0) throw std::invalid_argument("poisson_source: negative mean");
  if (nmax < 0) throw std::invalid_argument("poisson_source: negative truncation");
  SourceModel s;
  s.photon_dist.resize(static_cast<std::size_t>(nmax) + 1, 0.0);
  double p = std::exp(-mu);
  double partial = 0.0;
  for (int j = 0; j < nmax; ++j) {
    s.photon_dist[static_cast<std::size_t>(j)] = p;
    partial += p;
    p *= mu / (j + 1);
  }
  double tail = 1.0 - partial;  // p_nmax plus everything beyond
  if (tail - p > 1e-12)
    throw std::invalid_argument("poisson_source: truncated tail mass exceeds 1e-12");
  s.photon_dist[static_cast<std::size_t>(nmax)] = tail;
  s.validate();
  return s;
}

inline SourceModel poisson_source(double mu) {
  if (mu < 0.0) throw std::invalid_argument("poisson_source: negative mean");
  // Smallest truncation whose residual tail is below 1e-12.
  int nmax = 1;
  double p = std::exp(-mu);
  double cum = p;
  while (1.0 - cum >= 1e-12 && nmax < 4096) {
    p *= mu / nmax;
    cum += p;
    ++nmax;
  }
  return poisson_source(mu, nmax);
}

inline SourceModel single_photon_source() {
  SourceModel s;
  s.photon_dist = {0.0, 1.0};
  return s;
}

inline SourceModel vacuum_source() {
  SourceModel s;
  s.photon_dist = {1.0};
  return s;
}

// Lossy channel: each photon survives independently with probability
// `transmittance`. flip_probability inverts the matching-basis outcome of a
// transmitted pulse.
struct ChannelModel {
  double transmittance = 1.0;
  double flip_probability = 0.0;

  void validate() const {
    if (!(transmittance >= 0.0 && transmittance <= 1.0))
      throw std::invalid_argument("ChannelModel: transmittance outside [0,1]");
    if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
      throw std::invalid_argument("ChannelModel: flip probability outside [0,1]");
  }

  int transmit(int photons, Rng& rng) const {
    int surviving = 0;
    for (int i = 0; i < photons; ++i)
      if (rng.bernoulli(transmittance)) ++surviving;
    return surviving;
  }
};

struct DetectorModel {
  double efficiency = 1.0;  // per arriving photon
  double dark_count = 0.0;  // per signal slot per detector

  void validate() const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
      throw std::invalid_argument("DetectorModel: efficiency outside [0,1]");
    if (!(dark_count >= 0.0 && dark_count <= 1.0))
      throw std::invalid_argument("DetectorModel: dark count outside [0,1]");
  }
};

// Measurement outcome of one slot; NoClick when neither detector fires.
enum class Outcome : std::int8_t { NoClick = -1, Zero = 0, One = 1 };

// Two-detector measurement of a pulse of `arriving` photons prepared as
// (bit, prep) and measured in basis `meas`. In the matching basis the whole
// pulse projects onto bit xor flip; in the conjugate basis each photon
// projects independently. Each projected photon fires its detector with
// probability `efficiency`; each detector additionally dark-fires with
// probability `dark_count`. Both detectors firing resolves to a uniformly
// random bit. Click probability is 1 - (1-eta_B)^arriving (1-d_B)^2
// independent of the measurement basis.
inline Outcome detect(const DetectorModel& det, const ChannelModel& channel, int arriving,
                      bool bit, Basis prep, Basis meas, Rng& rng) {
  bool click0 = false, click1 = false;
  if (meas == prep) {
    bool mode = bit;
    if (rng.bernoulli(channel.flip_probability)) mode = !mode;
    for (int i = 0; i < arriving; ++i)
      if (rng.bernoulli(det.efficiency)) (mode ? click1 : click0) = true;
  } else {
    for (int i = 0; i < arriving; ++i) {
      bool mode = rng.next_bit();
      if (rng.bernoulli(det.efficiency)) (mode ? click1 : click0) = true;
    }
  }
  if (rng.bernoulli(det.dark_count)) click0 = true;
  if (rng.bernoulli(det.dark_count)) click1 = true;
  if (click0 && click1) return rng.next_bit() ? Outcome::One : Outcome::Zero;
  if (click0) return Outcome::Zero;
  if (click1) return Outcome::One;
  return Outcome::NoClick;
}

// Analytic detection rate p_D = sum_n p_n [1 - (1 - eta eta_B)^n (1-d_B)^2].
inline double expected_detection_rate(const SourceModel& source, const ChannelModel& channel,
                                      const DetectorModel& det) {
  const double eta = channel.transmittance * det.efficiency;
  const double no_dark = (1.0 - det.dark_count) * (1.0 - det.dark_count);
  double p_d = 0.0;
  for (std::size_t n = 0; n < source.photon_dist.size(); ++n)
    p_d += source.photon_dist[n] *
           (1.0 - std::pow(1.0 - eta, static_cast<double>(n)) * no_dark);
  return p_d;
}

// Expected error rate on matching-basis clicks, with errors sourced from the
// channel flip and from dark counts (wrong-detector darks and random
// double-click resolution).
inline double expected_error_rate(const SourceModel& source, const ChannelModel& channel,
                                  const DetectorModel& det) {
  const double eta = channel.transmittance * det.efficiency;
  const double d = det.dark_count;
  double q = 0.0;  // P(no signal photon detected)
  for (std::size_t n = 0; n < source.photon_dist.size(); ++n)
    q += source.photon_dist[n] * std::pow(1.0 - eta, static_cast<double>(n));
  const double f = channel.flip_probability;
  const double p_click = 1.0 - q * (1.0 - d) * (1.0 - d);
  if (p_click <= 0.0) return 0.0;
  // Signal detected: the flipped pulse errs unless the opposite dark turns
  // it into a coin toss; an opposite dark on an unflipped pulse errs half
  // the time. No signal: lone wrong-mode dark errs, double dark is a toss.
  double err = (1.0 - q) * (f * (1.0 - d) + 0.5 * d) + q * (d * (1.0 - d) + 0.5 * d * d);
  return err / p_click;
}

}  // namespace qkd
