#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qkd/photonics.hpp"
#include "qkd/protocol.hpp"

namespace qkd {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Full description of a simulation run: protocol constants, physical models,
// Eve strategy, trial count and the mandatory master seed.
struct RunConfig {
  ProtocolConfig protocol;
  SessionModels models;
  EveStrategy eve;
  std::int64_t trials = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  std::string out_path;

  void validate() const {
    protocol.validate();
    models.validate();
    eve.validate();
    if (trials < 1) throw config_error("config: trials must be >= 1");
    if (threads < 1) throw config_error("config: threads must be >= 1");
    if (!seed_set) throw config_error("config: seed is mandatory");
  }
};

namespace detail {

inline double require_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw config_error(std::string("config: missing numeric field '") + key + "'");
  return j[key].get<double>();
}

inline std::int64_t require_integer(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw config_error(std::string("config: missing integer field '") + key + "'");
  return j[key].get<std::int64_t>();
}

}  // namespace detail

inline SourceModel parse_source(const nlohmann::json& j) {
  const std::string type = j.value("type", std::string{});
  if (type == "poisson") {
    if (j.contains("nmax"))
      return poisson_source(detail::require_number(j, "mu"),
                            static_cast<int>(detail::require_integer(j, "nmax")));
    return poisson_source(detail::require_number(j, "mu"));
  }
  if (type == "single") return single_photon_source();
  if (type == "vacuum") return vacuum_source();
  if (type == "pmf") {
    if (!j.contains("probs") || !j["probs"].is_array())
      throw config_error("config: pmf source needs a 'probs' array");
    SourceModel s;
    for (const auto& p : j["probs"]) s.photon_dist.push_back(p.get<double>());
    s.validate();
    return s;
  }
  throw config_error("config: unknown source type '" + type + "'");
}

inline EveStrategy parse_eve(const nlohmann::json& j) {
  const std::string strategy = j.value("strategy", std::string{"none"});
  if (strategy == "none") return EveStrategy::none();
  if (strategy == "intercept_resend")
    return EveStrategy::intercept_resend(j.value("fraction", 1.0));
  if (strategy == "pns") return EveStrategy::pns(j.value("block_fraction", 1.0));
  throw config_error("config: unknown eve strategy '" + strategy + "'");
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig cfg;
  if (!j.contains("protocol")) throw config_error("config: missing 'protocol' block");
  const auto& p = j["protocol"];
  cfg.protocol.m = detail::require_integer(p, "m");
  cfg.protocol.N = detail::require_integer(p, "N");
  cfg.protocol.delta = detail::require_number(p, "delta");
  cfg.protocol.r_min = detail::require_number(p, "r_min");
  cfg.protocol.p_R = detail::require_number(p, "p_R");
  cfg.protocol.tau_ec = detail::require_number(p, "tau_ec");
  cfg.protocol.tau_f = detail::require_number(p, "tau_f");
  cfg.protocol.tau_M = detail::require_number(p, "tau_M");
  cfg.protocol.tau_hat = detail::require_number(p, "tau_hat");
  cfg.protocol.tau_p = detail::require_number(p, "tau_p");

  if (!j.contains("source")) throw config_error("config: missing 'source' block");
  cfg.models.source = parse_source(j["source"]);
  // The assumed multi-photon bound defaults to the source's true p_M.
  cfg.protocol.p_M_bound =
      p.contains("p_M_bound") ? detail::require_number(p, "p_M_bound") : cfg.models.source.p_multi();

  if (j.contains("channel")) {
    cfg.models.channel.transmittance = j["channel"].value("transmittance", 1.0);
    cfg.models.channel.flip_probability = j["channel"].value("flip_probability", 0.0);
  }
  if (j.contains("detector")) {
    cfg.models.detector.efficiency = j["detector"].value("efficiency", 1.0);
    cfg.models.detector.dark_count = j["detector"].value("dark_count", 0.0);
  }
  cfg.eve = j.contains("eve") ? parse_eve(j["eve"]) : EveStrategy::none();

  if (j.contains("trials")) cfg.trials = j["trials"].get<std::int64_t>();
  if (j.contains("seed")) {
    cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.seed_set = true;
  }
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("out")) cfg.out_path = j["out"].get<std::string>();
  return cfg;
}

// Dotted-path override "a.b.c=value"; the value is parsed as a JSON literal
// when possible and falls back to a plain string.
inline void apply_override(nlohmann::json& j, std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw config_error("override: expected key=value, got '" + std::string(spec) + "'");
  std::string_view path = spec.substr(0, eq);
  std::string_view value = spec.substr(eq + 1);

  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (key.empty()) throw config_error("override: empty path segment");
    if (dot == std::string_view::npos) {
      auto parsed = nlohmann::json::parse(value, nullptr, false);
      if (parsed.is_discarded())
        (*node)[key] = std::string(value);
      else
        (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw config_error("malformed JSON in config file: " + path);
  return j;
}

// Fixed-width lowercase hex for a key bit string: ceil(len/4) digits, bit 4j
// is the high bit of digit j, missing tail bits read as zero.
inline std::string key_to_hex(const BitVec& key) {
  static const char digits[] = "0123456789abcdef";
  const std::size_t n_digits = (key.size() + 3) / 4;
  std::string out(n_digits, '0');
  for (std::size_t d = 0; d < n_digits; ++d) {
    unsigned v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t bit = 4 * d + k;
      v = (v << 1) | (bit < key.size() && key.get(bit) ? 1u : 0u);
    }
    out[d] = digits[v];
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline const char* simulate_csv_header() {
  return "trial,seed,n,omega,tested,sifted,test_errors,multi,valid,share,kappa_hex,kappa_prime_hex";
}

inline std::string simulate_csv_row(std::int64_t trial, const SessionResult& r) {
  std::ostringstream os;
  os << trial << ',' << r.seed << ',' << r.n << ',' << r.omega_size << ',' << r.tested_size << ','
     << r.sifted_size << ',' << r.test_errors << ',' << r.multi_count << ',' << (r.valid ? 1 : 0)
     << ',' << (r.share ? 1 : 0) << ',' << key_to_hex(r.kappa) << ','
     << (r.kappa_prime_defined ? key_to_hex(r.kappa_prime) : "-");
  return os.str();
}

inline std::string simulate_csv(const MonteCarloStats& stats) {
  std::ostringstream os;
  os << simulate_csv_header() << "\n";
  for (std::size_t i = 0; i < stats.rows.size(); ++i)
    os << simulate_csv_row(static_cast<std::int64_t>(i), stats.rows[i]) << "\n";
  return os.str();
}

inline nlohmann::ordered_json simulate_summary(const MonteCarloStats& stats) {
  nlohmann::ordered_json j;
  j["trials"] = stats.trials;
  j["pass_rate"] = stats.pass_rate;
  j["mismatch_and_valid_rate"] = stats.mismatch_and_valid_rate;
  j["mean_detection_rate"] = stats.mean_detection_rate;
  j["mean_error_rate_tested"] = stats.mean_error_rate_tested;
  j["mean_error_rate_sifted"] = stats.mean_error_rate_sifted;
  j["mean_multi_count"] = stats.mean_multi_count;
  return j;
}

}  // namespace qkd
