#include "disnn/params.hpp"

#include <sodium.h>

#include <fstream>
#include "json.hpp"
#include <sstream>

#include "disnn/errors.hpp"

namespace disnn {

using nlohmann::json;

void NoiseParams::validate() const {
  if (!(sigma_lwe > 0.0) || !(sigma_ring > 0.0)) {
    throw ParameterError("noise parameters must be positive");
  }
}

void CryptoParams::validate() const {
  if (n < 1) throw ParameterError("LWE dimension n must be positive");
  ring().validate();
  if (log_q < 8 || log_q > 52) {
    throw ParameterError("log_q must lie in [8, 52]");
  }
  if (bg_bits == 0 || log_q % bg_bits != 0) {
    throw ParameterError("gadget base bits must divide log_q");
  }
  if (ks_bits == 0 || log_q % ks_bits != 0) {
    throw ParameterError("key-switch base bits must divide log_q");
  }
  if ((std::uint64_t{2} * N) > Q()) {
    throw ParameterError("2N must not exceed Q");
  }
  noise.validate();
}

namespace {

json to_object(const CryptoParams& p) {
  return json{
      {"name", p.name},
      {"n", p.n},
      {"N", p.N},
      {"log_q", p.log_q},
      {"bg_bits", p.bg_bits},
      {"ks_bits", p.ks_bits},
      {"sigma_lwe", p.noise.sigma_lwe},
      {"sigma_ring", p.noise.sigma_ring},
      {"secret", p.secret == SecretDist::kBinary ? "binary" : "ternary"},
  };
}

}  // namespace

std::string CryptoParams::to_json() const { return to_object(*this).dump(2); }

CryptoParams CryptoParams::from_json(const std::string& text) {
  CryptoParams p;
  try {
    const json j = json::parse(text);
    p.name = j.value("name", p.name);
    p.n = j.at("n").get<std::size_t>();
    p.N = j.at("N").get<std::size_t>();
    p.log_q = j.at("log_q").get<unsigned>();
    p.bg_bits = j.at("bg_bits").get<unsigned>();
    p.ks_bits = j.at("ks_bits").get<unsigned>();
    p.noise.sigma_lwe = j.at("sigma_lwe").get<double>();
    p.noise.sigma_ring = j.at("sigma_ring").get<double>();
    const std::string dist = j.value("secret", std::string("binary"));
    if (dist == "binary") {
      p.secret = SecretDist::kBinary;
    } else if (dist == "ternary") {
      p.secret = SecretDist::kTernary;
    } else {
      throw ConfigError("unknown secret distribution '" + dist + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed parameter file: ") + e.what());
  }
  p.validate();
  return p;
}

CryptoParams CryptoParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open parameter file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

CryptoParams CryptoParams::std128() { return CryptoParams{}; }

Digest CryptoParams::hash() const {
  const std::string canon = to_object(*this).dump();
  return sha256(canon.data(), canon.size());
}

Digest sha256(const void* data, std::size_t len) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium init failed");
  Digest d{};
  crypto_hash_sha256(d.data(), static_cast<const unsigned char*>(data), len);
  return d;
}

std::string hex(const Digest& d) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto byte : d) {
    s.push_back(digits[byte >> 4]);
    s.push_back(digits[byte & 15]);
  }
  return s;
}

}  // namespace disnn
