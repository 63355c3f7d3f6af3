#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "disnn/ring.hpp"

namespace disnn {

using Digest = std::array<std::uint8_t, 32>;

enum class SecretDist { kBinary, kTernary };

// Fresh noise standard deviations.
struct NoiseParams {
  double sigma_lwe = 3.19;
  double sigma_ring = 3.19;
  void validate() const;
  bool operator==(const NoiseParams&) const = default;
};

// Lattice parameter set shared by every key, ciphertext and bootstrap. The
// ciphertext modulus is Q = 2^log_q for both the LWE and the ring layer.
struct CryptoParams {
  std::string name = "std128";
  std::size_t n = 512;
  std::size_t N = 1024;
  unsigned log_q = 42;
  unsigned bg_bits = 7;
  unsigned ks_bits = 14;
  NoiseParams noise;
  SecretDist secret = SecretDist::kBinary;

  std::uint64_t Q() const { return std::uint64_t{1} << log_q; }
  unsigned gadget_levels() const { return (log_q + bg_bits - 1) / bg_bits; }
  unsigned ks_levels() const { return (log_q + ks_bits - 1) / ks_bits; }
  RingParams ring() const { return RingParams{N, Q()}; }

  // Throws ParameterError on inconsistent values. Both decomposition bases
  // must divide log_q exactly, and 2N must divide Q.
  void validate() const;

  std::string to_json() const;
  static CryptoParams from_json(const std::string& text);
  static CryptoParams load(const std::string& path);
  // The compiled-in default, identical to params/std128.json.
  static CryptoParams std128();

  // SHA-256 of the canonical JSON form.
  Digest hash() const;

  bool operator==(const CryptoParams&) const = default;
};

Digest sha256(const void* data, std::size_t len);
std::string hex(const Digest& d);

}  // namespace disnn
