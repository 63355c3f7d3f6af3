#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "disnn/params.hpp"
#include "disnn/random.hpp"

namespace disnn {

// Message space Z_p with centered representatives {-p/2+1, ..., p/2}.
struct PlaintextParams {
  std::uint64_t p = 1024;

  void validate(std::uint64_t q) const;
  std::int64_t min_message() const { return -static_cast<std::int64_t>(p / 2) + 1; }
  std::int64_t max_message() const { return static_cast<std::int64_t>(p / 2); }
  // Maps any integer to its centered representative.
  std::int64_t wrap(std::int64_t m) const;
};

struct LweSecretKey {
  std::vector<std::int64_t> s;
  std::size_t n() const { return s.size(); }
};

// (a, b) with phase b - <a, s> = round(q m / p) + e.
struct LweCiphertext {
  std::vector<std::uint64_t> a;
  std::uint64_t b = 0;
  std::uint64_t q = 0;
  std::uint64_t p = 0;
  // Analytic bound on the standard deviation of e.
  double noise_budget = 0.0;

  std::size_t n() const { return a.size(); }
  bool operator==(const LweCiphertext&) const = default;
};

LweSecretKey lwe_keygen(std::size_t n, SecretDist dist, Prng& rng);

// round(q * m / p), half away from zero, reduced mod q.
std::uint64_t encode_message(std::int64_t m, std::uint64_t q, std::uint64_t p);

// Throws DomainError unless m lies in Z_p.
LweCiphertext lwe_encrypt(std::int64_t m, const LweSecretKey& key,
                          std::uint64_t q, const PlaintextParams& pt,
                          double sigma, Prng& rng);
// Same, with the mask drawn from `mask_rng` and the error from `noise_rng`.
// A ciphertext whose mask stream is reproducible can be stored as (seed, b).
LweCiphertext lwe_encrypt(std::int64_t m, const LweSecretKey& key,
                          std::uint64_t q, const PlaintextParams& pt,
                          double sigma, Prng& mask_rng, Prng& noise_rng);
// The mask lwe_encrypt draws from `mask_rng`.
std::vector<std::uint64_t> lwe_expand_mask(std::size_t n, std::uint64_t q,
                                           Prng& mask_rng);
// Noiseless encryption under an all-zero mask.
LweCiphertext lwe_trivial(std::int64_t m, std::size_t n, std::uint64_t q,
                          const PlaintextParams& pt);

std::int64_t lwe_decrypt(const LweCiphertext& ct, const LweSecretKey& key);
// b - <a, s> mod q.
std::uint64_t lwe_phase(const LweCiphertext& ct, const LweSecretKey& key);
// Debug hook: signed error of the phase around the nearest message.
std::int64_t lwe_measured_noise(const LweCiphertext& ct,
                                const LweSecretKey& key);

// Linear operations. Each throws NoiseBudgetError when the propagated
// budget would exceed q / (2p), and ParameterError on mismatched shapes.
LweCiphertext lwe_scalar_mul(const LweCiphertext& ct, std::int64_t w);
LweCiphertext lwe_add(const LweCiphertext& x, const LweCiphertext& y);
LweCiphertext lwe_sub(const LweCiphertext& x, const LweCiphertext& y);
void lwe_add_inplace(LweCiphertext& x, const LweCiphertext& y);
// Adds the plaintext constant c (in message units); noise is unchanged.
LweCiphertext lwe_add_constant(const LweCiphertext& ct, std::int64_t c);
// Sum of w_j * ct_j; budget is sum of |w_j| * budget_j.
LweCiphertext multisum(std::span<const std::int64_t> weights,
                       std::span<const LweCiphertext> cts);

// Budget limit q / (2p) for a ciphertext.
double noise_limit(const LweCiphertext& ct);

}  // namespace disnn
