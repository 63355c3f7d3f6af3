#pragma once

#include <cstdint>
#include <vector>

#include "disnn/fft.hpp"
#include "disnn/params.hpp"
#include "disnn/random.hpp"
#include "disnn/ring.hpp"

namespace disnn {

struct RingSecretKey {
  NegacyclicPoly z;
  // Signed digits of z; also the LWE key of extracted samples.
  std::vector<std::int64_t> digits;
};

RingSecretKey ring_keygen(const RingParams& rp, SecretDist dist, Prng& rng);

// (a, b) with phase b - a * z.
struct RlweCiphertext {
  NegacyclicPoly a;
  NegacyclicPoly b;
  bool operator==(const RlweCiphertext&) const = default;
};

// Encrypts the raw polynomial m (already scaled by the caller).
RlweCiphertext rlwe_encrypt(const NegacyclicPoly& m, const RingSecretKey& key,
                            double sigma, Prng& rng);
RlweCiphertext rlwe_trivial(const NegacyclicPoly& m);
NegacyclicPoly rlwe_phase(const RlweCiphertext& ct, const RingSecretKey& key);
// Message-level helpers: coefficients in Z_p scaled by Q/p.
RlweCiphertext rlwe_encrypt_message(const std::vector<std::int64_t>& m,
                                    std::uint64_t p, const RingSecretKey& key,
                                    double sigma, Prng& rng);
std::vector<std::int64_t> rlwe_decrypt_message(const RlweCiphertext& ct,
                                               std::uint64_t p,
                                               const RingSecretKey& key);

// Signed base-2^bits decomposition of residues mod Q = 2^(bits * levels).
// Digit i carries weight Q / B^(i+1); digits lie in [-B/2, B/2].
struct Gadget {
  unsigned bits = 7;
  unsigned levels = 6;
  std::uint64_t Q = 0;

  std::uint64_t weight(unsigned i) const;
  // digits[i] for i in [0, levels).
  void decompose(std::uint64_t x, std::int64_t* digits) const;
  // Decomposes every coefficient; out[i] is the i-th digit polynomial.
  void decompose(const NegacyclicPoly& a,
                 std::vector<std::vector<std::int64_t>>& out) const;
};

// 2L rows: rows [0, L) add mu*g_i to the mask, rows [L, 2L) to the body.
struct RgswCiphertext {
  std::vector<RlweCiphertext> rows;
  Gadget gadget;
};

// RGSW encryption of a small-integer polynomial mu.
RgswCiphertext rgsw_encrypt(const NegacyclicPoly& mu, const RingSecretKey& key,
                            const Gadget& gadget, double sigma, Prng& rng);
// RGSW encryption of the monomial X^k.
RgswCiphertext rgsw_encrypt_monomial(std::int64_t k, const RingSecretKey& key,
                                     const Gadget& gadget, double sigma,
                                     Prng& rng);

// Row spectra of an RGSW ciphertext, in centered form, for the fast product.
struct RgswSpectrum {
  std::vector<Spectrum> a;  // one per row
  std::vector<Spectrum> b;
  Gadget gadget;
  std::size_t N = 0;
};

RgswSpectrum rgsw_to_spectrum(const RgswCiphertext& c);

// Scratch buffers for repeated external products; one per worker.
struct ExternalProductWorkspace {
  std::vector<std::vector<std::int64_t>> digits_a, digits_b;
  Spectrum digit_spec, acc_a, acc_b;
  std::vector<double> out;
};

// Exact external product using poly_mul; the reference semantics.
RlweCiphertext external_product(const RlweCiphertext& rlwe,
                                const RgswCiphertext& rgsw);
// FFT external product. Rounding in double precision adds a small error term
// well below the gadget noise.
RlweCiphertext external_product(const RlweCiphertext& rlwe,
                                const RgswSpectrum& rgsw,
                                ExternalProductWorkspace& ws);
// rlwe += rlwe_diff ⋄ rgsw, for the CMux accumulator update.
void external_product_acc(RlweCiphertext& acc, const RlweCiphertext& diff,
                          const RgswSpectrum& rgsw,
                          ExternalProductWorkspace& ws);

}  // namespace disnn
