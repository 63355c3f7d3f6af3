#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "disnn/lwe.hpp"
#include "disnn/params.hpp"
#include "disnn/rlwe.hpp"

namespace disnn {

// Lookup table g over Z_p satisfying g(v + p/2) = -g(v). Entry v holds the
// centered value of g at the residue v mod p.
class ProgramFunction {
 public:
  ProgramFunction() = default;

  std::uint64_t p() const { return table_.size(); }
  std::int64_t operator()(std::int64_t m) const;
  const std::vector<std::int64_t>& table() const { return table_; }

  friend ProgramFunction make_program_function(std::vector<std::int64_t> table);

 private:
  std::vector<std::int64_t> table_;
};

// Validates the negacyclic constraint. Throws ValidationError naming the
// first offending v, or ParameterError for a bad length.
ProgramFunction make_program_function(std::vector<std::int64_t> table);

// g(m) = 1 on [0, p/2), -1 on [-p/2, 0).
ProgramFunction sign_function(std::uint64_t p);
// The four-case Reset table for threshold vth.
ProgramFunction reset_function(std::uint64_t p, std::int64_t vth);
// Builds a table from any function of centered m in [-p/2, p/2).
template <typename F>
ProgramFunction tabulate(std::uint64_t p, F&& f) {
  std::vector<std::int64_t> t(p);
  const auto half = static_cast<std::int64_t>(p / 2);
  for (std::int64_t m = -half; m < half; ++m) {
    t[static_cast<std::size_t>((m + static_cast<std::int64_t>(p)) %
                               static_cast<std::int64_t>(p))] = f(m);
  }
  return make_program_function(std::move(t));
}

// Key-switch key from the extracted ring key z (dimension N) to the LWE key
// s (dimension n). Entry (i, j) encrypts z_i * Q / B^(j+1) at modulus Q.
struct KeySwitchKey {
  std::size_t N = 0;
  std::size_t n = 0;
  unsigned bits = 14;
  unsigned levels = 3;
  std::uint64_t Q = 0;
  // N * levels rows of (n mask words, 1 body word).
  std::vector<std::uint64_t> data;

  const std::uint64_t* row(std::size_t i, unsigned j) const {
    return data.data() + (i * levels + j) * (n + 1);
  }
};

KeySwitchKey make_key_switch_key(const RingSecretKey& from,
                                 const LweSecretKey& to,
                                 const CryptoParams& params, Prng& rng);

// Public evaluation material: RGSW encryptions of the LWE key bits under the
// ring key, plus the key-switch key.
struct EvalKey {
  CryptoParams params;
  std::vector<RgswCiphertext> ek;
  KeySwitchKey ksk;
};

struct SecretKeys {
  CryptoParams params;
  LweSecretKey lwe;
  RingSecretKey ring;
};

SecretKeys generate_secret_keys(const CryptoParams& params, Prng& rng);
EvalKey generate_eval_key(const SecretKeys& sk, Prng& rng);

// Result of the modulus switch to 2N.
struct SwitchedLwe {
  std::vector<std::uint32_t> a;
  std::uint32_t b = 0;
};

struct BootstrapStats {
  std::uint64_t count = 0;
  double seconds = 0.0;
};

// Bootstrapping key in FFT form, ready for evaluation. Immutable after
// construction apart from the statistics counters, which are atomic.
class BootstrapContext {
 public:
  explicit BootstrapContext(const EvalKey& key);

  const CryptoParams& params() const { return params_; }
  const KeySwitchKey& ksk() const { return ksk_; }

  // Trivial accumulator X^(-b) * sum_i g(floor(i p / 2N)) X^i, with entries
  // scaled by Q/p.
  RlweCiphertext acc_initialize(const ProgramFunction& g, std::int64_t b) const;
  // Rescales (a, b) from Q to 2N with nearest rounding.
  SwitchedLwe mod_switch(const LweCiphertext& ct) const;
  // ACC <- ACC + ek_i ⋄ (X^(a_i) ACC - ACC) for each nonzero a_i.
  void blind_rotate(RlweCiphertext& acc, const SwitchedLwe& ct,
                    ExternalProductWorkspace& ws) const;
  // Constant coefficient as an LWE sample under the ring key.
  LweCiphertext sample_extract(const RlweCiphertext& acc,
                               std::uint64_t p) const;
  LweCiphertext key_switch(const LweCiphertext& ct) const;

  // KeySwitch ∘ Extract ∘ BlindRotate ∘ Initialize. The input message gets a
  // half-slot offset before the modulus switch so slot centers align.
  LweCiphertext bootstrap(const LweCiphertext& ct, const ProgramFunction& g,
                          ExternalProductWorkspace& ws) const;
  LweCiphertext bootstrap(const LweCiphertext& ct,
                          const ProgramFunction& g) const;

  // Analytic standard deviation of the noise on a bootstrap output.
  double output_noise() const { return output_noise_; }
  // Standard deviation of the modulus-switch rounding error, in units of
  // the 2N torus.
  double mod_switch_noise() const;

  BootstrapStats stats() const;
  void reset_stats() const;

 private:
  CryptoParams params_;
  std::vector<RgswSpectrum> ek_;
  KeySwitchKey ksk_;
  double output_noise_ = 0.0;
  mutable std::atomic<std::uint64_t> count_{0};
  mutable std::atomic<std::uint64_t> nanos_{0};
};

// Analytic bootstrap output noise for a parameter set.
double bootstrap_output_noise(const CryptoParams& params);

}  // namespace disnn
