#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "disnn/bootstrap.hpp"
#include "disnn/discretize.hpp"
#include "disnn/lwe.hpp"

namespace disnn {

enum class EncodingMode {
  kEncodeThenEncrypt,  // client encrypts Poisson spikes (mode A)
  kEncryptThenEncode,  // client encrypts pixels, server compares (mode B)
};

// Accepts "A", "encode-then-encrypt", "B" or "encrypt-then-encode".
EncodingMode parse_mode(const std::string& s);
std::string to_string(EncodingMode mode);

// How the integer weights are halved for inputs carried as 2 * S.
enum class HalvingRule {
  kRound,  // Discret(w, tau / 2), the weights stored by convert()
  kFloor,  // floor(w_hat / 2)
};

// Network evaluated under encryption.
struct FheDisnnModel {
  std::size_t n = 0, k = 0, m = 0;
  std::vector<std::int64_t> W1;  // halved, k x n
  std::vector<std::int64_t> W2;  // halved, m x k
  std::uint64_t p = 0;
  std::int64_t v_threshold = 0;
  EncodingMode mode = EncodingMode::kEncodeThenEncrypt;
  ProgramFunction fire_table;
  ProgramFunction reset_table;

  // Requires an IF model with V_reset = 0.
  static FheDisnnModel from(const DiSnnModel& di, EncodingMode mode,
                            HalvingRule rule = HalvingRule::kRound);
  // Throws ConfigError unless the score sum 2T fits in [0, p/2).
  void check_steps(std::size_t T) const;
};

// Number of bootstraps for one image over T steps.
std::uint64_t bootstrap_count(std::size_t n, std::size_t k, std::size_t m,
                              std::size_t T, EncodingMode mode);

struct BootstrapCounts {
  std::uint64_t encoding = 0;
  std::uint64_t fire = 0;
  std::uint64_t reset = 0;
  std::uint64_t total() const { return encoding + fire + reset; }
};

// Per-phase bootstrap tally, safe to share across threads.
class BootstrapCounter {
 public:
  void add_encoding(std::uint64_t c = 1) { encoding_.fetch_add(c, std::memory_order_relaxed); }
  void add_fire(std::uint64_t c = 1) { fire_.fetch_add(c, std::memory_order_relaxed); }
  void add_reset(std::uint64_t c = 1) { reset_.fetch_add(c, std::memory_order_relaxed); }
  BootstrapCounts snapshot() const;
  void clear();

 private:
  std::atomic<std::uint64_t> encoding_{0}, fire_{0}, reset_{0};
};

// bootstrap(ct, sign) + 1: encrypts 2 when the phase is in [0, p/2), else 0.
LweCiphertext fhe_fire(const LweCiphertext& ct, const ProgramFunction& sign_table,
                       const BootstrapContext& ctx, ExternalProductWorkspace& ws);
// bootstrap(ct, reset_table).
LweCiphertext fhe_reset(const LweCiphertext& ct, const ProgramFunction& reset_table,
                        const BootstrapContext& ctx, ExternalProductWorkspace& ws);
// sum_j w_j * ct_j for halved weights and spikes encrypting {0, 2}.
LweCiphertext encrypted_multisum(std::span<const std::int64_t> weights_halved,
                                 std::span<const LweCiphertext> spikes);

// Client output for one image. Mode A holds T x n spike ciphertexts; mode B
// holds n pixel ciphertexts and the server regenerates the public Poisson
// thresholds from (seed, index).
struct EncryptedImage {
  EncodingMode mode = EncodingMode::kEncodeThenEncrypt;
  std::size_t T = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  // Masks of `cts` are the consecutive draws of Prng(mask_seed, kMaskStream).
  std::uint64_t mask_seed = 0;
  std::vector<LweCiphertext> cts;
};

inline constexpr std::uint64_t kMaskStream = 0x6d61736bULL;

EncryptedImage encode_and_encrypt(const std::uint8_t* image, std::size_t n,
                                  std::size_t T, EncodingMode mode,
                                  const LweSecretKey& key, const CryptoParams& params,
                                  std::uint64_t p, std::uint64_t seed,
                                  std::uint64_t index, Prng& rng);

// Pixel comparison v > t as c (v - t) - (c + 1) / 2 with the largest odd c
// that keeps the phase inside [-p/2, p/2). Requires p >= 512.
std::int64_t comparison_scale(std::uint64_t p);

struct EncryptedState {
  std::vector<LweCiphertext> V1;
  std::vector<LweCiphertext> V2;
};

struct EncryptedStep {
  std::vector<LweCiphertext> hidden;  // k spikes, each {0, 2}
  std::vector<LweCiphertext> out;     // m spikes
};

// Optional secret-key hooks for dual-run diagnostics.
struct DebugProbe {
  const LweSecretKey* key = nullptr;
  // Pre-reset potentials whose decryption falls in [-p/2, V_th - p/2).
  std::uint64_t range_violations = 0;
};

// Server-side evaluator. Holds no secret material.
class FheEvaluator {
 public:
  FheEvaluator(const BootstrapContext& ctx, const FheDisnnModel& model);

  const FheDisnnModel& model() const { return model_; }
  EncryptedState initial_state() const;

  // Layer-1 input spikes of step t. Mode B bootstraps n comparisons.
  std::vector<LweCiphertext> input_spikes(const EncryptedImage& img, std::size_t t,
                                          ExternalProductWorkspace& ws) const;
  EncryptedStep timestep(std::span<const LweCiphertext> in, EncryptedState& st,
                         ExternalProductWorkspace& ws, DebugProbe* probe = nullptr) const;

  struct Result {
    std::vector<LweCiphertext> scores;  // m ciphertexts of 2 * spike count
    std::vector<double> step_seconds;
  };
  Result predict(const EncryptedImage& img, ExternalProductWorkspace& ws,
                 DebugProbe* probe = nullptr) const;
  // Parallel over images.
  std::vector<Result> predict_batch(const std::vector<EncryptedImage>& imgs,
                                    std::size_t workers) const;

  BootstrapCounts counts() const { return counter_.snapshot(); }
  void clear_counts() const { counter_.clear(); }

 private:
  void neuron(const LweCiphertext& I, LweCiphertext& V, LweCiphertext& spike,
              ExternalProductWorkspace& ws, DebugProbe* probe) const;

  const BootstrapContext& ctx_;
  FheDisnnModel model_;
  mutable BootstrapCounter counter_;
};

// Client side: decrypted spike counts and the argmax label.
struct DecryptedScores {
  std::vector<std::int64_t> counts;
  int label = 0;
};
DecryptedScores decrypt_scores(const std::vector<LweCiphertext>& scores,
                               const LweSecretKey& key);

}  // namespace disnn
