#include "disnn/fhe.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <mutex>
#include <thread>

#include "disnn/errors.hpp"
#include "disnn/snn.hpp"

namespace disnn {

EncodingMode parse_mode(const std::string& s) {
  if (s == "A" || s == "a" || s == "encode-then-encrypt") {
    return EncodingMode::kEncodeThenEncrypt;
  }
  if (s == "B" || s == "b" || s == "encrypt-then-encode") {
    return EncodingMode::kEncryptThenEncode;
  }
  throw ConfigError("unknown encoding mode '" + s + "'");
}

std::string to_string(EncodingMode mode) {
  return mode == EncodingMode::kEncodeThenEncrypt ? "encode-then-encrypt"
                                                  : "encrypt-then-encode";
}

FheDisnnModel FheDisnnModel::from(const DiSnnModel& di, EncodingMode mode,
                                  HalvingRule rule) {
  di.validate();
  if (di.neuron.kind != NeuronKind::kIF) {
    throw ConfigError("encrypted evaluation supports the IF neuron only");
  }
  if (di.v_reset != 0) throw ConfigError("encrypted evaluation requires V_reset = 0");
  const auto half = static_cast<std::int64_t>(di.p / 2);
  if (di.alpha() >= half) {
    std::ostringstream os;
    os << "message-space error: alpha = " << di.alpha() << " does not fit p = " << di.p
       << "; smallest admissible p is " << choose_message_space(di.alpha());
    throw RangeError(os.str());
  }
  FheDisnnModel f;
  f.n = di.n;
  f.k = di.k;
  f.m = di.m;
  f.p = di.p;
  f.v_threshold = di.v_threshold;
  f.mode = mode;
  if (rule == HalvingRule::kRound) {
    f.W1 = di.W1_half;
    f.W2 = di.W2_half;
  } else {
    auto floor_half = [](std::int64_t w) {
      return w >= 0 ? w / 2 : -((-w + 1) / 2);
    };
    f.W1.resize(di.W1.size());
    f.W2.resize(di.W2.size());
    for (std::size_t i = 0; i < f.W1.size(); ++i) f.W1[i] = floor_half(di.W1[i]);
    for (std::size_t i = 0; i < f.W2.size(); ++i) f.W2[i] = floor_half(di.W2[i]);
  }
  f.fire_table = sign_function(f.p);
  f.reset_table = reset_function(f.p, f.v_threshold);
  return f;
}

void FheDisnnModel::check_steps(std::size_t T) const {
  if (T == 0) throw ConfigError("T must be positive");
  if (2 * T >= p / 2) {
    std::ostringstream os;
    os << "score sum 2T = " << 2 * T << " does not fit below p/2 = " << p / 2;
    throw ConfigError(os.str());
  }
}

std::uint64_t bootstrap_count(std::size_t n, std::size_t k, std::size_t m,
                              std::size_t T, EncodingMode mode) {
  const std::uint64_t per_step =
      2 * (k + m) + (mode == EncodingMode::kEncryptThenEncode ? n : 0);
  return per_step * T;
}

BootstrapCounts BootstrapCounter::snapshot() const {
  return {encoding_.load(), fire_.load(), reset_.load()};
}

void BootstrapCounter::clear() {
  encoding_ = 0;
  fire_ = 0;
  reset_ = 0;
}

LweCiphertext fhe_fire(const LweCiphertext& ct, const ProgramFunction& sign_table,
                       const BootstrapContext& ctx, ExternalProductWorkspace& ws) {
  return lwe_add_constant(ctx.bootstrap(ct, sign_table, ws), 1);
}

LweCiphertext fhe_reset(const LweCiphertext& ct, const ProgramFunction& reset_table,
                        const BootstrapContext& ctx, ExternalProductWorkspace& ws) {
  return ctx.bootstrap(ct, reset_table, ws);
}

LweCiphertext encrypted_multisum(std::span<const std::int64_t> weights_halved,
                                 std::span<const LweCiphertext> spikes) {
  return multisum(weights_halved, spikes);
}

std::int64_t comparison_scale(std::uint64_t p) {
  const auto half = static_cast<std::int64_t>(p / 2);
  std::int64_t c = 1;
  while (255 * (c + 2) + (c + 3) / 2 <= half) c += 2;
  if (255 * c + (c + 1) / 2 > half) {
    throw ConfigError("encrypt-then-encode needs p >= 512 to compare pixels");
  }
  return c;
}

EncryptedImage encode_and_encrypt(const std::uint8_t* image, std::size_t n,
                                  std::size_t T, EncodingMode mode,
                                  const LweSecretKey& key, const CryptoParams& params,
                                  std::uint64_t p, std::uint64_t seed,
                                  std::uint64_t index, Prng& rng) {
  if (T == 0) throw ConfigError("T must be positive");
  if (key.n() != params.n) throw ParameterError("secret key dimension mismatch");
  const PlaintextParams pt{p};
  EncryptedImage img;
  img.mode = mode;
  img.T = T;
  img.n = n;
  img.seed = seed;
  img.index = index;
  img.mask_seed = rng();
  Prng mask(img.mask_seed, kMaskStream);
  const double sigma = params.noise.sigma_lwe;
  if (mode == EncodingMode::kEncodeThenEncrypt) {
    Prng stream = image_stream(seed, index);
    const SpikeTrain s = poisson_encode_bytes(image, n, T, stream);
    img.cts.reserve(T * n);
    for (std::size_t i = 0; i < T * n; ++i) {
      img.cts.push_back(lwe_encrypt(2 * s.bits[i], key, params.Q(), pt, sigma, mask, rng));
    }
  } else {
    comparison_scale(p);
    img.cts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      img.cts.push_back(lwe_encrypt(image[i], key, params.Q(), pt, sigma, mask, rng));
    }
  }
  return img;
}

FheEvaluator::FheEvaluator(const BootstrapContext& ctx, const FheDisnnModel& model)
    : ctx_(ctx), model_(model) {
  if (model_.fire_table.p() != model_.p || model_.reset_table.p() != model_.p) {
    throw ParameterError("program tables do not match the message space");
  }
  if (model_.W1.size() != model_.k * model_.n || model_.W2.size() != model_.m * model_.k) {
    throw ParameterError("weight matrix shape does not match layer sizes");
  }
  PlaintextParams{model_.p}.validate(ctx_.params().Q());
}

EncryptedState FheEvaluator::initial_state() const {
  const PlaintextParams pt{model_.p};
  const auto zero = lwe_trivial(0, ctx_.params().n, ctx_.params().Q(), pt);
  return {std::vector<LweCiphertext>(model_.k, zero),
          std::vector<LweCiphertext>(model_.m, zero)};
}

std::vector<LweCiphertext> FheEvaluator::input_spikes(const EncryptedImage& img,
                                                      std::size_t t,
                                                      ExternalProductWorkspace& ws) const {
  if (img.n != model_.n) throw ParameterError("encrypted image dimension mismatch");
  if (t >= img.T) throw ParameterError("timestep beyond the encrypted horizon");
  if (img.mode == EncodingMode::kEncodeThenEncrypt) {
    if (img.cts.size() != img.T * img.n) throw DataError("encrypted spike count mismatch");
    return {img.cts.begin() + static_cast<std::ptrdiff_t>(t * img.n),
            img.cts.begin() + static_cast<std::ptrdiff_t>((t + 1) * img.n)};
  }
  if (img.cts.size() != img.n) throw DataError("encrypted pixel count mismatch");
  // Thresholds are public; regenerate the draws of step t.
  Prng stream = image_stream(img.seed, img.index);
  const auto th = poisson_thresholds(img.n, img.T, stream);
  const std::int64_t c = comparison_scale(model_.p);
  std::vector<LweCiphertext> out;
  out.reserve(img.n);
  for (std::size_t i = 0; i < img.n; ++i) {
    const std::int64_t thr = th[t * img.n + i];
    const LweCiphertext cmp =
        lwe_add_constant(lwe_scalar_mul(img.cts[i], c), -c * thr - (c + 1) / 2);
    out.push_back(fhe_fire(cmp, model_.fire_table, ctx_, ws));
    counter_.add_encoding();
  }
  return out;
}

void FheEvaluator::neuron(const LweCiphertext& I, LweCiphertext& V, LweCiphertext& spike,
                          ExternalProductWorkspace& ws, DebugProbe* probe) const {
  const LweCiphertext H = lwe_add(V, I);
  if (probe && probe->key) {
    const std::int64_t h = lwe_decrypt(H, *probe->key);
    const auto half = static_cast<std::int64_t>(model_.p / 2);
    if (h < model_.v_threshold - half) ++probe->range_violations;
  }
  spike = fhe_fire(lwe_add_constant(H, -model_.v_threshold), model_.fire_table, ctx_, ws);
  counter_.add_fire();
  V = fhe_reset(H, model_.reset_table, ctx_, ws);
  counter_.add_reset();
}

EncryptedStep FheEvaluator::timestep(std::span<const LweCiphertext> in,
                                     EncryptedState& st, ExternalProductWorkspace& ws,
                                     DebugProbe* probe) const {
  if (in.size() != model_.n) throw ParameterError("input spike count mismatch");
  if (st.V1.size() != model_.k || st.V2.size() != model_.m) {
    throw ParameterError("encrypted state shape mismatch");
  }
  EncryptedStep out;
  out.hidden.resize(model_.k);
  out.out.resize(model_.m);
  for (std::size_t i = 0; i < model_.k; ++i) {
    const std::span<const std::int64_t> row(model_.W1.data() + i * model_.n, model_.n);
    neuron(encrypted_multisum(row, in), st.V1[i], out.hidden[i], ws, probe);
  }
  for (std::size_t i = 0; i < model_.m; ++i) {
    const std::span<const std::int64_t> row(model_.W2.data() + i * model_.k, model_.k);
    neuron(encrypted_multisum(row, out.hidden), st.V2[i], out.out[i], ws, probe);
  }
  return out;
}

FheEvaluator::Result FheEvaluator::predict(const EncryptedImage& img,
                                           ExternalProductWorkspace& ws,
                                           DebugProbe* probe) const {
  model_.check_steps(img.T);
  if (img.mode != model_.mode) throw ConfigError("encrypted image uses a different mode");
  EncryptedState st = initial_state();
  Result r;
  const PlaintextParams pt{model_.p};
  r.scores.assign(model_.m, lwe_trivial(0, ctx_.params().n, ctx_.params().Q(), pt));
  for (std::size_t t = 0; t < img.T; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const auto in = input_spikes(img, t, ws);
    const EncryptedStep step = timestep(in, st, ws, probe);
    for (std::size_t i = 0; i < model_.m; ++i) lwe_add_inplace(r.scores[i], step.out[i]);
    r.step_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return r;
}

std::vector<FheEvaluator::Result> FheEvaluator::predict_batch(
    const std::vector<EncryptedImage>& imgs, std::size_t workers) const {
  std::vector<Result> out(imgs.size());
  workers = std::max<std::size_t>(1, std::min(workers, imgs.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    ExternalProductWorkspace ws;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= imgs.size()) return;
      try {
        out[i] = predict(imgs[i], ws);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = imgs.size();
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

DecryptedScores decrypt_scores(const std::vector<LweCiphertext>& scores,
                               const LweSecretKey& key) {
  DecryptedScores d;
  std::vector<double> v;
  for (const auto& ct : scores) {
    const std::int64_t s = lwe_decrypt(ct, key);
    d.counts.push_back(s / 2);
    v.push_back(static_cast<double>(s));
  }
  d.label = argmax(v);
  return d;
}

}  // namespace disnn
