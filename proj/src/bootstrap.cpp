#include "disnn/bootstrap.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>

#include "disnn/errors.hpp"

namespace disnn {

std::int64_t ProgramFunction::operator()(std::int64_t m) const {
  const auto p = static_cast<std::int64_t>(table_.size());
  std::int64_t r = m % p;
  if (r < 0) r += p;
  return table_[static_cast<std::size_t>(r)];
}

ProgramFunction make_program_function(std::vector<std::int64_t> table) {
  const std::uint64_t p = table.size();
  if (p < 2 || (p & (p - 1)) != 0) {
    throw ParameterError("program function length must be a power of two >= 2");
  }
  const PlaintextParams pt{p};
  for (auto& v : table) v = pt.wrap(v);
  const std::size_t half = p / 2;
  for (std::size_t v = 0; v < p; ++v) {
    const std::size_t w = (v + half) % p;
    if (table[w] != pt.wrap(-table[v])) {
      std::ostringstream os;
      os << "negacyclic constraint g(v + p/2) = -g(v) fails at v = "
         << pt.wrap(static_cast<std::int64_t>(v)) << " (g(v) = " << table[v]
         << ", g(v + p/2) = " << table[w] << ")";
      throw ValidationError(os.str());
    }
  }
  ProgramFunction g;
  g.table_ = std::move(table);
  return g;
}

ProgramFunction sign_function(std::uint64_t p) {
  return tabulate(p, [](std::int64_t m) -> std::int64_t { return m >= 0 ? 1 : -1; });
}

ProgramFunction reset_function(std::uint64_t p, std::int64_t vth) {
  const auto half = static_cast<std::int64_t>(p / 2);
  if (vth <= 0 || vth >= half) {
    throw DomainError("reset threshold must lie in (0, p/2)");
  }
  return tabulate(p, [=](std::int64_t m) -> std::int64_t {
    if (m >= vth) return 0;
    if (m >= 0) return m;
    if (m >= vth - half) return 0;
    return -(m + half);
  });
}

SecretKeys generate_secret_keys(const CryptoParams& params, Prng& rng) {
  params.validate();
  if (params.secret != SecretDist::kBinary) {
    throw ParameterError("blind rotation requires binary secrets");
  }
  SecretKeys sk;
  sk.params = params;
  sk.lwe = lwe_keygen(params.n, params.secret, rng);
  sk.ring = ring_keygen(params.ring(), params.secret, rng);
  return sk;
}

KeySwitchKey make_key_switch_key(const RingSecretKey& from,
                                 const LweSecretKey& to,
                                 const CryptoParams& params, Prng& rng) {
  KeySwitchKey k;
  k.N = from.digits.size();
  k.n = to.n();
  k.bits = params.ks_bits;
  k.levels = params.ks_levels();
  k.Q = params.Q();
  const std::uint64_t mask = k.Q - 1;
  k.data.resize(k.N * k.levels * (k.n + 1));
  for (std::size_t i = 0; i < k.N; ++i) {
    for (unsigned j = 0; j < k.levels; ++j) {
      std::uint64_t* row = k.data.data() + (i * k.levels + j) * (k.n + 1);
      std::uint64_t dot = 0;
      for (std::size_t t = 0; t < k.n; ++t) {
        row[t] = rng.uniform(k.Q);
        dot += row[t] * static_cast<std::uint64_t>(to.s[t]);
      }
      const std::uint64_t g = std::uint64_t{1} << (k.bits * (k.levels - 1 - j));
      const auto e = static_cast<std::uint64_t>(rng.gaussian(params.noise.sigma_lwe));
      const auto z = static_cast<std::uint64_t>(from.digits[i]);
      row[k.n] = (dot + e + z * g) & mask;
    }
  }
  return k;
}

EvalKey generate_eval_key(const SecretKeys& sk, Prng& rng) {
  const CryptoParams& params = sk.params;
  EvalKey key;
  key.params = params;
  const Gadget gadget{params.bg_bits, params.gadget_levels(), params.Q()};
  key.ek.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    NegacyclicPoly mu(params.ring());
    mu[0] = mod_reduce_signed(sk.lwe.s[i], params.Q());
    key.ek.push_back(
        rgsw_encrypt(mu, sk.ring, gadget, params.noise.sigma_ring, rng));
  }
  key.ksk = make_key_switch_key(sk.ring, sk.lwe, params, rng);
  return key;
}

double bootstrap_output_noise(const CryptoParams& params) {
  const double bg = std::ldexp(1.0, static_cast<int>(params.bg_bits));
  const double bks = std::ldexp(1.0, static_cast<int>(params.ks_bits));
  const double n = static_cast<double>(params.n);
  const double N = static_cast<double>(params.N);
  const double L = params.gadget_levels();
  const double d = params.ks_levels();
  const double sr = params.noise.sigma_ring;
  const double sl = params.noise.sigma_lwe;
  const double var_br = n * 2.0 * L * N * (bg * bg / 12.0) * sr * sr;
  const double var_ks = N * d * (bks * bks / 12.0) * sl * sl;
  return std::sqrt(var_br + var_ks);
}

BootstrapContext::BootstrapContext(const EvalKey& key)
    : params_(key.params), ksk_(key.ksk) {
  params_.validate();
  if (key.ek.size() != params_.n) {
    throw ParameterError("bootstrapping key length must equal n");
  }
  if (ksk_.N != params_.N || ksk_.n != params_.n ||
      ksk_.bits != params_.ks_bits || ksk_.levels != params_.ks_levels() ||
      ksk_.Q != params_.Q()) {
    throw ParameterError("key-switch key does not match parameters");
  }
  ek_.reserve(key.ek.size());
  for (const auto& c : key.ek) {
    if (c.gadget.bits != params_.bg_bits ||
        c.gadget.levels != params_.gadget_levels() ||
        c.rows.size() != 2 * params_.gadget_levels()) {
      throw ParameterError("bootstrapping key gadget does not match parameters");
    }
    ek_.push_back(rgsw_to_spectrum(c));
  }
  output_noise_ = bootstrap_output_noise(params_);
}

RlweCiphertext BootstrapContext::acc_initialize(const ProgramFunction& g,
                                                std::int64_t b) const {
  const RingParams rp = params_.ring();
  const std::uint64_t p = g.p();
  if (p > 2 * rp.N) throw ParameterError("p must not exceed 2N");
  NegacyclicPoly tp(rp);
  for (std::size_t i = 0; i < rp.N; ++i) {
    const auto slot = static_cast<std::int64_t>(i * p / (2 * rp.N));
    tp[i] = encode_message(g(slot), rp.Q, p);
  }
  return rlwe_trivial(monomial_mul(tp, -b));
}

SwitchedLwe BootstrapContext::mod_switch(const LweCiphertext& ct) const {
  const unsigned log_2n = static_cast<unsigned>(std::bit_width(2 * params_.N) - 1);
  const unsigned shift = params_.log_q - log_2n;
  const std::uint64_t mask = 2 * params_.N - 1;
  const std::uint64_t round = shift == 0 ? 0 : std::uint64_t{1} << (shift - 1);
  SwitchedLwe out;
  out.a.resize(ct.n());
  for (std::size_t i = 0; i < ct.n(); ++i) {
    out.a[i] = static_cast<std::uint32_t>(((ct.a[i] + round) >> shift) & mask);
  }
  out.b = static_cast<std::uint32_t>(((ct.b + round) >> shift) & mask);
  return out;
}

namespace {

// dst = X^k * src - src, k in [0, 2N).
void rotate_minus(NegacyclicPoly& dst, const NegacyclicPoly& src,
                  std::uint32_t k, std::uint64_t mask) {
  const std::size_t n = src.size();
  const bool neg = k >= n;
  const std::size_t s = neg ? k - n : k;
  const std::uint64_t* in = src.coeffs().data();
  for (std::size_t i = 0; i < n - s; ++i) {
    const std::uint64_t v = neg ? (0 - in[i]) : in[i];
    dst[i + s] = (v - in[i + s]) & mask;
  }
  for (std::size_t i = n - s; i < n; ++i) {
    const std::uint64_t v = neg ? in[i] : (0 - in[i]);
    dst[i + s - n] = (v - in[i + s - n]) & mask;
  }
}

}  // namespace

void BootstrapContext::blind_rotate(RlweCiphertext& acc, const SwitchedLwe& ct,
                                    ExternalProductWorkspace& ws) const {
  if (ct.a.size() != ek_.size()) {
    throw ParameterError("ciphertext dimension does not match bootstrapping key");
  }
  const std::uint64_t mask = params_.Q() - 1;
  RlweCiphertext diff{NegacyclicPoly(acc.a.params()),
                      NegacyclicPoly(acc.a.params())};
  for (std::size_t i = 0; i < ek_.size(); ++i) {
    const std::uint32_t k = ct.a[i];
    if (k == 0) continue;
    rotate_minus(diff.a, acc.a, k, mask);
    rotate_minus(diff.b, acc.b, k, mask);
    external_product_acc(acc, diff, ek_[i], ws);
  }
}

LweCiphertext BootstrapContext::sample_extract(const RlweCiphertext& acc,
                                               std::uint64_t p) const {
  const std::size_t n = acc.a.size();
  const std::uint64_t q = acc.a.params().Q;
  LweCiphertext out;
  out.q = q;
  out.p = p;
  out.a.resize(n);
  out.a[0] = acc.a[0];
  for (std::size_t j = 1; j < n; ++j) {
    out.a[j] = acc.a[n - j] == 0 ? 0 : q - acc.a[n - j];
  }
  out.b = acc.b[0];
  return out;
}

LweCiphertext BootstrapContext::key_switch(const LweCiphertext& ct) const {
  if (ct.n() != ksk_.N || ct.q != ksk_.Q) {
    throw ParameterError("key switch input does not match the key-switch key");
  }
  const std::size_t n = ksk_.n;
  const std::uint64_t mask = ksk_.Q - 1;
  const Gadget gadget{ksk_.bits, ksk_.levels, ksk_.Q};
  std::vector<std::uint64_t> acc(n, 0);
  std::uint64_t b = ct.b;
  std::int64_t digits[64];
  for (std::size_t i = 0; i < ksk_.N; ++i) {
    gadget.decompose(ct.a[i], digits);
    for (unsigned j = 0; j < ksk_.levels; ++j) {
      if (digits[j] == 0) continue;
      const auto d = static_cast<std::uint64_t>(digits[j]);
      const std::uint64_t* row = ksk_.row(i, j);
      std::uint64_t* out = acc.data();
      for (std::size_t t = 0; t < n; ++t) out[t] -= d * row[t];
      b -= d * row[n];
    }
  }
  LweCiphertext out;
  out.q = ct.q;
  out.p = ct.p;
  out.a.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.a[t] = acc[t] & mask;
  out.b = b & mask;
  out.noise_budget = ct.noise_budget;
  return out;
}

LweCiphertext BootstrapContext::bootstrap(const LweCiphertext& ct,
                                          const ProgramFunction& g,
                                          ExternalProductWorkspace& ws) const {
  const auto start = std::chrono::steady_clock::now();
  if (ct.n() != params_.n || ct.q != params_.Q()) {
    throw ParameterError("bootstrap input does not match parameters");
  }
  if (g.p() != ct.p) {
    throw ParameterError("program function size differs from ciphertext p");
  }
  LweCiphertext shifted = ct;
  shifted.b = (ct.b + params_.Q() / (2 * ct.p)) & (params_.Q() - 1);
  const SwitchedLwe sw = mod_switch(shifted);
  RlweCiphertext acc = acc_initialize(g, sw.b);
  blind_rotate(acc, sw, ws);
  LweCiphertext out = key_switch(sample_extract(acc, ct.p));
  out.noise_budget = output_noise_;
  const auto elapsed = std::chrono::steady_clock::now() - start;
  count_.fetch_add(1, std::memory_order_relaxed);
  nanos_.fetch_add(static_cast<std::uint64_t>(
                       std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed)
                           .count()),
                   std::memory_order_relaxed);
  return out;
}

LweCiphertext BootstrapContext::bootstrap(const LweCiphertext& ct,
                                          const ProgramFunction& g) const {
  ExternalProductWorkspace ws;
  return bootstrap(ct, g, ws);
}

double BootstrapContext::mod_switch_noise() const {
  return std::sqrt((static_cast<double>(params_.n) / 2.0 + 1.0) / 12.0);
}

BootstrapStats BootstrapContext::stats() const {
  return BootstrapStats{count_.load(), static_cast<double>(nanos_.load()) * 1e-9};
}

void BootstrapContext::reset_stats() const {
  count_.store(0);
  nanos_.store(0);
}

}  // namespace disnn
