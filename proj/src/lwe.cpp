#include "disnn/lwe.hpp"

#include <cmath>
#include <sstream>

#include "disnn/errors.hpp"

namespace disnn {

namespace {

bool is_pow2(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

std::uint64_t mul_mod(std::uint64_t x, std::int64_t w, std::uint64_t q) {
  if (is_pow2(q)) {
    return (x * static_cast<std::uint64_t>(w)) & (q - 1);
  }
  __int128 r = static_cast<__int128>(x) * w % static_cast<__int128>(q);
  if (r < 0) r += q;
  return static_cast<std::uint64_t>(r);
}

void check_budget(const LweCiphertext& ct, const char* op) {
  const double limit = noise_limit(ct);
  if (ct.noise_budget > limit) {
    std::ostringstream os;
    os << op << ": predicted noise " << ct.noise_budget
       << " exceeds the decryption bound q/(2p) = " << limit;
    throw NoiseBudgetError(os.str());
  }
}

void require_compatible(const LweCiphertext& x, const LweCiphertext& y) {
  if (x.n() != y.n() || x.q != y.q || x.p != y.p) {
    throw ParameterError("LWE ciphertext shape mismatch");
  }
}

}  // namespace

void PlaintextParams::validate(std::uint64_t q) const {
  if (p < 2 || p % 2 != 0) throw ParameterError("p must be even and >= 2");
  if (p > q) throw ParameterError("p must not exceed q");
}

std::int64_t PlaintextParams::wrap(std::int64_t m) const {
  const auto pp = static_cast<std::int64_t>(p);
  std::int64_t r = m % pp;
  if (r < 0) r += pp;
  if (r > pp / 2) r -= pp;
  return r;
}

LweSecretKey lwe_keygen(std::size_t n, SecretDist dist, Prng& rng) {
  if (n < 1) throw ParameterError("LWE dimension must be positive");
  LweSecretKey key;
  key.s.resize(n);
  for (auto& v : key.s) {
    if (dist == SecretDist::kBinary) {
      v = rng.bit() ? 1 : 0;
    } else {
      v = static_cast<std::int64_t>(rng.uniform(3)) - 1;
    }
  }
  return key;
}

std::uint64_t encode_message(std::int64_t m, std::uint64_t q, std::uint64_t p) {
  const __int128 num = static_cast<__int128>(q) * m;
  const __int128 mag = num < 0 ? -num : num;
  __int128 r = (mag + static_cast<__int128>(p / 2)) / p;
  if (num < 0) r = -r;
  r %= static_cast<__int128>(q);
  if (r < 0) r += q;
  return static_cast<std::uint64_t>(r);
}

LweCiphertext lwe_encrypt(std::int64_t m, const LweSecretKey& key,
                          std::uint64_t q, const PlaintextParams& pt,
                          double sigma, Prng& rng) {
  return lwe_encrypt(m, key, q, pt, sigma, rng, rng);
}

std::vector<std::uint64_t> lwe_expand_mask(std::size_t n, std::uint64_t q,
                                           Prng& mask_rng) {
  std::vector<std::uint64_t> a(n);
  for (auto& x : a) x = mask_rng.uniform(q);
  return a;
}

LweCiphertext lwe_encrypt(std::int64_t m, const LweSecretKey& key,
                          std::uint64_t q, const PlaintextParams& pt,
                          double sigma, Prng& mask_rng, Prng& noise_rng) {
  pt.validate(q);
  if (m < pt.min_message() || m > pt.max_message()) {
    std::ostringstream os;
    os << "message " << m << " outside Z_" << pt.p;
    throw DomainError(os.str());
  }
  LweCiphertext ct;
  ct.q = q;
  ct.p = pt.p;
  ct.a.resize(key.n());
  std::uint64_t dot = 0;
  for (std::size_t i = 0; i < key.n(); ++i) {
    ct.a[i] = mask_rng.uniform(q);
    dot = mod_add(dot, mul_mod(ct.a[i], key.s[i], q), q);
  }
  const std::uint64_t e = mod_reduce_signed(noise_rng.gaussian(sigma), q);
  ct.b = mod_add(mod_add(dot, e, q), encode_message(m, q, pt.p), q);
  ct.noise_budget = sigma;
  return ct;
}

LweCiphertext lwe_trivial(std::int64_t m, std::size_t n, std::uint64_t q,
                          const PlaintextParams& pt) {
  pt.validate(q);
  LweCiphertext ct;
  ct.q = q;
  ct.p = pt.p;
  ct.a.assign(n, 0);
  ct.b = encode_message(pt.wrap(m), q, pt.p);
  return ct;
}

std::uint64_t lwe_phase(const LweCiphertext& ct, const LweSecretKey& key) {
  if (ct.n() != key.n()) throw ParameterError("key dimension mismatch");
  std::uint64_t dot = 0;
  for (std::size_t i = 0; i < key.n(); ++i) {
    dot = mod_add(dot, mul_mod(ct.a[i], key.s[i], ct.q), ct.q);
  }
  return mod_sub(ct.b, dot, ct.q);
}

std::int64_t lwe_decrypt(const LweCiphertext& ct, const LweSecretKey& key) {
  const std::int64_t phase = center(lwe_phase(ct, key), ct.q);
  const __int128 num = static_cast<__int128>(phase) * ct.p;
  const __int128 mag = num < 0 ? -num : num;
  __int128 r = (mag + static_cast<__int128>(ct.q / 2)) / ct.q;
  if (num < 0) r = -r;
  return PlaintextParams{ct.p}.wrap(static_cast<std::int64_t>(r));
}

std::int64_t lwe_measured_noise(const LweCiphertext& ct,
                                const LweSecretKey& key) {
  const std::int64_t m = lwe_decrypt(ct, key);
  const std::uint64_t diff =
      mod_sub(lwe_phase(ct, key), encode_message(m, ct.q, ct.p), ct.q);
  return center(diff, ct.q);
}

double noise_limit(const LweCiphertext& ct) {
  return static_cast<double>(ct.q) / (2.0 * static_cast<double>(ct.p));
}

LweCiphertext lwe_scalar_mul(const LweCiphertext& ct, std::int64_t w) {
  LweCiphertext out;
  out.q = ct.q;
  out.p = ct.p;
  out.a.resize(ct.n());
  for (std::size_t i = 0; i < ct.n(); ++i) out.a[i] = mul_mod(ct.a[i], w, ct.q);
  out.b = mul_mod(ct.b, w, ct.q);
  out.noise_budget = ct.noise_budget * std::fabs(static_cast<double>(w));
  check_budget(out, "scalar multiply");
  return out;
}

void lwe_add_inplace(LweCiphertext& x, const LweCiphertext& y) {
  require_compatible(x, y);
  for (std::size_t i = 0; i < x.n(); ++i) x.a[i] = mod_add(x.a[i], y.a[i], x.q);
  x.b = mod_add(x.b, y.b, x.q);
  x.noise_budget = std::hypot(x.noise_budget, y.noise_budget);
  check_budget(x, "add");
}

LweCiphertext lwe_add(const LweCiphertext& x, const LweCiphertext& y) {
  LweCiphertext out = x;
  lwe_add_inplace(out, y);
  return out;
}

LweCiphertext lwe_sub(const LweCiphertext& x, const LweCiphertext& y) {
  require_compatible(x, y);
  LweCiphertext out = x;
  for (std::size_t i = 0; i < x.n(); ++i) out.a[i] = mod_sub(x.a[i], y.a[i], x.q);
  out.b = mod_sub(x.b, y.b, x.q);
  out.noise_budget = std::hypot(x.noise_budget, y.noise_budget);
  check_budget(out, "subtract");
  return out;
}

LweCiphertext lwe_add_constant(const LweCiphertext& ct, std::int64_t c) {
  LweCiphertext out = ct;
  out.b = mod_add(ct.b, encode_message(c, ct.q, ct.p), ct.q);
  return out;
}

LweCiphertext multisum(std::span<const std::int64_t> weights,
                       std::span<const LweCiphertext> cts) {
  if (weights.size() != cts.size()) {
    throw ParameterError("multisum weight/ciphertext length mismatch");
  }
  if (cts.empty()) throw ParameterError("multisum needs at least one term");
  const LweCiphertext& first = cts.front();
  const std::uint64_t q = first.q;
  const std::size_t n = first.n();
  double budget = 0.0;
  for (std::size_t j = 0; j < cts.size(); ++j) {
    require_compatible(first, cts[j]);
    budget += std::fabs(static_cast<double>(weights[j])) * cts[j].noise_budget;
  }

  LweCiphertext out;
  out.q = q;
  out.p = first.p;
  out.noise_budget = budget;
  check_budget(out, "multisum");
  out.a.assign(n, 0);
  if (is_pow2(q)) {
    // Wrapping 64-bit arithmetic is exact modulo a power of two.
    std::uint64_t b = 0;
    std::uint64_t* acc = out.a.data();
    for (std::size_t j = 0; j < cts.size(); ++j) {
      const auto w = static_cast<std::uint64_t>(weights[j]);
      if (w == 0) continue;
      const std::uint64_t* a = cts[j].a.data();
      for (std::size_t i = 0; i < n; ++i) acc[i] += w * a[i];
      b += w * cts[j].b;
    }
    for (auto& v : out.a) v &= q - 1;
    out.b = b & (q - 1);
  } else {
    for (std::size_t j = 0; j < cts.size(); ++j) {
      if (weights[j] == 0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        out.a[i] = mod_add(out.a[i], mul_mod(cts[j].a[i], weights[j], q), q);
      }
      out.b = mod_add(out.b, mul_mod(cts[j].b, weights[j], q), q);
    }
  }
  return out;
}

}  // namespace disnn
