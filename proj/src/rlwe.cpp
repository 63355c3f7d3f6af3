#include "disnn/rlwe.hpp"

#include <cmath>

#include "disnn/errors.hpp"
#include "disnn/lwe.hpp"

namespace disnn {

RingSecretKey ring_keygen(const RingParams& rp, SecretDist dist, Prng& rng) {
  const LweSecretKey flat = lwe_keygen(rp.N, dist, rng);
  RingSecretKey key;
  key.digits = flat.s;
  key.z = NegacyclicPoly::from_signed(rp, flat.s);
  return key;
}

namespace {

NegacyclicPoly uniform_poly(const RingParams& rp, Prng& rng) {
  NegacyclicPoly a(rp);
  for (std::size_t i = 0; i < rp.N; ++i) a[i] = rng.uniform(rp.Q);
  return a;
}

NegacyclicPoly gaussian_poly(const RingParams& rp, double sigma, Prng& rng) {
  NegacyclicPoly e(rp);
  for (std::size_t i = 0; i < rp.N; ++i) {
    e[i] = mod_reduce_signed(rng.gaussian(sigma), rp.Q);
  }
  return e;
}

void require_pow2_gadget(const Gadget& g) {
  if (g.bits == 0 || g.levels == 0 || g.bits * g.levels >= 64 ||
      g.Q != (std::uint64_t{1} << (g.bits * g.levels))) {
    throw ParameterError("gadget must satisfy Q = 2^(bits * levels)");
  }
}

}  // namespace

RlweCiphertext rlwe_encrypt(const NegacyclicPoly& m, const RingSecretKey& key,
                            double sigma, Prng& rng) {
  const RingParams& rp = key.z.params();
  if (!(m.params() == rp)) throw ParameterError("ring parameter mismatch");
  RlweCiphertext ct;
  ct.a = uniform_poly(rp, rng);
  ct.b = poly_add(poly_add(poly_mul(ct.a, key.z), gaussian_poly(rp, sigma, rng)),
                  m);
  return ct;
}

RlweCiphertext rlwe_trivial(const NegacyclicPoly& m) {
  return RlweCiphertext{NegacyclicPoly(m.params()), m};
}

NegacyclicPoly rlwe_phase(const RlweCiphertext& ct, const RingSecretKey& key) {
  return poly_sub(ct.b, poly_mul(ct.a, key.z));
}

RlweCiphertext rlwe_encrypt_message(const std::vector<std::int64_t>& m,
                                    std::uint64_t p, const RingSecretKey& key,
                                    double sigma, Prng& rng) {
  const RingParams& rp = key.z.params();
  if (m.size() != rp.N) throw ParameterError("message length must equal N");
  NegacyclicPoly enc(rp);
  for (std::size_t i = 0; i < rp.N; ++i) enc[i] = encode_message(m[i], rp.Q, p);
  return rlwe_encrypt(enc, key, sigma, rng);
}

std::vector<std::int64_t> rlwe_decrypt_message(const RlweCiphertext& ct,
                                               std::uint64_t p,
                                               const RingSecretKey& key) {
  const NegacyclicPoly phase = rlwe_phase(ct, key);
  const RingParams& rp = phase.params();
  std::vector<std::int64_t> out(rp.N);
  const PlaintextParams pt{p};
  for (std::size_t i = 0; i < rp.N; ++i) {
    const __int128 num = static_cast<__int128>(phase.centered(i)) * p;
    const __int128 mag = num < 0 ? -num : num;
    __int128 r = (mag + static_cast<__int128>(rp.Q / 2)) / rp.Q;
    if (num < 0) r = -r;
    out[i] = pt.wrap(static_cast<std::int64_t>(r));
  }
  return out;
}

std::uint64_t Gadget::weight(unsigned i) const {
  return std::uint64_t{1} << (bits * (levels - 1 - i));
}

void Gadget::decompose(std::uint64_t x, std::int64_t* digits) const {
  const std::uint64_t base = std::uint64_t{1} << bits;
  const std::uint64_t half = base >> 1;
  x &= Q - 1;
  for (unsigned k = levels; k-- > 0;) {
    std::uint64_t d = x & (base - 1);
    x >>= bits;
    if (d >= half) {
      digits[k] = static_cast<std::int64_t>(d) - static_cast<std::int64_t>(base);
      x += 1;
    } else {
      digits[k] = static_cast<std::int64_t>(d);
    }
  }
}

void Gadget::decompose(const NegacyclicPoly& a,
                       std::vector<std::vector<std::int64_t>>& out) const {
  const std::size_t n = a.size();
  out.resize(levels);
  for (auto& v : out) v.resize(n);
  const std::uint64_t base = std::uint64_t{1} << bits;
  const std::uint64_t half = base >> 1;
  for (std::size_t j = 0; j < n; ++j) {
    std::uint64_t x = a[j] & (Q - 1);
    for (unsigned k = levels; k-- > 0;) {
      const std::uint64_t d = x & (base - 1);
      x >>= bits;
      const std::uint64_t carry = d >= half;
      out[k][j] = static_cast<std::int64_t>(d) -
                  static_cast<std::int64_t>(carry * base);
      x += carry;
    }
  }
}

RgswCiphertext rgsw_encrypt(const NegacyclicPoly& mu, const RingSecretKey& key,
                            const Gadget& gadget, double sigma, Prng& rng) {
  require_pow2_gadget(gadget);
  const RingParams& rp = key.z.params();
  if (rp.Q != gadget.Q) throw ParameterError("gadget modulus mismatch");
  RgswCiphertext c;
  c.gadget = gadget;
  const NegacyclicPoly zero(rp);
  c.rows.reserve(2 * gadget.levels);
  for (unsigned part = 0; part < 2; ++part) {
    for (unsigned i = 0; i < gadget.levels; ++i) {
      RlweCiphertext row = rlwe_encrypt(zero, key, sigma, rng);
      NegacyclicPoly scaled(rp);
      const std::uint64_t g = gadget.weight(i);
      for (std::size_t j = 0; j < rp.N; ++j) {
        scaled[j] = (mu[j] * g) & (rp.Q - 1);
      }
      if (part == 0) {
        row.a = poly_add(row.a, scaled);
      } else {
        row.b = poly_add(row.b, scaled);
      }
      c.rows.push_back(std::move(row));
    }
  }
  return c;
}

RgswCiphertext rgsw_encrypt_monomial(std::int64_t k, const RingSecretKey& key,
                                     const Gadget& gadget, double sigma,
                                     Prng& rng) {
  return rgsw_encrypt(NegacyclicPoly::monomial(key.z.params(), k), key, gadget,
                      sigma, rng);
}

RgswSpectrum rgsw_to_spectrum(const RgswCiphertext& c) {
  RgswSpectrum s;
  s.gadget = c.gadget;
  s.N = c.rows.front().a.size();
  const auto engine = FftEngine::get(s.N);
  std::vector<std::int64_t> tmp(s.N);
  s.a.resize(c.rows.size());
  s.b.resize(c.rows.size());
  for (std::size_t r = 0; r < c.rows.size(); ++r) {
    for (std::size_t j = 0; j < s.N; ++j) tmp[j] = c.rows[r].a.centered(j);
    engine->forward_signed(tmp.data(), s.a[r]);
    for (std::size_t j = 0; j < s.N; ++j) tmp[j] = c.rows[r].b.centered(j);
    engine->forward_signed(tmp.data(), s.b[r]);
  }
  return s;
}

RlweCiphertext external_product(const RlweCiphertext& rlwe,
                                const RgswCiphertext& rgsw) {
  const Gadget& g = rgsw.gadget;
  const RingParams& rp = rlwe.a.params();
  std::vector<std::vector<std::int64_t>> da, db;
  g.decompose(rlwe.a, da);
  g.decompose(rlwe.b, db);
  RlweCiphertext out{NegacyclicPoly(rp), NegacyclicPoly(rp)};
  for (unsigned i = 0; i < g.levels; ++i) {
    const NegacyclicPoly pa = NegacyclicPoly::from_signed(rp, da[i]);
    const NegacyclicPoly pb = NegacyclicPoly::from_signed(rp, db[i]);
    const RlweCiphertext& ra = rgsw.rows[i];
    const RlweCiphertext& rb = rgsw.rows[g.levels + i];
    out.a = poly_add(out.a, poly_add(poly_mul(pa, ra.a), poly_mul(pb, rb.a)));
    out.b = poly_add(out.b, poly_add(poly_mul(pa, ra.b), poly_mul(pb, rb.b)));
  }
  return out;
}

namespace {

// Computes diff ⋄ rgsw into ws.acc_a / ws.acc_b (spectral form).
void external_product_spectral(const RlweCiphertext& diff,
                               const RgswSpectrum& rgsw,
                               ExternalProductWorkspace& ws,
                               const FftEngine& engine) {
  const Gadget& g = rgsw.gadget;
  const std::size_t half = rgsw.N / 2;
  if (ws.acc_a.size() != half) {
    ws.acc_a = Spectrum(half);
    ws.acc_b = Spectrum(half);
    ws.digit_spec = Spectrum(half);
    ws.out.resize(rgsw.N);
  }
  ws.acc_a.zero();
  ws.acc_b.zero();
  g.decompose(diff.a, ws.digits_a);
  g.decompose(diff.b, ws.digits_b);
  for (unsigned i = 0; i < g.levels; ++i) {
    engine.forward_signed(ws.digits_a[i].data(), ws.digit_spec);
    FftEngine::mul_acc(ws.acc_a, ws.digit_spec, rgsw.a[i]);
    FftEngine::mul_acc(ws.acc_b, ws.digit_spec, rgsw.b[i]);
    engine.forward_signed(ws.digits_b[i].data(), ws.digit_spec);
    FftEngine::mul_acc(ws.acc_a, ws.digit_spec, rgsw.a[g.levels + i]);
    FftEngine::mul_acc(ws.acc_b, ws.digit_spec, rgsw.b[g.levels + i]);
  }
}

void add_rounded(NegacyclicPoly& dst, const std::vector<double>& v,
                 std::uint64_t mask) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    const auto r = static_cast<std::uint64_t>(std::llround(v[j]));
    dst[j] = (dst[j] + r) & mask;
  }
}

}  // namespace

RlweCiphertext external_product(const RlweCiphertext& rlwe,
                                const RgswSpectrum& rgsw,
                                ExternalProductWorkspace& ws) {
  RlweCiphertext out{NegacyclicPoly(rlwe.a.params()),
                     NegacyclicPoly(rlwe.a.params())};
  external_product_acc(out, rlwe, rgsw, ws);
  return out;
}

void external_product_acc(RlweCiphertext& acc, const RlweCiphertext& diff,
                          const RgswSpectrum& rgsw,
                          ExternalProductWorkspace& ws) {
  const auto engine = FftEngine::get(rgsw.N);
  external_product_spectral(diff, rgsw, ws, *engine);
  const std::uint64_t mask = rgsw.gadget.Q - 1;
  engine->inverse(ws.acc_a, ws.out.data());
  add_rounded(acc.a, ws.out, mask);
  engine->inverse(ws.acc_b, ws.out.data());
  add_rounded(acc.b, ws.out, mask);
}

}  // namespace disnn
