#include "disnn/ring.hpp"

#include <bit>
#include <cmath>

#include "disnn/errors.hpp"
#include "disnn/fft.hpp"

namespace disnn {

void RingParams::validate() const {
  if (N < 4 || (N & (N - 1)) != 0) {
    throw ParameterError("ring degree N must be a power of two >= 4");
  }
  if (Q < 2 || Q >= (std::uint64_t{1} << 62)) {
    throw ParameterError("ring modulus Q must lie in [2, 2^62)");
  }
}

std::uint64_t mod_reduce_signed(std::int64_t x, std::uint64_t q) {
  const std::int64_t r = x % static_cast<std::int64_t>(q);
  return r < 0 ? static_cast<std::uint64_t>(r + static_cast<std::int64_t>(q))
               : static_cast<std::uint64_t>(r);
}

std::int64_t center(std::uint64_t x, std::uint64_t q) {
  return x >= (q + 1) / 2 ? static_cast<std::int64_t>(x) -
                                static_cast<std::int64_t>(q)
                          : static_cast<std::int64_t>(x);
}

NegacyclicPoly::NegacyclicPoly(const RingParams& params)
    : params_(params), coeffs_(params.N, 0) {
  params_.validate();
}

NegacyclicPoly::NegacyclicPoly(const RingParams& params,
                               std::vector<std::uint64_t> coeffs)
    : params_(params), coeffs_(std::move(coeffs)) {
  params_.validate();
  if (coeffs_.size() != params_.N) {
    throw ParameterError("polynomial must have exactly N coefficients");
  }
  for (auto& c : coeffs_) c %= params_.Q;
}

NegacyclicPoly NegacyclicPoly::from_signed(
    const RingParams& params, const std::vector<std::int64_t>& coeffs) {
  NegacyclicPoly out(params);
  if (coeffs.size() != params.N) {
    throw ParameterError("polynomial must have exactly N coefficients");
  }
  for (std::size_t i = 0; i < params.N; ++i) {
    out.coeffs_[i] = mod_reduce_signed(coeffs[i], params.Q);
  }
  return out;
}

NegacyclicPoly NegacyclicPoly::monomial(const RingParams& params,
                                        std::int64_t k) {
  NegacyclicPoly one(params);
  one.coeffs_[0] = 1 % params.Q;
  return monomial_mul(one, k);
}

std::int64_t NegacyclicPoly::centered(std::size_t i) const {
  return center(coeffs_[i], params_.Q);
}

namespace {

void require_same(const NegacyclicPoly& a, const NegacyclicPoly& b) {
  if (!(a.params() == b.params())) {
    throw ParameterError("ring parameter mismatch");
  }
}

constexpr int kLimbBits = 16;

std::size_t limb_count(std::uint64_t q) {
  return static_cast<std::size_t>(std::bit_width(q)) / kLimbBits + 1;
}

// Split centered coefficients into balanced base-2^16 limbs.
std::vector<std::vector<std::int64_t>> split_limbs(const NegacyclicPoly& a,
                                                   std::size_t limbs) {
  const std::size_t n = a.size();
  std::vector<std::vector<std::int64_t>> out(limbs,
                                             std::vector<std::int64_t>(n));
  constexpr std::int64_t base = std::int64_t{1} << kLimbBits;
  constexpr std::int64_t half = base / 2;
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t x = a.centered(i);
    for (std::size_t k = 0; k < limbs; ++k) {
      std::int64_t d = x & (base - 1);
      if (d >= half) d -= base;
      out[k][i] = d;
      x = (x - d) >> kLimbBits;
    }
  }
  return out;
}

}  // namespace

NegacyclicPoly poly_add(const NegacyclicPoly& a, const NegacyclicPoly& b) {
  require_same(a, b);
  NegacyclicPoly out(a.params());
  const std::uint64_t q = a.params().Q;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = mod_add(a[i], b[i], q);
  return out;
}

NegacyclicPoly poly_sub(const NegacyclicPoly& a, const NegacyclicPoly& b) {
  require_same(a, b);
  NegacyclicPoly out(a.params());
  const std::uint64_t q = a.params().Q;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = mod_sub(a[i], b[i], q);
  return out;
}

NegacyclicPoly poly_neg(const NegacyclicPoly& a) {
  NegacyclicPoly out(a.params());
  const std::uint64_t q = a.params().Q;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] == 0 ? 0 : q - a[i];
  return out;
}

NegacyclicPoly poly_mul(const NegacyclicPoly& a, const NegacyclicPoly& b) {
  require_same(a, b);
  const RingParams& rp = a.params();
  const std::size_t n = rp.N;
  const std::size_t limbs = limb_count(rp.Q);
  const auto engine = FftEngine::get(n);

  const auto la = split_limbs(a, limbs);
  const auto lb = split_limbs(b, limbs);
  std::vector<Spectrum> sa(limbs), sb(limbs);
  for (std::size_t k = 0; k < limbs; ++k) {
    engine->forward_signed(la[k].data(), sa[k]);
    engine->forward_signed(lb[k].data(), sb[k]);
  }

  std::vector<__int128> acc(n, 0);
  Spectrum group(n / 2);
  std::vector<double> coeff(n);
  for (std::size_t s = 0; s + 1 < 2 * limbs; ++s) {
    group.zero();
    for (std::size_t i = 0; i < limbs; ++i) {
      if (s < i || s - i >= limbs) continue;
      FftEngine::mul_acc(group, sa[i], sb[s - i]);
    }
    engine->inverse(group, coeff.data());
    const __int128 shift = static_cast<__int128>(1) << (kLimbBits * s);
    for (std::size_t j = 0; j < n; ++j) {
      const auto r = static_cast<__int128>(std::llround(coeff[j]));
      acc[j] += (r * shift) % static_cast<__int128>(rp.Q);
    }
  }

  NegacyclicPoly out(rp);
  const auto q = static_cast<__int128>(rp.Q);
  for (std::size_t j = 0; j < n; ++j) {
    __int128 r = acc[j] % q;
    if (r < 0) r += q;
    out[j] = static_cast<std::uint64_t>(r);
  }
  return out;
}

NegacyclicPoly poly_mul_schoolbook(const NegacyclicPoly& a,
                                   const NegacyclicPoly& b) {
  require_same(a, b);
  const RingParams& rp = a.params();
  const std::size_t n = rp.N;
  const auto q = static_cast<unsigned __int128>(rp.Q);
  std::vector<unsigned __int128> pos(n, 0), neg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const unsigned __int128 prod =
          static_cast<unsigned __int128>(a[i]) * b[j] % q;
      const std::size_t k = i + j;
      if (k < n) {
        pos[k] += prod;
      } else {
        neg[k - n] += prod;
      }
    }
  }
  NegacyclicPoly out(rp);
  for (std::size_t k = 0; k < n; ++k) {
    const auto p = static_cast<std::uint64_t>(pos[k] % q);
    const auto m = static_cast<std::uint64_t>(neg[k] % q);
    out[k] = mod_sub(p, m, rp.Q);
  }
  return out;
}

NegacyclicPoly monomial_mul(const NegacyclicPoly& a, std::int64_t k) {
  const RingParams& rp = a.params();
  const auto two_n = static_cast<std::int64_t>(2 * rp.N);
  std::int64_t e = k % two_n;
  if (e < 0) e += two_n;
  const auto n = static_cast<std::int64_t>(rp.N);
  NegacyclicPoly out(rp);
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t j = i + e;
    bool flip = false;
    while (j >= n) {
      j -= n;
      flip = !flip;
    }
    const std::uint64_t c = a[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(j)] = flip && c != 0 ? rp.Q - c : c;
  }
  return out;
}

}  // namespace disnn
