#include <gtest/gtest.h>

#include <cmath>

#include "disnn/errors.hpp"
#include "disnn/lwe.hpp"
#include "disnn/rlwe.hpp"

using namespace disnn;

namespace {

const std::uint64_t kQ = std::uint64_t{1} << 42;
const double kSigma = 3.19;

}  // namespace

TEST(LweKeygen, DeterministicBinaryAndSized) {
  Prng r1(0), r2(0);
  const auto k1 = lwe_keygen(512, SecretDist::kBinary, r1);
  const auto k2 = lwe_keygen(512, SecretDist::kBinary, r2);
  EXPECT_EQ(k1.s, k2.s);
  EXPECT_EQ(k1.n(), 512u);
  for (auto v : k1.s) EXPECT_TRUE(v == 0 || v == 1);
}

TEST(LweEncrypt, ExhaustiveRoundTrip) {
  Prng rng(1);
  const auto key = lwe_keygen(512, SecretDist::kBinary, rng);
  for (std::uint64_t p : {16u, 1024u}) {
    const PlaintextParams pt{p};
    for (auto m = pt.min_message(); m <= pt.max_message(); ++m) {
      const auto ct = lwe_encrypt(m, key, kQ, pt, kSigma, rng);
      ASSERT_EQ(lwe_decrypt(ct, key), m);
    }
  }
}

TEST(LweEncrypt, ZeroNoiseGivesExactInnerProduct) {
  Prng rng(2);
  const auto key = lwe_keygen(64, SecretDist::kBinary, rng);
  const auto ct = lwe_encrypt(0, key, kQ, PlaintextParams{16}, 0.0, rng);
  std::uint64_t dot = 0;
  for (std::size_t i = 0; i < key.n(); ++i) dot += ct.a[i] * key.s[i];
  EXPECT_EQ(ct.b, dot & (kQ - 1));
}

TEST(LweEncrypt, TenThousandRoundTripsNoFailure) {
  Prng rng(3);
  const auto key = lwe_keygen(512, SecretDist::kBinary, rng);
  const PlaintextParams pt{1024};
  int failures = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto m = static_cast<std::int64_t>(rng.uniform(1024)) - 511;
    failures += lwe_decrypt(lwe_encrypt(m, key, kQ, pt, kSigma, rng), key) != m;
  }
  EXPECT_EQ(failures, 0);
}

TEST(LweEncrypt, DomainChecked) {
  Prng rng(4);
  const auto key = lwe_keygen(8, SecretDist::kBinary, rng);
  EXPECT_THROW(lwe_encrypt(9, key, kQ, PlaintextParams{16}, kSigma, rng), DomainError);
  EXPECT_THROW(lwe_encrypt(-8, key, kQ, PlaintextParams{16}, kSigma, rng), DomainError);
  EXPECT_NO_THROW(lwe_encrypt(8, key, kQ, PlaintextParams{16}, kSigma, rng));
}

TEST(LweLinear, ScalarAndAdd) {
  Prng rng(5);
  const auto key = lwe_keygen(512, SecretDist::kBinary, rng);
  const PlaintextParams pt{1024};
  const auto ct = lwe_encrypt(37, key, kQ, pt, kSigma, rng);
  EXPECT_EQ(lwe_scalar_mul(ct, 1), ct);
  EXPECT_EQ(lwe_decrypt(lwe_add(lwe_scalar_mul(ct, -1), ct), key), 0);
  EXPECT_EQ(lwe_decrypt(lwe_add_constant(ct, -40), key), -3);
  EXPECT_DOUBLE_EQ(lwe_scalar_mul(ct, -7).noise_budget, 7 * kSigma);
  EXPECT_DOUBLE_EQ(lwe_add(ct, ct).noise_budget, std::sqrt(2.0) * kSigma);
}

TEST(LweLinear, MultisumSmallCases) {
  Prng rng(6);
  const auto key = lwe_keygen(512, SecretDist::kBinary, rng);
  const PlaintextParams pt{1024};
  std::vector<LweCiphertext> zeros, ones;
  for (int i = 0; i < 4; ++i) {
    zeros.push_back(lwe_encrypt(0, key, kQ, pt, kSigma, rng));
    ones.push_back(lwe_encrypt(1, key, kQ, pt, kSigma, rng));
  }
  const std::vector<std::int64_t> w{5, -3, 7, 2};
  EXPECT_EQ(lwe_decrypt(multisum(w, zeros), key), 0);
  const std::vector<std::int64_t> w2{3, -2};
  EXPECT_EQ(lwe_decrypt(multisum(w2, std::span(ones).first(2)), key), 1);
  EXPECT_DOUBLE_EQ(multisum(w, zeros).noise_budget, 17 * kSigma);
  EXPECT_THROW(multisum(w2, zeros), ParameterError);
}

TEST(LweLinear, MultisumMatchesDotProduct) {
  Prng rng(7);
  const auto key = lwe_keygen(512, SecretDist::kBinary, rng);
  const PlaintextParams pt{1024};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t len = 1 + rng.uniform(40);
    std::vector<std::int64_t> w(len), m(len);
    std::vector<LweCiphertext> cts;
    std::int64_t expect = 0;
    for (std::size_t j = 0; j < len; ++j) {
      w[j] = static_cast<std::int64_t>(rng.uniform(11)) - 5;
      m[j] = static_cast<std::int64_t>(rng.uniform(5)) - 2;
      expect += w[j] * m[j];
      cts.push_back(lwe_encrypt(m[j], key, kQ, pt, kSigma, rng));
    }
    ASSERT_LT(std::abs(expect), 512);
    ASSERT_EQ(lwe_decrypt(multisum(w, cts), key), expect);
  }
}

TEST(LweLinear, MultisumOf784LongRow) {
  Prng rng(8);
  const auto key = lwe_keygen(512, SecretDist::kBinary, rng);
  const PlaintextParams pt{1024};
  std::vector<std::int64_t> w(784);
  std::vector<LweCiphertext> cts;
  std::int64_t expect = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = static_cast<std::int64_t>(rng.uniform(7)) - 3;
    const std::int64_t s = rng.uniform(8) == 0 ? 2 : 0;
    expect += w[j] * s;
    cts.push_back(lwe_encrypt(s, key, kQ, pt, kSigma, rng));
  }
  EXPECT_EQ(lwe_decrypt(multisum(w, cts), key), PlaintextParams{1024}.wrap(expect));
}

TEST(LweNoise, RefusesOverBudget) {
  Prng rng(9);
  const auto key = lwe_keygen(16, SecretDist::kBinary, rng);
  const PlaintextParams pt{1024};
  auto ct = lwe_encrypt(1, key, kQ, pt, kSigma, rng);
  const double limit = noise_limit(ct);
  ct.noise_budget = limit / 2.0;
  EXPECT_NO_THROW(lwe_scalar_mul(ct, 2));
  EXPECT_THROW(lwe_scalar_mul(ct, 3), NoiseBudgetError);
  std::vector<LweCiphertext> cts(3, ct);
  const std::vector<std::int64_t> w{1, 1, 1};
  EXPECT_THROW(multisum(w, cts), NoiseBudgetError);
}

TEST(LweNoise, MeasuredWithinSixBudgets) {
  Prng rng(10);
  const auto key = lwe_keygen(512, SecretDist::kBinary, rng);
  const PlaintextParams pt{1024};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<LweCiphertext> cts;
    std::vector<std::int64_t> w;
    for (int j = 0; j < 30; ++j) {
      cts.push_back(lwe_encrypt(static_cast<std::int64_t>(rng.uniform(3)) - 1,
                                key, kQ, pt, kSigma, rng));
      w.push_back(static_cast<std::int64_t>(rng.uniform(9)) - 4);
    }
    auto out = multisum(w, cts);
    out = lwe_add(out, lwe_scalar_mul(cts[0], 3));
    EXPECT_LE(std::abs(static_cast<double>(lwe_measured_noise(out, key))),
              6.0 * out.noise_budget);
  }
}

TEST(Rlwe, MessageRoundTrip) {
  Prng rng(11);
  const RingParams rp{1024, kQ};
  const auto key = ring_keygen(rp, SecretDist::kBinary, rng);
  std::vector<std::int64_t> m(rp.N);
  for (auto& v : m) v = static_cast<std::int64_t>(rng.uniform(8)) - 3;
  const auto ct = rlwe_encrypt_message(m, 8, key, kSigma, rng);
  EXPECT_EQ(rlwe_decrypt_message(ct, 8, key), m);
}

TEST(Gadget, DecompositionRecomposes) {
  const Gadget g{7, 6, kQ};
  Prng rng(12);
  std::int64_t d[6];
  for (int t = 0; t < 10000; ++t) {
    const std::uint64_t x = rng.uniform(kQ);
    g.decompose(x, d);
    std::uint64_t sum = 0;
    for (unsigned i = 0; i < 6; ++i) {
      EXPECT_GE(d[i], -64);
      EXPECT_LT(d[i], 64);
      sum += static_cast<std::uint64_t>(d[i]) * g.weight(i);
    }
    ASSERT_EQ(sum & (kQ - 1), x);
  }
}

class ExternalProductTest : public ::testing::Test {
 protected:
  void SetUp() override {
    rng_ = std::make_unique<Prng>(13);
    key_ = ring_keygen(rp_, SecretDist::kBinary, *rng_);
  }
  std::vector<std::int64_t> monomial_message(std::int64_t k) const {
    const auto x = NegacyclicPoly::monomial(rp_, k);
    std::vector<std::int64_t> m(rp_.N);
    for (std::size_t i = 0; i < rp_.N; ++i) m[i] = x.centered(i);
    return m;
  }

  RingParams rp_{1024, kQ};
  Gadget gadget_{7, 6, kQ};
  std::unique_ptr<Prng> rng_;
  RingSecretKey key_;
};

TEST_F(ExternalProductTest, MonomialExponentsAdd) {
  const auto c = rlwe_encrypt_message(monomial_message(3), 8, key_, kSigma, *rng_);
  const auto g = rgsw_encrypt_monomial(5, key_, gadget_, kSigma, *rng_);
  EXPECT_EQ(rlwe_decrypt_message(external_product(c, g), 8, key_),
            monomial_message(8));
  ExternalProductWorkspace ws;
  EXPECT_EQ(rlwe_decrypt_message(external_product(c, rgsw_to_spectrum(g), ws), 8, key_),
            monomial_message(8));
}

TEST_F(ExternalProductTest, IdentityMonomialKeepsPlaintext) {
  std::vector<std::int64_t> m(rp_.N);
  for (auto& v : m) v = static_cast<std::int64_t>(rng_->uniform(8)) - 3;
  const auto c = rlwe_encrypt_message(m, 8, key_, kSigma, *rng_);
  const auto g = rgsw_encrypt_monomial(0, key_, gadget_, kSigma, *rng_);
  EXPECT_EQ(rlwe_decrypt_message(external_product(c, g), 8, key_), m);
}

TEST_F(ExternalProductTest, RgswDeterministicUnderSeed) {
  Prng a(99), b(99);
  const auto g1 = rgsw_encrypt_monomial(7, key_, gadget_, kSigma, a);
  const auto g2 = rgsw_encrypt_monomial(7, key_, gadget_, kSigma, b);
  ASSERT_EQ(g1.rows.size(), 12u);
  for (std::size_t r = 0; r < g1.rows.size(); ++r) EXPECT_EQ(g1.rows[r], g2.rows[r]);
}

TEST_F(ExternalProductTest, ChainOf512RandomMonomials) {
  auto c = rlwe_encrypt_message(monomial_message(0), 8, key_, kSigma, *rng_);
  ExternalProductWorkspace ws;
  std::int64_t exponent = 0;
  for (int step = 0; step < 512; ++step) {
    const auto k = static_cast<std::int64_t>(rng_->uniform(2 * rp_.N));
    const auto g = rgsw_to_spectrum(rgsw_encrypt_monomial(k, key_, gadget_, kSigma, *rng_));
    c = external_product(c, g, ws);
    exponent = (exponent + k) % static_cast<std::int64_t>(2 * rp_.N);
  }
  EXPECT_EQ(rlwe_decrypt_message(c, 8, key_), monomial_message(exponent));
}
