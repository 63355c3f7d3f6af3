#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "disnn/errors.hpp"
#include "disnn/serialize.hpp"

using namespace disnn;
namespace fs = std::filesystem;

namespace {

CryptoParams toy_params() {
  CryptoParams p;
  p.name = "toy";
  p.n = 32;
  p.N = 256;
  return p;
}

class Files : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("disnn_serialize_" + std::string(::testing::UnitTest::GetInstance()
                                                 ->current_test_info()
                                                 ->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  static void dump(const std::string& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  static void flip(const std::string& p, std::size_t offset) {
    std::string b = slurp(p);
    b[offset] = static_cast<char>(b[offset] ^ 0x01);
    dump(p, b);
  }

  fs::path dir_;
};

Bundle make_bundle(const SecretKeys& sk, const Digest& key_id, std::size_t count,
                   Prng& rng) {
  Bundle b;
  b.params = sk.params;
  b.key_id = key_id;
  b.p = 1024;
  b.T = 3;
  b.seed = 4;
  std::vector<std::uint8_t> img(10);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& v : img) v = static_cast<std::uint8_t>(rng.uniform(256));
    b.images.push_back(encode_and_encrypt(img.data(), img.size(), b.T, b.mode, sk.lwe,
                                          sk.params, b.p, b.seed, i, rng));
  }
  return b;
}

}  // namespace

TEST_F(Files, SecretKeyRoundTrip) {
  Prng rng(1);
  const SecretKeys sk = generate_secret_keys(toy_params(), rng);
  const Digest id = new_key_id(rng);
  write_secret_key(path("secret.key"), sk, id);
  const StoredSecretKey back = read_secret_key(path("secret.key"));
  EXPECT_EQ(back.header.kind, FileKind::kSecretKey);
  EXPECT_EQ(back.header.key_id, id);
  EXPECT_EQ(back.header.param_hash, sk.params.hash());
  EXPECT_EQ(back.keys.params, sk.params);
  EXPECT_EQ(back.keys.lwe.s, sk.lwe.s);
  EXPECT_EQ(back.keys.ring.digits, sk.ring.digits);
  EXPECT_EQ(back.keys.ring.z, sk.ring.z);
}

TEST_F(Files, EvalKeyRoundTripAndPacking) {
  Prng rng(2);
  const CryptoParams params = toy_params();
  const SecretKeys sk = generate_secret_keys(params, rng);
  const EvalKey ek = generate_eval_key(sk, rng);
  const Digest id = new_key_id(rng);
  write_eval_key(path("eval.key"), ek, id);
  const StoredEvalKey back = read_eval_key(path("eval.key"));
  EXPECT_EQ(back.header.key_id, id);
  ASSERT_EQ(back.key.ek.size(), ek.ek.size());
  for (std::size_t i = 0; i < ek.ek.size(); ++i) {
    EXPECT_EQ(back.key.ek[i].rows, ek.ek[i].rows) << "rgsw " << i;
  }
  EXPECT_EQ(back.key.ksk.data, ek.ksk.data);
  // Words are packed to ceil(log_q / 8) bytes.
  const std::size_t words = params.n * 2 * params.gadget_levels() * 2 * params.N +
                            params.N * params.ks_levels() * (params.n + 1);
  EXPECT_LT(fs::file_size(path("eval.key")), words * 6 + 4096);
  EXPECT_GT(fs::file_size(path("eval.key")), words * 6);

  // A key read back bootstraps like the original.
  const BootstrapContext a(ek), b(back.key);
  const auto ct = lwe_encrypt(5, sk.lwe, params.Q(), PlaintextParams{16},
                              params.noise.sigma_lwe, rng);
  const auto g = reset_function(16, 6);
  EXPECT_EQ(a.bootstrap(ct, g), b.bootstrap(ct, g));
}

TEST_F(Files, BundleStoresBodiesOnly) {
  Prng rng(3);
  const SecretKeys sk = generate_secret_keys(toy_params(), rng);
  const Digest id = new_key_id(rng);
  Bundle b = make_bundle(sk, id, 4, rng);
  b.model_hash = sha256("model", 5);
  write_bundle(path("b.bin"), b);
  FileHeader h;
  const Bundle back = read_bundle(path("b.bin"), &h);
  EXPECT_EQ(h.key_id, id);
  EXPECT_EQ(h.model_hash, b.model_hash);
  EXPECT_EQ(back.p, b.p);
  EXPECT_EQ(back.T, b.T);
  EXPECT_EQ(back.seed, b.seed);
  ASSERT_EQ(back.images.size(), b.images.size());
  for (std::size_t i = 0; i < b.images.size(); ++i) {
    EXPECT_EQ(back.images[i].index, b.images[i].index);
    ASSERT_EQ(back.images[i].cts.size(), b.images[i].cts.size());
    for (std::size_t j = 0; j < b.images[i].cts.size(); ++j) {
      EXPECT_EQ(back.images[i].cts[j].a, b.images[i].cts[j].a);
      EXPECT_EQ(back.images[i].cts[j].b, b.images[i].cts[j].b);
      EXPECT_EQ(lwe_decrypt(back.images[i].cts[j], sk.lwe),
                lwe_decrypt(b.images[i].cts[j], sk.lwe));
    }
  }
  // 4 images x 30 ciphertexts: far smaller than full masks would need.
  EXPECT_LT(fs::file_size(path("b.bin")), 4 * 30 * 33 * 6 / 4);
}

TEST_F(Files, BundleRejectsForeignMask) {
  Prng rng(4);
  const SecretKeys sk = generate_secret_keys(toy_params(), rng);
  Bundle b = make_bundle(sk, new_key_id(rng), 1, rng);
  b.images[0].cts[1].a[0] ^= 1;
  EXPECT_THROW(write_bundle(path("b.bin"), b), ParameterError);
}

TEST_F(Files, ScoresRoundTrip) {
  Prng rng(5);
  const SecretKeys sk = generate_secret_keys(toy_params(), rng);
  ScoreFile s;
  s.params = sk.params;
  s.key_id = new_key_id(rng);
  s.parent_hash = sha256("parent", 6);
  s.p = 1024;
  s.T = 3;
  s.workers = 2;
  s.indices = {7, 8};
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<LweCiphertext> row;
    for (int c = 0; c < 3; ++c) {
      row.push_back(lwe_encrypt(2 * c, sk.lwe, sk.params.Q(), PlaintextParams{1024},
                                sk.params.noise.sigma_lwe, rng));
    }
    s.scores.push_back(row);
  }
  s.step_seconds = {0.5, 0.25};
  s.image_seconds = {1.0};
  s.counts = {1, 2, 3};
  write_scores(path("s.bin"), s);
  FileHeader h;
  const ScoreFile back = read_scores(path("s.bin"), &h);
  EXPECT_EQ(h.parent_hash, s.parent_hash);
  EXPECT_EQ(back.indices, s.indices);
  EXPECT_EQ(back.step_seconds, s.step_seconds);
  EXPECT_EQ(back.counts.total(), 6u);
  EXPECT_EQ(back.workers, 2u);
  ASSERT_EQ(back.scores.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(decrypt_scores(back.scores[i], sk.lwe).counts,
              (std::vector<std::int64_t>{0, 1, 2}));
  }
}

TEST_F(Files, HeaderTamperDetected) {
  Prng rng(6);
  const SecretKeys sk = generate_secret_keys(toy_params(), rng);
  write_secret_key(path("k"), sk, new_key_id(rng));
  flip(path("k"), 30);  // inside the parameter block
  EXPECT_THROW(read_secret_key(path("k")), LineageError);
  EXPECT_THROW(read_header(path("k")), LineageError);
}

TEST_F(Files, PayloadTamperDetected) {
  Prng rng(7);
  const SecretKeys sk = generate_secret_keys(toy_params(), rng);
  write_secret_key(path("k"), sk, new_key_id(rng));
  const std::size_t size = fs::file_size(path("k"));
  flip(path("k"), size - 3);
  EXPECT_NO_THROW(read_header(path("k")));
  EXPECT_THROW(read_secret_key(path("k")), LineageError);
}

TEST_F(Files, TruncationAndGarbage) {
  Prng rng(8);
  const SecretKeys sk = generate_secret_keys(toy_params(), rng);
  write_secret_key(path("k"), sk, new_key_id(rng));
  const std::string bytes = slurp(path("k"));
  dump(path("short"), bytes.substr(0, bytes.size() - 10));
  EXPECT_THROW(read_secret_key(path("short")), DataError);
  dump(path("head"), bytes.substr(0, 20));
  try {
    read_header(path("head"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  dump(path("junk"), "not a key file at all");
  EXPECT_THROW(read_header(path("junk")), DataError);
  EXPECT_THROW(read_header(path("absent")), DataError);
}

TEST_F(Files, WrongKindRejected) {
  Prng rng(9);
  const SecretKeys sk = generate_secret_keys(toy_params(), rng);
  write_secret_key(path("secret.key"), sk, new_key_id(rng));
  EXPECT_THROW(read_eval_key(path("secret.key")), LineageError);
  EXPECT_THROW(read_bundle(path("secret.key")), LineageError);
  EXPECT_THROW(read_scores(path("secret.key")), LineageError);
  EXPECT_EQ(read_header(path("secret.key")).kind, FileKind::kSecretKey);
}

TEST(Lineage, RequireSameAndDigests) {
  Prng rng(10);
  const Digest a = new_key_id(rng), b = new_key_id(rng);
  EXPECT_NE(a, b);
  EXPECT_NO_THROW(require_same(a, a, "key id"));
  try {
    require_same(a, b, "key id");
    FAIL() << "expected LineageError";
  } catch (const LineageError& e) {
    EXPECT_NE(std::string(e.what()).find("key id"), std::string::npos);
  }
  CryptoParams p = toy_params();
  const Digest h = p.hash();
  p.noise.sigma_lwe = 3.2;
  EXPECT_NE(p.hash(), h);
  FileHeader x;
  x.params = p;
  const Digest d0 = x.digest();
  x.key_id = a;
  EXPECT_NE(x.digest(), d0);
}
