#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "disnn/bootstrap.hpp"
#include "disnn/discretize.hpp"
#include "disnn/fhe.hpp"
#include "disnn/params.hpp"

namespace disnn {

// Binary container shared by key, bundle and score files:
//   "DSNN" | u32 version | u32 kind | u32 len | parameter JSON
//   | param_hash | key_id | model_hash | parent_hash
//   | u64 payload length | payload SHA-256 | header SHA-256 | payload
// Integers are little-endian. The header digest covers every preceding field.
enum class FileKind : std::uint32_t {
  kSecretKey = 1,
  kEvalKey = 2,
  kBundle = 3,
  kScores = 4,
};

std::string to_string(FileKind kind);

inline constexpr std::uint32_t kFormatVersion = 1;

struct FileHeader {
  FileKind kind = FileKind::kSecretKey;
  std::uint32_t version = kFormatVersion;
  CryptoParams params;
  Digest param_hash{};
  Digest key_id{};
  Digest model_hash{};   // zero when no model is involved
  Digest parent_hash{};  // header digest of the input file, or zero
  Digest payload_digest{};
  std::uint64_t payload_len = 0;

  // SHA-256 of the serialised header fields.
  Digest digest() const;
};

// Fingerprint binding bundles and scores to one discretised model.
Digest model_digest(const DiSnnModel& model);

// Reads and verifies only the header: magic, version, header digest and the
// parameter hash. Throws DataError on malformed input and LineageError on a
// digest mismatch.
FileHeader read_header(const std::string& path);

// Public identifier shared by a secret key and its evaluation key.
Digest new_key_id(Prng& rng);

struct StoredSecretKey {
  FileHeader header;
  SecretKeys keys;
};
void write_secret_key(const std::string& path, const SecretKeys& sk,
                      const Digest& key_id);
StoredSecretKey read_secret_key(const std::string& path);

struct StoredEvalKey {
  FileHeader header;
  EvalKey key;
};
void write_eval_key(const std::string& path, const EvalKey& ek, const Digest& key_id);
StoredEvalKey read_eval_key(const std::string& path);

// Encrypted images produced by the client.
struct Bundle {
  CryptoParams params;
  Digest key_id{};
  Digest model_hash{};
  std::uint64_t p = 0;
  std::size_t T = 0;
  EncodingMode mode = EncodingMode::kEncodeThenEncrypt;
  std::string split = "t10k";
  std::uint64_t seed = 0;
  std::vector<EncryptedImage> images;
};

// Ciphertexts are stored as (mask seed, bodies); masks are re-expanded on
// load.
void write_bundle(const std::string& path, const Bundle& bundle);
Bundle read_bundle(const std::string& path, FileHeader* header = nullptr);

// Encrypted scores produced by the server.
struct ScoreFile {
  CryptoParams params;
  Digest key_id{};
  Digest model_hash{};
  Digest parent_hash{};  // header digest of the bundle
  std::uint64_t p = 0;
  std::size_t T = 0;
  EncodingMode mode = EncodingMode::kEncodeThenEncrypt;
  std::string split = "t10k";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::vector<std::uint64_t> indices;
  std::vector<std::vector<LweCiphertext>> scores;
  std::vector<double> step_seconds;   // every step of every image
  std::vector<double> image_seconds;  // per image
  BootstrapCounts counts;
};

void write_scores(const std::string& path, const ScoreFile& scores);
ScoreFile read_scores(const std::string& path, FileHeader* header = nullptr);

// Throws LineageError naming `what` when the digests differ.
void require_same(const Digest& expected, const Digest& got, const std::string& what);

}  // namespace disnn
