#include "disnn/serialize.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "disnn/errors.hpp"
#include "json.hpp"

namespace disnn {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'D', 'S', 'N', 'N'};

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void bytes(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  void digest(const Digest& d) { bytes(d.data(), d.size()); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  // Residue mod 2^log_q in ceil(log_q / 8) bytes.
  void word(std::uint64_t v, unsigned width) { le(v, width); }
  const std::string& data() const { return buf_; }

 private:
  void le(std::uint64_t v, unsigned width) {
    for (unsigned i = 0; i < width; ++i) buf_.push_back(static_cast<char>(v >> (8 * i)));
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& buf, std::size_t off, std::string path)
      : buf_(buf), off_(off), path_(std::move(path)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + off_, n);
    off_ += n;
  }
  Digest digest() {
    Digest d;
    bytes(d.data(), d.size());
    return d;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf_.substr(off_, n);
    off_ += n;
    return s;
  }
  std::uint64_t word(unsigned width) { return le(width); }
  std::size_t offset() const { return off_; }
  bool done() const { return off_ == buf_.size(); }

 private:
  void need(std::size_t n) {
    if (buf_.size() - off_ < n) {
      std::ostringstream os;
      os << path_ << ": truncated at offset " << off_ << " (need " << n << " bytes)";
      throw DataError(os.str());
    }
  }
  std::uint64_t le(unsigned width) {
    need(width);
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) {
      v |= std::uint64_t{static_cast<unsigned char>(buf_[off_ + i])} << (8 * i);
    }
    off_ += width;
    return v;
  }
  const std::string& buf_;
  std::size_t off_;
  std::string path_;
};

unsigned word_width(const CryptoParams& params) { return (params.log_q + 7) / 8; }

std::string header_bytes(const FileHeader& h, bool with_digest) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(h.version);
  w.u32(static_cast<std::uint32_t>(h.kind));
  w.str(h.params.to_json());
  w.digest(h.param_hash);
  w.digest(h.key_id);
  w.digest(h.model_hash);
  w.digest(h.parent_hash);
  w.u64(h.payload_len);
  w.digest(h.payload_digest);
  if (with_digest) w.digest(h.digest());
  return w.data();
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FileHeader parse_header(const std::string& buf, const std::string& path,
                        std::size_t& payload_off) {
  Reader r(buf, 0, path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError(path + ": not a DSNN file");
  FileHeader h;
  h.version = r.u32();
  if (h.version != kFormatVersion) {
    throw DataError(path + ": unsupported format version " + std::to_string(h.version));
  }
  const std::uint32_t kind = r.u32();
  if (kind < 1 || kind > 4) throw DataError(path + ": unknown file kind");
  h.kind = static_cast<FileKind>(kind);
  const std::string pj = r.str();
  h.param_hash = r.digest();
  h.key_id = r.digest();
  h.model_hash = r.digest();
  h.parent_hash = r.digest();
  h.payload_len = r.u64();
  h.payload_digest = r.digest();
  const std::size_t prefix = r.offset();
  const Digest stored = r.digest();
  if (sha256(buf.data(), prefix) != stored) {
    throw LineageError(path + ": header digest mismatch");
  }
  try {
    h.params = CryptoParams::from_json(pj);
  } catch (const Error&) {
    throw LineageError(path + ": parameter block does not parse");
  }
  if (h.params.hash() != h.param_hash) {
    throw LineageError(path + ": parameter hash does not match the parameter block");
  }
  payload_off = r.offset();
  return h;
}

// Loads a file of the wanted kind and verifies the payload digest.
std::string load(const std::string& path, FileKind want, FileHeader& h) {
  const std::string buf = read_all(path);
  std::size_t off = 0;
  h = parse_header(buf, path, off);
  if (h.kind != want) {
    throw LineageError(path + ": expected a " + to_string(want) + " file, found " +
                       to_string(h.kind));
  }
  if (buf.size() - off != h.payload_len) {
    std::ostringstream os;
    os << path << ": payload is " << buf.size() - off << " bytes, header says "
       << h.payload_len;
    throw DataError(os.str());
  }
  std::string payload = buf.substr(off);
  if (sha256(payload.data(), payload.size()) != h.payload_digest) {
    throw LineageError(path + ": payload digest mismatch");
  }
  return payload;
}

void store(const std::string& path, FileHeader h, const std::string& payload) {
  h.version = kFormatVersion;
  h.param_hash = h.params.hash();
  h.payload_len = payload.size();
  h.payload_digest = sha256(payload.data(), payload.size());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    const std::string head = header_bytes(h, true);
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw DataError("write failed for " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot rename " + tmp + " to " + path);
  }
}

void put_poly(Writer& w, const NegacyclicPoly& p, unsigned width) {
  for (std::size_t i = 0; i < p.size(); ++i) w.word(p[i], width);
}

NegacyclicPoly get_poly(Reader& r, const RingParams& rp, unsigned width) {
  std::vector<std::uint64_t> c(rp.N);
  for (auto& x : c) {
    x = r.word(width);
    if (x >= rp.Q) throw DataError("ring coefficient out of range");
  }
  return NegacyclicPoly(rp, std::move(c));
}

void put_small(Writer& w, const std::vector<std::int64_t>& v) {
  for (auto x : v) {
    const auto b = static_cast<std::int8_t>(x);
    w.bytes(&b, 1);
  }
}

std::vector<std::int64_t> get_small(Reader& r, std::size_t n) {
  std::vector<std::int64_t> v(n);
  for (auto& x : v) {
    std::int8_t b;
    r.bytes(&b, 1);
    if (b < -1 || b > 1) throw DataError("secret key coefficient out of range");
    x = b;
  }
  return v;
}

void put_ct(Writer& w, const LweCiphertext& ct, unsigned width) {
  for (auto x : ct.a) w.word(x, width);
  w.word(ct.b, width);
  w.f64(ct.noise_budget);
}

LweCiphertext get_ct(Reader& r, const CryptoParams& params, std::uint64_t p,
                     unsigned width) {
  LweCiphertext ct;
  ct.q = params.Q();
  ct.p = p;
  ct.a.resize(params.n);
  for (auto& x : ct.a) x = r.word(width) & (ct.q - 1);
  ct.b = r.word(width) & (ct.q - 1);
  ct.noise_budget = r.f64();
  return ct;
}

json meta_common(std::uint64_t p, std::size_t T, EncodingMode mode,
                 const std::string& split, std::uint64_t seed) {
  return {{"p", p}, {"T", T}, {"mode", to_string(mode)}, {"split", split}, {"seed", seed}};
}

}  // namespace

std::string to_string(FileKind kind) {
  switch (kind) {
    case FileKind::kSecretKey: return "secret-key";
    case FileKind::kEvalKey: return "eval-key";
    case FileKind::kBundle: return "bundle";
    case FileKind::kScores: return "scores";
  }
  return "unknown";
}

Digest FileHeader::digest() const {
  const std::string s = header_bytes(*this, false);
  return sha256(s.data(), s.size());
}

Digest model_digest(const DiSnnModel& model) {
  const std::string s = model.to_json();
  return sha256(s.data(), s.size());
}

FileHeader read_header(const std::string& path) {
  const std::string buf = read_all(path);
  std::size_t off = 0;
  return parse_header(buf, path, off);
}

Digest new_key_id(Prng& rng) {
  Digest d;
  for (std::size_t i = 0; i < d.size(); i += 8) {
    const std::uint64_t v = rng();
    for (std::size_t j = 0; j < 8; ++j) d[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
  }
  return d;
}

void require_same(const Digest& expected, const Digest& got, const std::string& what) {
  if (expected != got) {
    throw LineageError(what + " differs (" + hex(expected).substr(0, 16) + " vs " +
                       hex(got).substr(0, 16) + ")");
  }
}

void write_secret_key(const std::string& path, const SecretKeys& sk,
                      const Digest& key_id) {
  if (sk.lwe.n() != sk.params.n || sk.ring.digits.size() != sk.params.N) {
    throw ParameterError("secret key dimensions do not match parameters");
  }
  Writer w;
  put_small(w, sk.lwe.s);
  put_small(w, sk.ring.digits);
  FileHeader h;
  h.kind = FileKind::kSecretKey;
  h.params = sk.params;
  h.key_id = key_id;
  store(path, h, w.data());
}

StoredSecretKey read_secret_key(const std::string& path) {
  StoredSecretKey out;
  const std::string payload = load(path, FileKind::kSecretKey, out.header);
  const CryptoParams& params = out.header.params;
  Reader r(payload, 0, path);
  out.keys.params = params;
  out.keys.lwe.s = get_small(r, params.n);
  out.keys.ring.digits = get_small(r, params.N);
  out.keys.ring.z = NegacyclicPoly::from_signed(params.ring(), out.keys.ring.digits);
  if (!r.done()) throw DataError(path + ": trailing bytes after secret key");
  return out;
}

void write_eval_key(const std::string& path, const EvalKey& ek, const Digest& key_id) {
  const CryptoParams& params = ek.params;
  const unsigned width = word_width(params);
  if (ek.ek.size() != params.n) throw ParameterError("eval key size mismatch");
  Writer w;
  w.u64(ek.ek.size());
  for (const auto& rgsw : ek.ek) {
    w.u32(static_cast<std::uint32_t>(rgsw.rows.size()));
    for (const auto& row : rgsw.rows) {
      put_poly(w, row.a, width);
      put_poly(w, row.b, width);
    }
  }
  w.u64(ek.ksk.data.size());
  for (auto x : ek.ksk.data) w.word(x, width);
  FileHeader h;
  h.kind = FileKind::kEvalKey;
  h.params = params;
  h.key_id = key_id;
  store(path, h, w.data());
}

StoredEvalKey read_eval_key(const std::string& path) {
  StoredEvalKey out;
  const std::string payload = load(path, FileKind::kEvalKey, out.header);
  const CryptoParams& params = out.header.params;
  const unsigned width = word_width(params);
  const RingParams rp = params.ring();
  const Gadget gadget{params.bg_bits, params.gadget_levels(), params.Q()};
  Reader r(payload, 0, path);
  EvalKey& key = out.key;
  key.params = params;
  if (r.u64() != params.n) throw DataError(path + ": eval key size mismatch");
  key.ek.resize(params.n);
  for (auto& rgsw : key.ek) {
    const std::uint32_t rows = r.u32();
    if (rows != 2 * gadget.levels) throw DataError(path + ": RGSW row count mismatch");
    rgsw.gadget = gadget;
    rgsw.rows.resize(rows);
    for (auto& row : rgsw.rows) {
      row.a = get_poly(r, rp, width);
      row.b = get_poly(r, rp, width);
    }
  }
  KeySwitchKey& ksk = key.ksk;
  ksk.N = params.N;
  ksk.n = params.n;
  ksk.bits = params.ks_bits;
  ksk.levels = params.ks_levels();
  ksk.Q = params.Q();
  const std::uint64_t words = r.u64();
  if (words != ksk.N * ksk.levels * (ksk.n + 1)) {
    throw DataError(path + ": key-switch key size mismatch");
  }
  ksk.data.resize(words);
  for (auto& x : ksk.data) x = r.word(width) & (ksk.Q - 1);
  if (!r.done()) throw DataError(path + ": trailing bytes after eval key");
  return out;
}

void write_bundle(const std::string& path, const Bundle& b) {
  const unsigned width = word_width(b.params);
  Writer w;
  json meta = meta_common(b.p, b.T, b.mode, b.split, b.seed);
  meta["count"] = b.images.size();
  meta["sigma"] = b.params.noise.sigma_lwe;
  w.str(meta.dump());
  for (const auto& img : b.images) {
    if (img.mode != b.mode || img.T != b.T) {
      throw ParameterError("bundle image does not match bundle settings");
    }
    w.u64(img.index);
    w.u64(img.n);
    w.u64(img.mask_seed);
    w.u64(img.cts.size());
    // Check that the stored masks really come from mask_seed.
    Prng mask(img.mask_seed, kMaskStream);
    for (const auto& ct : img.cts) {
      if (lwe_expand_mask(b.params.n, b.params.Q(), mask) != ct.a) {
        throw ParameterError("ciphertext mask is not reproducible from its seed");
      }
      w.word(ct.b, width);
    }
  }
  FileHeader h;
  h.kind = FileKind::kBundle;
  h.params = b.params;
  h.key_id = b.key_id;
  h.model_hash = b.model_hash;
  store(path, h, w.data());
}

Bundle read_bundle(const std::string& path, FileHeader* header) {
  FileHeader h;
  const std::string payload = load(path, FileKind::kBundle, h);
  if (header) *header = h;
  const unsigned width = word_width(h.params);
  Reader r(payload, 0, path);
  Bundle b;
  b.params = h.params;
  b.key_id = h.key_id;
  b.model_hash = h.model_hash;
  std::size_t count = 0;
  double sigma = 0.0;
  try {
    const json meta = json::parse(r.str());
    b.p = meta.at("p").get<std::uint64_t>();
    b.T = meta.at("T").get<std::size_t>();
    b.mode = parse_mode(meta.at("mode").get<std::string>());
    b.split = meta.at("split").get<std::string>();
    b.seed = meta.at("seed").get<std::uint64_t>();
    count = meta.at("count").get<std::size_t>();
    sigma = meta.at("sigma").get<double>();
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed bundle metadata: " + e.what());
  }
  const std::uint64_t Q = b.params.Q();
  b.images.resize(count);
  for (auto& img : b.images) {
    img.mode = b.mode;
    img.T = b.T;
    img.seed = b.seed;
    img.index = r.u64();
    img.n = r.u64();
    img.mask_seed = r.u64();
    const std::uint64_t cts = r.u64();
    const std::uint64_t want =
        b.mode == EncodingMode::kEncodeThenEncrypt ? b.T * img.n : img.n;
    if (cts != want) throw DataError(path + ": ciphertext count mismatch");
    Prng mask(img.mask_seed, kMaskStream);
    img.cts.resize(cts);
    for (auto& ct : img.cts) {
      ct.q = Q;
      ct.p = b.p;
      ct.a = lwe_expand_mask(b.params.n, Q, mask);
      ct.b = r.word(width) & (Q - 1);
      ct.noise_budget = sigma;
    }
  }
  if (!r.done()) throw DataError(path + ": trailing bytes after bundle");
  return b;
}

void write_scores(const std::string& path, const ScoreFile& s) {
  const unsigned width = word_width(s.params);
  Writer w;
  json meta = meta_common(s.p, s.T, s.mode, s.split, s.seed);
  meta["workers"] = s.workers;
  meta["indices"] = s.indices;
  meta["step_seconds"] = s.step_seconds;
  meta["image_seconds"] = s.image_seconds;
  meta["bootstraps"] = {{"encoding", s.counts.encoding},
                        {"fire", s.counts.fire},
                        {"reset", s.counts.reset}};
  meta["m"] = s.scores.empty() ? 0 : s.scores.front().size();
  if (s.indices.size() != s.scores.size()) {
    throw ParameterError("score file: index and score counts differ");
  }
  w.str(meta.dump());
  for (const auto& row : s.scores) {
    for (const auto& ct : row) put_ct(w, ct, width);
  }
  FileHeader h;
  h.kind = FileKind::kScores;
  h.params = s.params;
  h.key_id = s.key_id;
  h.model_hash = s.model_hash;
  h.parent_hash = s.parent_hash;
  store(path, h, w.data());
}

ScoreFile read_scores(const std::string& path, FileHeader* header) {
  FileHeader h;
  const std::string payload = load(path, FileKind::kScores, h);
  if (header) *header = h;
  const unsigned width = word_width(h.params);
  Reader r(payload, 0, path);
  ScoreFile s;
  s.params = h.params;
  s.key_id = h.key_id;
  s.model_hash = h.model_hash;
  s.parent_hash = h.parent_hash;
  std::size_t m = 0;
  try {
    const json meta = json::parse(r.str());
    s.p = meta.at("p").get<std::uint64_t>();
    s.T = meta.at("T").get<std::size_t>();
    s.mode = parse_mode(meta.at("mode").get<std::string>());
    s.split = meta.at("split").get<std::string>();
    s.seed = meta.at("seed").get<std::uint64_t>();
    s.workers = meta.at("workers").get<std::size_t>();
    s.indices = meta.at("indices").get<std::vector<std::uint64_t>>();
    s.step_seconds = meta.at("step_seconds").get<std::vector<double>>();
    s.image_seconds = meta.at("image_seconds").get<std::vector<double>>();
    const auto& bj = meta.at("bootstraps");
    s.counts.encoding = bj.at("encoding").get<std::uint64_t>();
    s.counts.fire = bj.at("fire").get<std::uint64_t>();
    s.counts.reset = bj.at("reset").get<std::uint64_t>();
    m = meta.at("m").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed score metadata: " + e.what());
  }
  s.scores.resize(s.indices.size());
  for (auto& row : s.scores) {
    row.reserve(m);
    for (std::size_t i = 0; i < m; ++i) row.push_back(get_ct(r, s.params, s.p, width));
  }
  if (!r.done()) throw DataError(path + ": trailing bytes after scores");
  return s;
}

}  // namespace disnn
