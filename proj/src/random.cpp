#include "disnn/random.hpp"

#include <sodium.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace disnn {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw std::runtime_error("libsodium initialisation failed");
}

}  // namespace

Prng::Prng(std::uint64_t seed, std::uint64_t stream) {
  ensure_sodium();
  std::uint8_t material[16];
  for (int i = 0; i < 8; ++i) {
    material[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    material[8 + i] = static_cast<std::uint8_t>(stream >> (8 * i));
  }
  crypto_generichash(key_.data(), key_.size(), material, sizeof(material),
                     nullptr, 0);
}

void Prng::refill() {
  static const std::uint8_t nonce[crypto_stream_chacha20_ietf_NONCEBYTES] = {};
  std::uint8_t raw[kWords * 8];
  std::memset(raw, 0, sizeof(raw));
  crypto_stream_chacha20_ietf_xor_ic(raw, raw, sizeof(raw), nonce, counter_,
                                     key_.data());
  counter_ += sizeof(raw) / 64;
  for (std::size_t i = 0; i < kWords; ++i) {
    std::uint64_t w = 0;
    for (int b = 0; b < 8; ++b) {
      w |= static_cast<std::uint64_t>(raw[8 * i + b]) << (8 * b);
    }
    buf_[i] = w;
  }
  pos_ = 0;
}

Prng::result_type Prng::operator()() {
  if (pos_ == kWords) refill();
  return buf_[pos_++];
}

std::uint64_t Prng::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform bound must be positive");
  if ((bound & (bound - 1)) == 0) return (*this)() & (bound - 1);
  const std::uint64_t limit = max() - max() % bound;
  for (;;) {
    const std::uint64_t v = (*this)();
    if (v < limit) return v % bound;
  }
}

double Prng::uniform01() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

bool Prng::bit() { return ((*this)() & 1u) != 0; }

std::int64_t Prng::gaussian(double sigma) {
  if (sigma <= 0.0) return 0;
  double z;
  if (has_spare_) {
    has_spare_ = false;
    z = spare_;
  } else {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    z = r * std::cos(2.0 * M_PI * u2);
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
  }
  return static_cast<std::int64_t>(std::llround(z * sigma));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace disnn
