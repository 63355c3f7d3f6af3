#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace disnn {

// Parameters of Z_Q[X]/(X^N + 1).
struct RingParams {
  std::size_t N = 0;
  std::uint64_t Q = 0;

  // Throws ParameterError unless N is a power of two >= 4 and 2 <= Q < 2^62.
  void validate() const;
  bool operator==(const RingParams&) const = default;
};

// Ring element with canonical coefficients in [0, Q).
class NegacyclicPoly {
 public:
  NegacyclicPoly() = default;
  explicit NegacyclicPoly(const RingParams& params);
  // Coefficients are reduced mod Q on construction.
  NegacyclicPoly(const RingParams& params, std::vector<std::uint64_t> coeffs);
  // Signed coefficients, reduced into [0, Q).
  static NegacyclicPoly from_signed(const RingParams& params,
                                    const std::vector<std::int64_t>& coeffs);
  // The monomial X^k, k taken mod 2N.
  static NegacyclicPoly monomial(const RingParams& params, std::int64_t k);

  const RingParams& params() const { return params_; }
  std::size_t size() const { return coeffs_.size(); }
  const std::vector<std::uint64_t>& coeffs() const { return coeffs_; }
  std::uint64_t operator[](std::size_t i) const { return coeffs_[i]; }
  std::uint64_t& operator[](std::size_t i) { return coeffs_[i]; }

  // Centered representative of coefficient i, in [-Q/2, Q/2).
  std::int64_t centered(std::size_t i) const;

  bool operator==(const NegacyclicPoly&) const = default;

 private:
  RingParams params_;
  std::vector<std::uint64_t> coeffs_;
};

NegacyclicPoly poly_add(const NegacyclicPoly& a, const NegacyclicPoly& b);
NegacyclicPoly poly_sub(const NegacyclicPoly& a, const NegacyclicPoly& b);
NegacyclicPoly poly_neg(const NegacyclicPoly& a);
// FFT multiplication, exact: operands are split into 16-bit signed limbs so
// every limb product rounds correctly in double precision.
NegacyclicPoly poly_mul(const NegacyclicPoly& a, const NegacyclicPoly& b);
// Direct O(N^2) negacyclic convolution with 128-bit accumulation.
NegacyclicPoly poly_mul_schoolbook(const NegacyclicPoly& a,
                                   const NegacyclicPoly& b);
// a(X) * X^k, k taken mod 2N.
NegacyclicPoly monomial_mul(const NegacyclicPoly& a, std::int64_t k);

// Shared helpers on raw residues.
inline std::uint64_t mod_add(std::uint64_t x, std::uint64_t y,
                             std::uint64_t q) {
  const std::uint64_t s = x + y;
  return s >= q ? s - q : s;
}
inline std::uint64_t mod_sub(std::uint64_t x, std::uint64_t y,
                             std::uint64_t q) {
  return x >= y ? x - y : x + q - y;
}
std::uint64_t mod_reduce_signed(std::int64_t x, std::uint64_t q);
std::int64_t center(std::uint64_t x, std::uint64_t q);

}  // namespace disnn
