#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace disnn {

// Spectrum of a real negacyclic polynomial of degree < N: the N/2 evaluations
// at the odd powers psi^(4j+1) of a primitive 2N-th root of unity, stored as
// separate real and imaginary arrays in bit-reversed order.
struct Spectrum {
  std::vector<double> re;
  std::vector<double> im;

  Spectrum() = default;
  explicit Spectrum(std::size_t half) : re(half, 0.0), im(half, 0.0) {}
  std::size_t size() const { return re.size(); }
  void zero();
};

// Negacyclic FFT for R[X]/(X^N + 1). The length-N real input is folded into
// N/2 complex values, twisted by psi^l and transformed by a size-N/2 complex
// FFT. Instances are immutable after construction and may be shared.
class FftEngine {
 public:
  explicit FftEngine(std::size_t n);

  std::size_t degree() const { return n_; }

  void forward(const double* in, Spectrum& out) const;
  void forward_signed(const std::int64_t* in, Spectrum& out) const;
  // Writes N real coefficients. The spectrum is consumed as scratch.
  void inverse(Spectrum& in, double* out) const;

  // acc += x * y, pointwise.
  static void mul_acc(Spectrum& acc, const Spectrum& x, const Spectrum& y);
  static void mul(Spectrum& out, const Spectrum& x, const Spectrum& y);

  // Shared engine for degree n, built on first use.
  static std::shared_ptr<const FftEngine> get(std::size_t n);

 private:
  void transform_forward(double* re, double* im) const;
  void transform_inverse(double* re, double* im) const;

  std::size_t n_;
  std::size_t half_;
  std::vector<double> twist_re_, twist_im_;
  // Per-stage twiddles, concatenated, largest stage first.
  std::vector<double> tw_re_, tw_im_;
};

}  // namespace disnn
