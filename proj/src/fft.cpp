#include "disnn/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "disnn/errors.hpp"

namespace disnn {

void Spectrum::zero() {
  std::fill(re.begin(), re.end(), 0.0);
  std::fill(im.begin(), im.end(), 0.0);
}

FftEngine::FftEngine(std::size_t n) : n_(n), half_(n / 2) {
  if (n < 4 || (n & (n - 1)) != 0) {
    throw ParameterError("FFT degree must be a power of two >= 4");
  }
  twist_re_.resize(half_);
  twist_im_.resize(half_);
  for (std::size_t l = 0; l < half_; ++l) {
    const double angle = M_PI * static_cast<double>(l) / static_cast<double>(n);
    twist_re_[l] = std::cos(angle);
    twist_im_[l] = std::sin(angle);
  }
  for (std::size_t len = half_; len >= 2; len /= 2) {
    for (std::size_t k = 0; k < len / 2; ++k) {
      const double angle =
          2.0 * M_PI * static_cast<double>(k) / static_cast<double>(len);
      tw_re_.push_back(std::cos(angle));
      tw_im_.push_back(std::sin(angle));
    }
  }
}

void FftEngine::transform_forward(double* re, double* im) const {
  const std::size_t m = half_;
  std::size_t off = 0;
  for (std::size_t len = m; len >= 2; len /= 2) {
    const std::size_t h = len / 2;
    const double* wr = tw_re_.data() + off;
    const double* wi = tw_im_.data() + off;
    for (std::size_t s = 0; s < m; s += len) {
      double* xr = re + s;
      double* xi = im + s;
      for (std::size_t k = 0; k < h; ++k) {
        const double ur = xr[k], ui = xi[k];
        const double vr = xr[k + h], vi = xi[k + h];
        xr[k] = ur + vr;
        xi[k] = ui + vi;
        const double dr = ur - vr, di = ui - vi;
        xr[k + h] = dr * wr[k] - di * wi[k];
        xi[k + h] = dr * wi[k] + di * wr[k];
      }
    }
    off += h;
  }
}

void FftEngine::transform_inverse(double* re, double* im) const {
  const std::size_t m = half_;
  std::size_t off = tw_re_.size();
  for (std::size_t len = 2; len <= m; len *= 2) {
    const std::size_t h = len / 2;
    off -= h;
    const double* wr = tw_re_.data() + off;
    const double* wi = tw_im_.data() + off;
    for (std::size_t s = 0; s < m; s += len) {
      double* xr = re + s;
      double* xi = im + s;
      for (std::size_t k = 0; k < h; ++k) {
        const double ar = xr[k + h], ai = xi[k + h];
        const double vr = ar * wr[k] + ai * wi[k];
        const double vi = ai * wr[k] - ar * wi[k];
        const double ur = xr[k], ui = xi[k];
        xr[k] = ur + vr;
        xi[k] = ui + vi;
        xr[k + h] = ur - vr;
        xi[k + h] = ui - vi;
      }
    }
  }
}

void FftEngine::forward(const double* in, Spectrum& out) const {
  if (out.size() != half_) out = Spectrum(half_);
  double* re = out.re.data();
  double* im = out.im.data();
  for (std::size_t l = 0; l < half_; ++l) {
    const double x = in[l], y = in[l + half_];
    re[l] = x * twist_re_[l] - y * twist_im_[l];
    im[l] = x * twist_im_[l] + y * twist_re_[l];
  }
  transform_forward(re, im);
}

void FftEngine::forward_signed(const std::int64_t* in, Spectrum& out) const {
  if (out.size() != half_) out = Spectrum(half_);
  double* re = out.re.data();
  double* im = out.im.data();
  for (std::size_t l = 0; l < half_; ++l) {
    const double x = static_cast<double>(in[l]);
    const double y = static_cast<double>(in[l + half_]);
    re[l] = x * twist_re_[l] - y * twist_im_[l];
    im[l] = x * twist_im_[l] + y * twist_re_[l];
  }
  transform_forward(re, im);
}

void FftEngine::inverse(Spectrum& in, double* out) const {
  double* re = in.re.data();
  double* im = in.im.data();
  transform_inverse(re, im);
  const double scale = 1.0 / static_cast<double>(half_);
  for (std::size_t l = 0; l < half_; ++l) {
    const double x = re[l] * scale, y = im[l] * scale;
    out[l] = x * twist_re_[l] + y * twist_im_[l];
    out[l + half_] = y * twist_re_[l] - x * twist_im_[l];
  }
}

void FftEngine::mul_acc(Spectrum& acc, const Spectrum& x, const Spectrum& y) {
  const std::size_t m = acc.size();
  double* ar = acc.re.data();
  double* ai = acc.im.data();
  const double* xr = x.re.data();
  const double* xi = x.im.data();
  const double* yr = y.re.data();
  const double* yi = y.im.data();
  for (std::size_t k = 0; k < m; ++k) {
    ar[k] += xr[k] * yr[k] - xi[k] * yi[k];
    ai[k] += xr[k] * yi[k] + xi[k] * yr[k];
  }
}

void FftEngine::mul(Spectrum& out, const Spectrum& x, const Spectrum& y) {
  if (out.size() != x.size()) out = Spectrum(x.size());
  out.zero();
  mul_acc(out, x, y);
}

std::shared_ptr<const FftEngine> FftEngine::get(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const FftEngine>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto engine = std::make_shared<const FftEngine>(n);
  cache.emplace(n, engine);
  return engine;
}

}  // namespace disnn
