#include "bc/dsp.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "bc/error.hpp"

namespace bc::dsp {

namespace {

// exp(-2 pi i k / n) for k < n/2, built once per size and thread
const std::vector<std::complex<double>>& twiddles(std::size_t n) {
  thread_local std::vector<std::vector<std::complex<double>>> cache(64);
  const auto slot = static_cast<std::size_t>(std::countr_zero(n));
  auto& t = cache[slot];
  if (t.empty()) {
    t.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      t[k] = {std::cos(ang), std::sin(ang)};
    }
  }
  return t;
}

}  // namespace

void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw Error(Errc::InvalidArgument, "fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  if (n == 1) return;
  const auto& tw = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2, stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto w = tw[k * stride];
        const auto x = a[i + k + half];
        // plain product; std::complex operator* adds NaN recovery we do not need
        const std::complex<double> v(x.real() * w.real() - x.imag() * w.imag(), x.real() * w.imag() + x.imag() * w.real());
        const auto u = a[i + k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> x, std::size_t n_fft) {
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t i = 0; i < x.size() && i < n_fft; ++i) buf[i] = x[i];
  fft(buf);
  std::vector<double> p(n_fft / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]);
  return p;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int bands, std::size_t n_fft, double sample_rate, double f_low, double f_high)
    : bands_(bands), bins_(n_fft / 2 + 1), weights_(static_cast<std::size_t>(bands) * (n_fft / 2 + 1), 0.0) {
  const double mel_lo = hz_to_mel(f_low);
  const double mel_hi = hz_to_mel(f_high);
  std::vector<double> edges(static_cast<std::size_t>(bands) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(bands + 1));
  }
  for (int b = 0; b < bands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    for (std::size_t k = 0; k < bins_; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      weights_[static_cast<std::size_t>(b) * bins_ + k] = w;
    }
  }
}

std::vector<double> MelFilterbank::apply(std::span<const double> power) const {
  std::vector<double> out(static_cast<std::size_t>(bands_), 0.0);
  for (int b = 0; b < bands_; ++b) {
    const double* w = weights_.data() + static_cast<std::size_t>(b) * bins_;
    double acc = 0.0;
    for (std::size_t k = 0; k < bins_ && k < power.size(); ++k) acc += w[k] * power[k];
    out[static_cast<std::size_t>(b)] = acc;
  }
  return out;
}

std::vector<double> dct2(std::span<const double> x, std::size_t n_out) {
  const auto n = static_cast<double>(x.size());
  std::vector<double> out(n_out, 0.0);
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(i) + 0.5) / n);
    }
    out[k] = acc * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
  }
  return out;
}

std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return w;
}

}  // namespace bc::dsp
