#pragma once

#include <complex>
#include <span>
#include <vector>

namespace bc::dsp {

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a);

/// Power spectrum |X_k|^2 for k = 0..n/2 of a zero-padded real signal.
std::vector<double> power_spectrum(std::span<const double> x, std::size_t n_fft);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular mel filterbank (HTK layout): bands x (n_fft/2 + 1) weights.
class MelFilterbank {
 public:
  MelFilterbank(int bands, std::size_t n_fft, double sample_rate, double f_low, double f_high);

  std::vector<double> apply(std::span<const double> power) const;
  int bands() const { return bands_; }

 private:
  int bands_;
  std::size_t bins_;
  std::vector<double> weights_;
};

/// Orthonormal DCT-II, first `n_out` coefficients.
std::vector<double> dct2(std::span<const double> x, std::size_t n_out);

std::vector<double> hamming(std::size_t n);

}  // namespace bc::dsp
