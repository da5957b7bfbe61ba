#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bc/audio_io.hpp"
#include "bc/rng.hpp"

namespace bc::test {

inline std::filesystem::path data_dir() { return BC_DATA_DIR; }
inline std::filesystem::path fixture_dir() { return BC_FIXTURE_DIR; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline AudioBuffer sine(double hz, std::int64_t ms, double amp = 0.5) {
  AudioBuffer b;
  b.samples.resize(static_cast<std::size_t>(samples_per_ms(1) * ms));
  for (std::size_t i = 0; i < b.samples.size(); ++i) {
    b.samples[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / kSampleRate));
  }
  return b;
}

inline AudioBuffer silence(std::int64_t ms) {
  AudioBuffer b;
  b.samples.assign(static_cast<std::size_t>(samples_per_ms(1) * ms), 0.0f);
  return b;
}

inline AudioBuffer concat(std::initializer_list<AudioBuffer> parts) {
  AudioBuffer out;
  for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  return out;
}

/// Random voiced/unvoiced frame pattern built from runs of random length.
inline std::vector<bool> random_runs(Rng& rng, std::size_t frames, int max_run) {
  std::vector<bool> v;
  bool voiced = rng.uniform() < 0.5;
  while (v.size() < frames) {
    const auto len = 1 + rng.index(static_cast<std::size_t>(max_run));
    for (std::size_t i = 0; i < len && v.size() < frames; ++i) v.push_back(voiced);
    voiced = !voiced;
  }
  return v;
}

}  // namespace bc::test
