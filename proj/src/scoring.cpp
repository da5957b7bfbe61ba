#include "bc/scoring.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/owens_t.hpp>

#include "bc/error.hpp"

namespace bc {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// log(Phi(x)), accurate far into the lower tail.
double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(0.5 * std::erfc(-x / kSqrt2));
  // Asymptotic expansion of the Mills ratio.
  const double x2 = x * x;
  return -0.5 * x2 - kLogSqrt2Pi - std::log(-x) + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

using Objective = std::function<double(const std::array<double, 3>&)>;

// Nelder-Mead on three parameters.
std::array<double, 3> nelder_mead(const Objective& f, std::array<double, 3> start, const std::array<double, 3>& step,
                                  int max_iter, double ftol) {
  std::array<std::array<double, 3>, 4> pts;
  std::array<double, 4> vals;
  pts[0] = start;
  for (int i = 0; i < 3; ++i) {
    pts[i + 1] = start;
    pts[i + 1][i] += step[i];
  }
  for (int i = 0; i < 4; ++i) vals[i] = f(pts[i]);

  for (int iter = 0; iter < max_iter; ++iter) {
    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    auto p2 = pts;
    auto v2 = vals;
    for (int i = 0; i < 4; ++i) {
      pts[i] = p2[order[i]];
      vals[i] = v2[order[i]];
    }
    if (std::abs(vals[3] - vals[0]) <= ftol * (std::abs(vals[0]) + std::abs(vals[3]) + 1e-300)) break;

    std::array<double, 3> centroid{};
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) centroid[k] += pts[i][k] / 3.0;
    auto along = [&](double t) {
      std::array<double, 3> p;
      for (int k = 0; k < 3; ++k) p[k] = centroid[k] + t * (pts[3][k] - centroid[k]);
      return p;
    };
    const auto xr = along(-1.0);
    const double fr = f(xr);
    if (fr < vals[0]) {
      const auto xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[3] = xe;
        vals[3] = fe;
      } else {
        pts[3] = xr;
        vals[3] = fr;
      }
    } else if (fr < vals[2]) {
      pts[3] = xr;
      vals[3] = fr;
    } else {
      const bool outside = fr < vals[3];
      const auto xc = along(outside ? -0.5 : 0.5);
      const double fc = f(xc);
      if (fc < (outside ? fr : vals[3])) {
        pts[3] = xc;
        vals[3] = fc;
      } else {
        for (int i = 1; i < 4; ++i) {
          for (int k = 0; k < 3; ++k) pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
          vals[i] = f(pts[i]);
        }
      }
    }
  }
  const auto best = std::min_element(vals.begin(), vals.end()) - vals.begin();
  return pts[static_cast<std::size_t>(best)];
}

template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max({d, std::abs(F - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - F)});
  }
  return d;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

void LogNormalParams::validate() const {
  if (!(sigma > 0.0) || !(s > 0.0) || !std::isfinite(mu)) {
    throw Error(Errc::InvalidArgument, "lognormal needs sigma > 0 and s > 0");
  }
}

void SkewNormalParams::validate() const {
  if (!(omega > 0.0) || !std::isfinite(xi) || !std::isfinite(a)) throw Error(Errc::InvalidArgument, "skew-normal needs omega > 0");
  if (bin_ms <= 0 || task_duration_ms <= 0 || task_duration_ms % bin_ms != 0) {
    throw Error(Errc::InvalidArgument, "bin_ms must divide task_duration_ms");
  }
  if (!(k > 0.0)) throw Error(Errc::InvalidArgument, "skew-normal scale k must be > 0");
}

double lognormal_pdf(double t, const LogNormalParams& p) {
  if (t <= p.mu) return 0.0;
  const double z = (t - p.mu) / p.sigma;
  const double lz = std::log(z);
  return std::exp(-lz * lz / (2.0 * p.s * p.s)) / (p.s * z * std::sqrt(2.0 * std::numbers::pi) * p.sigma);
}

double lognormal_cdf(double t, const LogNormalParams& p) {
  if (t <= p.mu) return 0.0;
  return normal_cdf(std::log((t - p.mu) / p.sigma) / p.s);
}

double pause_score(double t_pau_ms, const LogNormalParams& p) { return lognormal_cdf(t_pau_ms, p); }

LogNormalParams fit_lognormal(std::span<const double> samples, FitReport* report) {
  if (samples.size() < 20) throw Error(Errc::TooFewSamples, std::to_string(samples.size()) + " pause samples (need 20)");
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn_it, hi = *mx_it;
  if (!(lo > 0.0)) throw Error(Errc::InvalidArgument, "pause samples must be > 0");
  if (lo == hi) throw Error(Errc::DegenerateSamples, "all pause samples equal");
  const auto n = static_cast<double>(samples.size());

  // Profile log-likelihood in the location (constants dropped).
  auto profile = [&](double mu, double* mean_log, double* sd_log) {
    double m = 0.0;
    for (double t : samples) m += std::log(t - mu);
    m /= n;
    double v = 0.0;
    for (double t : samples) {
      const double d = std::log(t - mu) - m;
      v += d * d;
    }
    v /= n;
    if (mean_log) *mean_log = m;
    if (sd_log) *sd_log = std::sqrt(v);
    return -0.5 * n * std::log(v) - n * m;
  };

  const double upper = lo * 0.99;
  constexpr int kGrid = 200;
  int best = 0;
  double best_ll = -INFINITY;
  for (int i = 0; i < kGrid; ++i) {
    const double mu = upper * i / (kGrid - 1);
    const double ll = profile(mu, nullptr, nullptr);
    if (ll > best_ll) {
      best_ll = ll;
      best = i;
    }
  }
  // Golden-section refinement between the neighbouring grid points.
  double a = upper * std::max(0, best - 1) / (kGrid - 1);
  double b = upper * std::min(kGrid - 1, best + 1) / (kGrid - 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = profile(c, nullptr, nullptr), fd = profile(d, nullptr, nullptr);
  for (int it = 0; it < 100 && b - a > 1e-9 * (1.0 + upper); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = profile(c, nullptr, nullptr);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = profile(d, nullptr, nullptr);
    }
  }
  double mu = 0.5 * (a + b);
  if (profile(mu, nullptr, nullptr) < best_ll) mu = upper * best / (kGrid - 1);

  double mean_log = 0.0, sd_log = 0.0;
  profile(mu, &mean_log, &sd_log);
  LogNormalParams p;
  p.mu = mu;
  p.sigma = std::exp(mean_log);
  p.s = sd_log;
  if (report) {
    double ll = 0.0;
    for (double t : samples) ll += std::log(lognormal_pdf(t, p));
    report->log_likelihood = ll;
    report->ks_statistic =
        ks_statistic(std::vector<double>(samples.begin(), samples.end()), [&](double t) { return lognormal_cdf(t, p); });
  }
  return p;
}

double skewnormal_pdf(double x, const SkewNormalParams& p) {
  const double z = (x - p.xi) / p.omega;
  return 2.0 / p.omega * std::exp(-0.5 * z * z - kLogSqrt2Pi) * normal_cdf(p.a * z);
}

double skewnormal_cdf(double x, const SkewNormalParams& p) {
  const double z = (x - p.xi) / p.omega;
  const double v = normal_cdf(z) - 2.0 * boost::math::owens_t(z, p.a);
  return std::clamp(v, 0.0, 1.0);
}

double skewnormal_bin_mass(std::int64_t bin, const SkewNormalParams& p) {
  const auto lo = static_cast<double>(bin * p.bin_ms);
  return std::max(0.0, skewnormal_cdf(lo + static_cast<double>(p.bin_ms), p) - skewnormal_cdf(lo, p));
}

double progress_scale(const SkewNormalParams& p) {
  if (p.bin_ms <= 0 || p.task_duration_ms % p.bin_ms != 0) {
    throw Error(Errc::InvalidArgument, "bin_ms must divide task_duration_ms");
  }
  double max_mass = 0.0;
  for (std::int64_t b = 0; b < p.task_duration_ms / p.bin_ms; ++b) max_mass = std::max(max_mass, skewnormal_bin_mass(b, p));
  if (!(max_mass > 0.0)) throw Error(Errc::FitDiverged, "skew-normal has no mass inside the task");
  double k = 1.0 / max_mass;
  // Nudge k so that k * max_mass rounds to exactly 1.
  for (int i = 0; i < 4 && k * max_mass != 1.0; ++i) {
    k = std::nextafter(k, k * max_mass < 1.0 ? INFINITY : 0.0);
  }
  return k;
}

SkewNormalParams fit_skewnormal(std::span<const double> samples, std::int64_t duration_ms, std::int64_t bin_ms,
                                FitReport* report) {
  if (bin_ms <= 0 || duration_ms <= 0 || duration_ms % bin_ms != 0) {
    throw Error(Errc::InvalidArgument, "bin_ms must divide duration_ms");
  }
  std::vector<double> xs;
  for (double x : samples) {
    if (x >= 0.0 && x <= static_cast<double>(duration_ms)) xs.push_back(x);
  }
  if (xs.size() < 20) throw Error(Errc::TooFewSamples, std::to_string(xs.size()) + " onsets in range (need 20)");
  const auto n = static_cast<double>(xs.size());
  const double dur = static_cast<double>(duration_ms);

  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : xs) {
    m2 += (x - mean) * (x - mean);
    m3 += (x - mean) * (x - mean) * (x - mean);
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) throw Error(Errc::DegenerateSamples, "all onsets equal");
  const double sd = std::sqrt(m2);

  // Method-of-moments start.
  constexpr double kMaxSkew = 0.99;
  const double gamma = std::clamp(m3 / std::pow(m2, 1.5), -kMaxSkew, kMaxSkew);
  const double g23 = std::pow(std::abs(gamma), 2.0 / 3.0);
  const double delta = std::copysign(
      std::sqrt(std::numbers::pi / 2.0 * g23 / (g23 + std::pow((4.0 - std::numbers::pi) / 2.0, 2.0 / 3.0))), gamma);
  const double a0 = delta / std::sqrt(1.0 - delta * delta);
  const double omega0 = sd / std::sqrt(1.0 - 2.0 * delta * delta / std::numbers::pi);
  const double xi0 = mean - omega0 * delta * std::sqrt(2.0 / std::numbers::pi);

  auto nll = [&](const std::array<double, 3>& th) {
    SkewNormalParams p;
    p.xi = th[0];
    p.omega = std::exp(th[1]);
    p.a = th[2];
    if (!std::isfinite(p.omega) || p.omega <= 0.0 || std::abs(p.a) > 100.0) return std::numeric_limits<double>::infinity();
    double ll = 0.0;
    for (double x : xs) {
      const double z = (x - p.xi) / p.omega;
      ll += std::log(2.0) - kLogSqrt2Pi - 0.5 * z * z + log_normal_cdf(p.a * z);
    }
    ll -= n * std::log(p.omega);
    const double mass = skewnormal_cdf(dur, p) - skewnormal_cdf(0.0, p);
    if (!(mass > 0.0)) return std::numeric_limits<double>::infinity();
    ll -= n * std::log(mass);
    return -ll;
  };

  std::array<double, 3> theta{xi0, std::log(omega0), a0};
  std::array<double, 3> step{0.2 * omega0, 0.2, 0.5 + 0.2 * std::abs(a0)};
  for (int restart = 0; restart < 3; ++restart) {
    theta = nelder_mead(nll, theta, step, 4000, 1e-13);
    step = {0.05 * std::exp(theta[1]), 0.05, 0.25};
  }

  SkewNormalParams p;
  p.bin_ms = bin_ms;
  p.task_duration_ms = duration_ms;
  p.xi = theta[0];
  p.omega = std::exp(theta[1]);
  p.a = theta[2];
  std::vector<std::string> warnings;
  if (!std::isfinite(nll(theta)) || !std::isfinite(p.xi) || !(p.omega > 0.0) || std::abs(p.a) > 50.0) {
    warnings.push_back("FitDiverged: skew-normal search diverged, using symmetric normal");
    p.xi = mean;
    p.omega = sd;
    p.a = 0.0;
  }
  p.k = progress_scale(p);
  if (report) {
    report->log_likelihood = -nll({p.xi, std::log(p.omega), p.a});
    report->ks_statistic = ks_statistic(xs, [&](double x) { return skewnormal_cdf(x, p); });
    report->warnings = std::move(warnings);
  }
  return p;
}

double progress_score(double t_task_ms, const SkewNormalParams& p) {
  if (!(t_task_ms >= 0.0) || t_task_ms >= static_cast<double>(p.task_duration_ms)) return 0.0;
  const auto bin = static_cast<std::int64_t>(std::floor(t_task_ms / static_cast<double>(p.bin_ms)));
  return std::min(1.0, p.k * skewnormal_bin_mass(bin, p));
}

double participant_score(double d, const PlattParams& p) { return platt_score(d, p); }

void TriplePConfig::validate() const {
  const auto& w = weights;
  if (w.pause < 0.0 || w.progress < 0.0 || w.participant < 0.0 ||
      std::abs(w.pause + w.progress + w.participant - 1.0) > 1e-9) {
    throw Error(Errc::WeightsNotNormalized, "weights must be non-negative and sum to 1");
  }
  if (!(thr_pbc > 0.0 && thr_pbc < 1.0)) throw Error(Errc::InvalidArgument, "thr_pbc must be in (0, 1)");
  for (const auto& [id, m] : tasks) {
    m.pause.validate();
    m.progress.validate();
  }
}

double pbc_score(double s_pau, double s_pg, double s_pt, const TriplePWeights& w) {
  if (w.pause < 0.0 || w.progress < 0.0 || w.participant < 0.0 ||
      std::abs(w.pause + w.progress + w.participant - 1.0) > 1e-9) {
    throw Error(Errc::WeightsNotNormalized, "weights must be non-negative and sum to 1");
  }
  return std::clamp(w.pause * s_pau + w.progress * s_pg + w.participant * s_pt, 0.0, 1.0);
}

double pbc_score(double s_pau, double s_pg, double s_pt, const TriplePConfig& cfg) {
  return pbc_score(s_pau, s_pg, s_pt, cfg.weights);
}

}  // namespace bc
