#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bc/models.hpp"

namespace bc {

/// Three-parameter lognormal: z = (t - mu)/sigma, log z ~ N(0, s^2).
struct LogNormalParams {
  double mu = 0.0;
  double sigma = 1000.0;
  double s = 1.0;
  std::string task_id;

  void validate() const;
};

/// Skew-normal over task time, discretized into bin_ms bins and scaled by k
/// so the largest bin scores exactly 1.
struct SkewNormalParams {
  double xi = 30000.0;
  double omega = 12000.0;
  double a = 0.0;
  double k = 1.0;
  std::int64_t bin_ms = 100;
  std::int64_t task_duration_ms = 60000;

  void validate() const;
};

struct FitReport {
  double log_likelihood = 0.0;
  double ks_statistic = 0.0;  // sup |F_empirical - F_fitted|
  std::vector<std::string> warnings;
};

double normal_cdf(double x);

double lognormal_pdf(double t, const LogNormalParams& p);
double lognormal_cdf(double t, const LogNormalParams& p);

/// Maximum likelihood with the location profiled over a grid on
/// [0, min(samples) - eps] and refined by golden-section search.
LogNormalParams fit_lognormal(std::span<const double> samples, FitReport* report = nullptr);

/// CDF of the fitted pause distribution at t_pau; 0 for t_pau <= mu.
double pause_score(double t_pau_ms, const LogNormalParams& p);

double skewnormal_pdf(double x, const SkewNormalParams& p);
double skewnormal_cdf(double x, const SkewNormalParams& p);

/// Probability mass of bin b, i.e. CDF((b+1)*bin_ms) - CDF(b*bin_ms).
double skewnormal_bin_mass(std::int64_t bin, const SkewNormalParams& p);

/// Scale factor making the largest bin mass map to exactly 1.0.
double progress_scale(const SkewNormalParams& p);

/// Maximum likelihood (truncated to [0, duration_ms]) by Nelder-Mead from a
/// method-of-moments start. Falls back to a symmetric normal if the search
/// diverges. Sets k.
SkewNormalParams fit_skewnormal(std::span<const double> samples, std::int64_t duration_ms, std::int64_t bin_ms = 100,
                                FitReport* report = nullptr);

/// k * PMF(bin containing t_task); 0 outside [0, duration).
double progress_score(double t_task_ms, const SkewNormalParams& p);

/// Calibrated per-participant proactivity.
double participant_score(double d, const PlattParams& p);

struct TriplePWeights {
  double pause = 0.5;
  double progress = 0.3;
  double participant = 0.2;
};

struct TaskScoringModel {
  LogNormalParams pause;
  SkewNormalParams progress;
};

struct TriplePConfig {
  TriplePWeights weights;
  double thr_pbc = 0.75;
  std::map<std::string, TaskScoringModel> tasks;

  /// Throws WeightsNotNormalized or InvalidArgument.
  void validate() const;
};

double pbc_score(double s_pau, double s_pg, double s_pt, const TriplePConfig& cfg);
double pbc_score(double s_pau, double s_pg, double s_pt, const TriplePWeights& w);

/// Strictly greater than the threshold.
inline bool pbc_decision(double score, double thr) { return score > thr; }
inline bool pbc_decision(double score, const TriplePConfig& cfg) { return pbc_decision(score, cfg.thr_pbc); }

}  // namespace bc
