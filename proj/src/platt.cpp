#include <cmath>

#include "bc/error.hpp"
#include "bc/models.hpp"

namespace bc {

double platt_score(double d, const PlattParams& p) {
  const double f = p.alpha * d + p.beta;
  // Stable logistic for either sign of f.
  if (f >= 0.0) {
    const double e = std::exp(-f);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(f));
}

PlattParams platt_fit(std::span<const double> ds, std::span<const int> ys, int max_iter) {
  if (ds.size() != ys.size()) throw Error(Errc::LengthMismatch, "decision values vs labels");
  double n_pos = 0.0, n_neg = 0.0;
  for (int y : ys) {
    if (y == 1) n_pos += 1.0;
    else if (y == 0) n_neg += 1.0;
    else throw Error(Errc::InvalidArgument, "platt labels must be 0/1");
  }
  if (n_pos == 0.0 || n_neg == 0.0) throw Error(Errc::SingleClass, "platt calibration needs both classes");

  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  const std::size_t n = ds.size();
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = ys[i] == 1 ? hi : lo;

  // Negative log-likelihood of targets t under p_i = 1/(1+exp(A d_i + B)).
  auto nll = [&](double A, double B) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = ds[i] * A + B;
      f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };

  constexpr double kGradTol = 1e-8;
  constexpr double kMinStep = 1e-10;
  constexpr double kSigma = 1e-12;
  double A = 0.0;
  double B = std::log((n_neg + 1.0) / (n_pos + 1.0));
  double fval = nll(A, B);

  for (int iter = 0; iter < max_iter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = ds[i] * A + B;
      double p, q;
      if (z >= 0.0) {
        const double e = std::exp(-z);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(z);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double pq = p * q;
      h11 += ds[i] * ds[i] * pq;
      h22 += pq;
      h21 += ds[i] * pq;
      const double r = t[i] - p;
      g1 += ds[i] * r;
      g2 += r;
    }
    if (std::abs(g1) < kGradTol && std::abs(g2) < kGradTol) return {A, B};

    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;

    double step = 1.0;
    while (step >= kMinStep) {
      const double nA = A + step * dA;
      const double nB = B + step * dB;
      const double nf = nll(nA, nB);
      if (nf < fval + 1e-4 * step * gd) {
        A = nA;
        B = nB;
        fval = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < kMinStep) {
      // No decrease possible at working precision: accept if the gradient is
      // already at rounding level for this sample size.
      if (std::abs(g1) < kGradTol * static_cast<double>(n) && std::abs(g2) < kGradTol * static_cast<double>(n)) {
        return {A, B};
      }
      throw Error(Errc::DidNotConverge, "platt line search failed");
    }
  }
  throw Error(Errc::DidNotConverge, "platt fit hit max_iter=" + std::to_string(max_iter));
}

}  // namespace bc
