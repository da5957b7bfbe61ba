#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "bc/error.hpp"
#include "bc/models.hpp"
#include "bc/rng.hpp"

namespace bc {

void LassoConfig::validate() const {
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw Error(Errc::InvalidArgument, "subsample_fraction must be in (0, 1]");
  }
  if (!(select_threshold > 0.0 && select_threshold <= 1.0)) {
    throw Error(Errc::InvalidArgument, "select_threshold must be in (0, 1]");
  }
  if (rounds < 1) throw Error(Errc::InvalidArgument, "rounds must be >= 1");
  if (lambda < 0.0) throw Error(Errc::InvalidArgument, "lambda must be >= 0");
}

namespace {

double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

}  // namespace

LassoResult lasso_fit(const Matrix& X, const Vector& y, double lambda, int max_iter, double tol) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (n < 2) throw Error(Errc::InvalidArgument, "lasso needs at least 2 rows");
  if (y.size() != n) throw Error(Errc::LengthMismatch, "X rows vs y length");

  const Eigen::RowVectorXd mean = X.colwise().mean();
  Matrix Xs = X.rowwise() - mean;
  std::vector<double> scale(static_cast<std::size_t>(p), 0.0);
  std::vector<char> usable(static_cast<std::size_t>(p), 0);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double s = std::sqrt(Xs.col(j).squaredNorm() / static_cast<double>(n));
    if (s > 1e-12) {
      Xs.col(j) /= s;
      scale[static_cast<std::size_t>(j)] = s;
      usable[static_cast<std::size_t>(j)] = 1;
    } else {
      Xs.col(j).setZero();
    }
  }
  const double ymean = y.mean();
  Vector r = y.array() - ymean;
  Vector w = Vector::Zero(p);
  const double inv_n = 1.0 / static_cast<double>(n);

  auto update = [&](Eigen::Index j) {
    const double rho = Xs.col(j).dot(r) * inv_n + w[j];
    const double nw = soft_threshold(rho, lambda);
    const double delta = nw - w[j];
    if (delta != 0.0) {
      r.noalias() -= delta * Xs.col(j);
      w[j] = nw;
    }
    return std::abs(delta);
  };

  LassoResult res;
  int iter = 0;
  while (iter < max_iter) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (usable[static_cast<std::size_t>(j)]) max_delta = std::max(max_delta, update(j));
    }
    ++iter;
    if (max_delta < tol) {
      res.converged = true;
      break;
    }
    // Iterate on the active set until it settles, then re-check everything.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (w[j] != 0.0) active.push_back(j);
    }
    while (iter < max_iter) {
      double d = 0.0;
      for (auto j : active) d = std::max(d, update(j));
      ++iter;
      if (d < tol) break;
    }
  }

  res.iterations = iter;
  res.standardized_weights = w;
  res.weights = Vector::Zero(p);
  res.intercept = ymean;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!usable[static_cast<std::size_t>(j)]) continue;
    res.weights[j] = w[j] / scale[static_cast<std::size_t>(j)];
    res.intercept -= res.weights[j] * mean[j];
  }
  return res;
}

StabilitySelection stability_select(const Matrix& X, const Vector& y, const LassoConfig& cfg, std::uint64_t seed,
                                    int threads) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = X.cols();
  const auto m = static_cast<std::size_t>(std::floor(static_cast<double>(n) * cfg.subsample_fraction));
  if (m < 2) throw Error(Errc::InvalidArgument, "subsample has fewer than 2 rows");

  struct RoundResult {
    std::vector<int> nonzero;
    bool ok = false;
    std::string warning;
  };
  std::vector<RoundResult> results(static_cast<std::size_t>(cfg.rounds));

  auto run_round = [&](int r) {
    RoundResult& out = results[static_cast<std::size_t>(r)];
    try {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t k = 0; k < m; ++k) std::swap(idx[k], idx[k + rng.index(n - k)]);
      Matrix Xsub(static_cast<Eigen::Index>(m), p);
      Vector ysub(static_cast<Eigen::Index>(m));
      for (std::size_t k = 0; k < m; ++k) {
        Xsub.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(idx[k]));
        ysub[static_cast<Eigen::Index>(k)] = y[static_cast<Eigen::Index>(idx[k])];
      }
      const auto fit = lasso_fit(Xsub, ysub, cfg.lambda, cfg.max_iter, cfg.tol);
      if (!fit.converged) out.warning = "round " + std::to_string(r) + ": DidNotConverge, best iterate used";
      for (Eigen::Index j = 0; j < p; ++j) {
        if (fit.standardized_weights[j] != 0.0) out.nonzero.push_back(static_cast<int>(j));
      }
      out.ok = true;
    } catch (const Error& e) {
      out.warning = "round " + std::to_string(r) + " skipped: " + e.what();
    }
  };

  threads = std::max(1, std::min(threads, cfg.rounds));
  if (threads == 1) {
    for (int r = 0; r < cfg.rounds; ++r) run_round(r);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int r = t; r < cfg.rounds; r += threads) run_round(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  StabilitySelection sel;
  std::vector<int> counts(static_cast<std::size_t>(p), 0);
  for (const auto& rr : results) {
    if (!rr.warning.empty()) sel.warnings.push_back(rr.warning);
    if (!rr.ok) continue;
    ++sel.rounds_run;
    for (int j : rr.nonzero) ++counts[static_cast<std::size_t>(j)];
  }
  sel.frequencies.assign(static_cast<std::size_t>(p), 0.0);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    sel.frequencies[ju] = sel.rounds_run > 0 ? counts[ju] / static_cast<double>(sel.rounds_run) : 0.0;
    if (sel.rounds_run > 0 && sel.frequencies[ju] >= cfg.select_threshold) sel.selected.push_back(static_cast<int>(j));
  }
  return sel;
}

}  // namespace bc
