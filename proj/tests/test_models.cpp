#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bc/error.hpp"
#include "bc/models.hpp"
#include "bc/synthetic.hpp"
#include "support.hpp"

using namespace bc;

namespace {

// Column-standardized copy (mean 0, mean square 1) computed independently.
Matrix standardize(const Matrix& X) {
  Matrix Z = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double m = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) m += X(i, j);
    m /= static_cast<double>(X.rows());
    double s = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) s += (X(i, j) - m) * (X(i, j) - m);
    s = std::sqrt(s / static_cast<double>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) Z(i, j) = s > 0 ? (X(i, j) - m) / s : 0.0;
  }
  return Z;
}

int count_nonzero(const Vector& w) {
  int c = 0;
  for (Eigen::Index j = 0; j < w.size(); ++j) c += w[j] != 0.0;
  return c;
}

double accuracy(const SvmModel& m, const Matrix& X, const std::vector<int>& y) {
  int ok = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> row(X.row(i).data(), X.row(i).data() + 0);
    row.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
    ok += sign_with_tie(svm_decision_row(m, row)) == y[static_cast<std::size_t>(i)];
  }
  return ok / static_cast<double>(X.rows());
}

// Negative log-likelihood with smoothed targets, written out directly.
double platt_nll(const std::vector<double>& d, const std::vector<int>& y, double a, double b) {
  double np = 0, nn = 0;
  for (int v : y) (v ? np : nn) += 1;
  double f = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double t = y[i] ? (np + 1) / (np + 2) : 1 / (nn + 2);
    const double p = 1 / (1 + std::exp(a * d[i] + b));
    f -= t * std::log(p) + (1 - t) * std::log(1 - p);
  }
  return f;
}

}  // namespace

TEST_CASE("lasso: lambda above lambda_max gives all zeros") {
  Rng rng(1);
  const auto pr = synth::planted_sparse(100, 30, 3, 0.5, rng);
  const Matrix Z = standardize(pr.X);
  const Vector yc = pr.y.array() - pr.y.mean();
  const double lmax = (Z.transpose() * yc).cwiseAbs().maxCoeff() / static_cast<double>(Z.rows());
  CHECK(count_nonzero(lasso_fit(pr.X, pr.y, lmax * 1.0001).weights) == 0);
  CHECK(count_nonzero(lasso_fit(pr.X, pr.y, lmax * (1 + 1e-9)).weights) == 0);
  CHECK(count_nonzero(lasso_fit(pr.X, pr.y, lmax * 0.95).weights) >= 1);
}

TEST_CASE("lasso: lambda zero matches least squares") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 60, p = 6;
    Matrix X(n, p);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) X(i, j) = rng.normal() * (j + 1) + j;
      y[i] = rng.normal() * 3 + X(i, 0) - 2 * X(i, 3);
    }
    Matrix A(n, p + 1);
    A.col(0).setOnes();
    A.rightCols(p) = X;
    const Vector beta = (A.transpose() * A).ldlt().solve(A.transpose() * y);
    const auto fit = lasso_fit(X, y, 0.0, 100000, 1e-13);
    CHECK(fit.converged);
    CHECK(std::abs(fit.intercept - beta[0]) < 1e-6);
    for (int j = 0; j < p; ++j) CHECK(std::abs(fit.weights[j] - beta[j + 1]) < 1e-6);
  }
}

TEST_CASE("lasso: KKT conditions at convergence") {
  Rng rng(3);
  const auto pr = synth::planted_sparse(200, 40, 5, 0.3, rng);
  const double lambda = 0.1, tol = 1e-9;
  const auto fit = lasso_fit(pr.X, pr.y, lambda, 100000, tol);
  REQUIRE(fit.converged);
  const Matrix Z = standardize(pr.X);
  const Vector r = (pr.y.array() - pr.y.mean()).matrix() - Z * fit.standardized_weights;
  const Vector g = Z.transpose() * r / static_cast<double>(Z.rows());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (fit.standardized_weights[j] == 0.0) {
      CHECK(std::abs(g[j]) <= lambda + 1e-6);
    } else {
      CHECK(g[j] == doctest::Approx(lambda * (fit.standardized_weights[j] > 0 ? 1 : -1)).epsilon(1e-5));
    }
  }
}

TEST_CASE("lasso: planted support recovery") {
  Rng rng(4);
  const auto pr = synth::planted_sparse(500, 200, 5, 0.1, rng);
  const auto fit = lasso_fit(pr.X, pr.y, 0.2);
  int hits = 0;
  for (int j : pr.support) hits += fit.weights[j] != 0.0;
  CHECK(hits >= 4);
}

TEST_CASE("lasso: zero-variance columns and bad input") {
  Matrix X(4, 2);
  X << 1, 5, 2, 5, 3, 5, 4, 5;
  Vector y(4);
  y << 1, 2, 3, 4;
  const auto fit = lasso_fit(X, y, 0.0);
  CHECK(fit.weights[1] == 0.0);
  CHECK(fit.weights[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(lasso_fit(X.topRows(1), y.head(1), 0.1), Error);
  CHECK_THROWS_AS(lasso_fit(X, y.head(3), 0.1), Error);
}

TEST_CASE("lasso: iteration cap reports non-convergence with a usable iterate") {
  Rng rng(5);
  const auto pr = synth::planted_sparse(100, 50, 5, 0.1, rng);
  const auto fit = lasso_fit(pr.X, pr.y, 0.01, 1, 1e-15);
  CHECK_FALSE(fit.converged);
  CHECK(fit.iterations == 1);
  for (Eigen::Index j = 0; j < fit.weights.size(); ++j) CHECK(std::isfinite(fit.weights[j]));
}

TEST_CASE("stability selection: definition of the threshold") {
  // Feature 0 drives y, feature 1 is constant noise-free zero-variance, the rest noise.
  Rng rng(6);
  const auto pr = synth::planted_sparse(300, 20, 2, 0.1, rng);
  LassoConfig cfg;
  cfg.rounds = 40;
  const auto sel = stability_select(pr.X, pr.y, cfg, 1);
  CHECK(sel.rounds_run == 40);
  for (std::size_t j = 0; j < sel.frequencies.size(); ++j) {
    const bool in = std::find(sel.selected.begin(), sel.selected.end(), static_cast<int>(j)) != sel.selected.end();
    CHECK(in == (sel.frequencies[j] >= 0.6));
  }
  for (int j : pr.support) CHECK(sel.frequencies[static_cast<std::size_t>(j)] == 1.0);
}

TEST_CASE("stability selection: pure noise selects nothing") {
  int empty = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(100 + static_cast<std::uint64_t>(s));
    Matrix X(500, 100);
    Vector y(500);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = rng.normal();
      y[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
    }
    LassoConfig cfg;
    cfg.rounds = 50;
    empty += stability_select(X, y, cfg, static_cast<std::uint64_t>(s)).selected.empty();
  }
  CHECK(empty == seeds);
}

TEST_CASE("stability selection: planted recovery, determinism, thread independence") {
  Rng rng(7);
  const auto pr = synth::planted_sparse(500, 200, 5, 0.1, rng);
  LassoConfig cfg;
  cfg.rounds = 30;
  const auto a = stability_select(pr.X, pr.y, cfg, 9);
  const auto b = stability_select(pr.X, pr.y, cfg, 9, 3);
  CHECK(a.selected == b.selected);
  CHECK(a.frequencies == b.frequencies);
  int tp = 0;
  for (int j : a.selected) tp += std::find(pr.support.begin(), pr.support.end(), j) != pr.support.end();
  CHECK(tp >= 4);
  CHECK(static_cast<int>(a.selected.size()) - tp <= 2);
}

TEST_CASE("stability selection: config validation") {
  Matrix X = Matrix::Random(10, 3);
  Vector y = Vector::Random(10);
  LassoConfig cfg;
  cfg.subsample_fraction = 0;
  CHECK_THROWS_AS(stability_select(X, y, cfg, 1), Error);
  cfg = {};
  cfg.select_threshold = 1.5;
  CHECK_THROWS_AS(stability_select(X, y, cfg, 1), Error);
  cfg = {};
  cfg.rounds = 0;
  CHECK_THROWS_AS(stability_select(X, y, cfg, 1), Error);
}

TEST_CASE("svm: separated blobs") {
  Rng rng(8);
  // Each class mean sits 4 sigma from the separating plane.
  const auto b = synth::blobs(200, 5, 8.0, rng);
  SvmTrainReport rep;
  const auto m = svm_train(b.X, b.y, {}, 1, {}, "", &rep);
  CHECK(accuracy(m, b.X, b.y) >= 0.99);
  REQUIRE(rep.epoch_objective.size() == 50);
  CHECK(rep.epoch_objective.back() <= rep.epoch_objective.front());
  CHECK(m.weights.size() == m.feature_indices.size());
}

TEST_CASE("svm: XOR is not linearly separable") {
  Matrix X(4, 2);
  X << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> y = {1, 1, -1, -1};
  for (std::uint64_t s = 0; s < 10; ++s) CHECK(accuracy(svm_train(X, y, {}, s), X, y) <= 0.75);
}

TEST_CASE("svm: duplicating every row leaves the model unchanged") {
  Rng rng(9);
  const auto b = synth::blobs(80, 4, 1.5, rng);
  Matrix X2(160, 4);
  X2 << b.X, b.X;
  std::vector<int> y2 = b.y;
  y2.insert(y2.end(), b.y.begin(), b.y.end());
  const auto m1 = svm_train(b.X, b.y, {}, 3);
  const auto m2 = svm_train(X2, y2, {}, 3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.normal() * 3;
    CHECK(std::abs(svm_decision_row(m1, x) - svm_decision_row(m2, x)) < 1e-6);
  }
}

TEST_CASE("svm: decision arithmetic and ties") {
  SvmModel m;
  m.schema_id = "s";
  m.feature_indices = {0, 1};
  m.weights = {1.0, 0.0};
  m.standardizer = {{0.0, 0.0}, {1.0, 1.0}};
  CHECK(svm_decision(m, {{3.0, 5.0}, "s"}) == 3.0);
  CHECK(svm_decision(m, {{0.0, 7.0}, "s"}) == 0.0);
  CHECK(svm_predict(m, {{0.0, 7.0}, "s"}) == 1);
  CHECK(svm_predict(m, {{-1e-9, 7.0}, "s"}) == -1);
  try {
    svm_decision(m, {{3.0, 5.0}, "other"});
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SchemaMismatch);
  }
  CHECK_THROWS_AS(svm_decision(m, {{3.0}, "s"}), Error);
}

TEST_CASE("svm: decision matches direct recomputation and is scale invariant in sign") {
  Rng rng(10);
  for (int trial = 0; trial < 500; ++trial) {
    SvmModel m;
    const int k = 1 + static_cast<int>(rng.index(6));
    for (int i = 0; i < k; ++i) {
      m.feature_indices.push_back(static_cast<int>(rng.index(10)));
      m.weights.push_back(rng.normal());
      m.standardizer.mean.push_back(rng.normal());
      m.standardizer.stddev.push_back(rng.uniform(0.1, 3));
    }
    m.bias = rng.normal();
    std::vector<double> x(10);
    for (auto& v : x) v = rng.normal() * 2;
    double dot = m.bias, nn = 0;
    for (int i = 0; i < k; ++i) {
      const auto u = static_cast<std::size_t>(i);
      dot += m.weights[u] * (x[static_cast<std::size_t>(m.feature_indices[u])] - m.standardizer.mean[u]) /
             m.standardizer.stddev[u];
      nn += m.weights[u] * m.weights[u];
    }
    const double d = svm_decision_row(m, x);
    CHECK(d == doctest::Approx(dot / std::sqrt(nn)).epsilon(1e-12));
    CHECK(sign_with_tie(d) == (dot >= 0 ? 1 : -1));
    auto scaled = m;
    const double c = rng.uniform(0.01, 100);
    for (auto& w : scaled.weights) w *= c;
    scaled.bias *= c;
    CHECK(sign_with_tie(svm_decision_row(scaled, x)) == sign_with_tie(d));
  }
}

TEST_CASE("svm: errors") {
  Matrix X = Matrix::Random(5, 2);
  const std::vector<int> one = {1, 1, 1, 1, 1};
  try {
    svm_train(X, one, {}, 1);
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SingleClass);
  }
  CHECK_THROWS_AS(svm_train(X, std::vector<int>{1, -1}, {}, 1), Error);
  CHECK_THROWS_AS(svm_train(X, std::vector<int>{1, -1, 0, 1, 1}, {}, 1), Error);
}

TEST_CASE("svm: zero-variance features are dropped") {
  Rng rng(11);
  const auto b = synth::blobs(40, 2, 4, rng);
  Matrix X(40, 3);
  X << b.X, Matrix::Constant(40, 1, 7.0);
  SvmTrainReport rep;
  const auto m = svm_train(X, b.y, {}, 1, {}, "", &rep);
  CHECK(rep.dropped_features == std::vector<int>{2});
  CHECK(m.feature_indices == std::vector<int>{0, 1});
  for (double s : m.standardizer.stddev) CHECK(s > 0);
}

TEST_CASE("platt: symmetric data") {
  const std::vector<double> d = {-2, -1, 1, 2};
  const std::vector<int> y = {0, 0, 1, 1};
  const auto p = platt_fit(d, y);
  CHECK(std::abs(p.beta) < 1e-3);
  CHECK(p.alpha < 0);
  // grid oracle around the optimum
  const double best = platt_nll(d, y, p.alpha, p.beta);
  double grid_best = 1e300, ga = 0, gb = 0;
  for (double a = -5; a <= 0; a += 0.01) {
    for (double b = -1; b <= 1; b += 0.01) {
      const double f = platt_nll(d, y, a, b);
      if (f < grid_best) {
        grid_best = f;
        ga = a;
        gb = b;
      }
    }
  }
  CHECK(best <= grid_best + 1e-9);
  CHECK(std::abs(ga - p.alpha) < 0.02);
  CHECK(std::abs(gb - p.beta) < 0.02);
}

TEST_CASE("platt: uninformative scores give the class prior") {
  Rng rng(12);
  std::vector<double> d;
  std::vector<int> y;
  for (int i = 0; i < 4000; ++i) {
    d.push_back(rng.normal());
    y.push_back(rng.uniform() < 0.3 ? 1 : 0);
  }
  const auto p = platt_fit(d, y);
  CHECK(std::abs(p.alpha) < 0.1);
  for (double x : {-1.5, -0.5, 0.0, 0.5, 1.5}) CHECK(std::abs(platt_score(x, p) - 0.3) < 0.05);
}

TEST_CASE("platt: separated data stays finite") {
  const std::vector<double> d = {-3, -2, -1, 1, 2, 3};
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const auto p = platt_fit(d, y);
  CHECK(std::isfinite(p.alpha));
  CHECK(std::isfinite(p.beta));
  CHECK(p.alpha < 0);
  CHECK(platt_score(3, p) < 1.0);
  CHECK(platt_score(-3, p) > 0.0);
}

TEST_CASE("platt: errors") {
  const std::vector<double> d = {1, 2};
  try {
    platt_fit(d, std::vector<int>{1, 1});
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SingleClass);
  }
  CHECK_THROWS_AS(platt_fit(d, std::vector<int>{1}), Error);
  CHECK_THROWS_AS(platt_fit(d, std::vector<int>{1, -1}), Error);
}

TEST_CASE("platt score: midpoint, limits, grid, monotonicity") {
  CHECK(platt_score(0, {-1, 0}) == 0.5);
  CHECK(platt_score(40, {-1, 0}) == doctest::Approx(1.0));
  CHECK(platt_score(-40, {-1, 0}) == doctest::Approx(0.0));
  Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    const PlattParams p{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    if (std::abs(p.alpha) < 1e-3) continue;
    CHECK(std::abs(platt_score(-p.beta / p.alpha, p) - 0.5) < 1e-12);
    const double d = rng.uniform(-10, 10);
    CHECK(std::abs(platt_score(d, p) - 1.0 / (1.0 + std::exp(p.alpha * d + p.beta))) < 1e-12);
  }
  const PlattParams p{-1.3, 0.4};
  double prev = -1;
  for (int i = 0; i <= 1000; ++i) {
    const double s = platt_score(-15 + 0.03 * i, p);
    CHECK(s > prev);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    prev = s;
  }
}

TEST_CASE("metrics") {
  const std::vector<int> t = {1, 1, -1, -1};
  auto m = eval_metrics(t, t);
  CHECK(m.accuracy == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
  m = eval_metrics(std::vector<int>{-1, -1, -1, -1}, t);
  CHECK(m.accuracy == 0.5);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  // tp=2 fp=1 fn=1 tn=6
  const std::vector<int> pred = {1, 1, 1, -1, -1, -1, -1, -1, -1, -1};
  const std::vector<int> truth = {1, 1, -1, 1, -1, -1, -1, -1, -1, -1};
  m = eval_metrics(pred, truth);
  CHECK(m.precision == doctest::Approx(2.0 / 3));
  CHECK(m.recall == doctest::Approx(2.0 / 3));
  CHECK(m.f1 == doctest::Approx(2.0 / 3));
  CHECK(m.accuracy == doctest::Approx(0.8));
  CHECK_THROWS_AS(eval_metrics(std::vector<int>{1}, t), Error);
  CHECK_THROWS_AS(eval_metrics(std::vector<int>{}, std::vector<int>{}), Error);
}
