#include <doctest.h>

#include <cmath>

#include "bc/error.hpp"
#include "bc/scoring.hpp"
#include "bc/serialization.hpp"
#include "bc/synthetic.hpp"
#include "support.hpp"

using namespace bc;

namespace {

// Densities written from the textbook formulas, independent of the library.
double ln_pdf(double t, double mu, double sigma, double s) {
  if (t <= mu) return 0.0;
  const double z = (t - mu) / sigma;
  return std::exp(-std::pow(std::log(z), 2) / (2 * s * s)) / (z * s * std::sqrt(2 * M_PI)) / sigma;
}

double sn_pdf(double x, double xi, double omega, double a) {
  const double z = (x - xi) / omega;
  const double phi = std::exp(-z * z / 2) / std::sqrt(2 * M_PI);
  const double Phi = 0.5 * std::erfc(-a * z / std::sqrt(2.0));
  return 2 / omega * phi * Phi;
}

SkewNormalParams sn(double xi, double omega, double a, std::int64_t dur = 60000) {
  SkewNormalParams p;
  p.xi = xi;
  p.omega = omega;
  p.a = a;
  p.task_duration_ms = dur;
  p.k = progress_scale(p);
  return p;
}

const TriplePConfig& demo() {
  static const TriplePConfig c = load_scoring(test::data_dir() / "scoring_demo.json");
  return c;
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

}  // namespace

TEST_CASE("pause score examples") {
  const LogNormalParams p{0, 1000, 0.5, ""};
  CHECK(pause_score(0, p) == 0.0);
  CHECK(pause_score(1000, p) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pause_score(2000, p) == doctest::Approx(0.9172).epsilon(1e-4));
  const double quad = test::simpson([](double t) { return ln_pdf(t, 0, 1000, 0.5); }, 1e-9, 2000, 20000);
  CHECK(std::abs(pause_score(2000, p) - quad) < 1e-6);

  const LogNormalParams shifted{300, 800, 1.1, ""};
  CHECK(pause_score(300, shifted) == 0.0);
  CHECK(pause_score(200, shifted) == 0.0);
  CHECK(pause_score(1100, shifted) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("lognormal cdf matches quadrature of the density") {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const LogNormalParams p{rng.uniform(0, 500), rng.uniform(200, 4000), rng.uniform(0.3, 1.5), ""};
    const double t = p.mu + rng.uniform(1, 4) * p.sigma;
    // split at the mode region for accuracy
    const double quad = test::simpson([&](double x) { return ln_pdf(x, p.mu, p.sigma, p.s); }, p.mu + 1e-9, t, 40000);
    CHECK(std::abs(lognormal_cdf(t, p) - quad) < 1e-6);
    CHECK(std::abs(lognormal_pdf(t, p) - ln_pdf(t, p.mu, p.sigma, p.s)) < 1e-12);
  }
}

TEST_CASE("pause score is monotone") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const LogNormalParams p{rng.uniform(0, 1000), rng.uniform(10, 5000), rng.uniform(0.1, 3), ""};
    double prev = 0;
    for (double t = 0; t < 30000; t += 37) {
      const double s = pause_score(t, p);
      CHECK(s >= prev);
      CHECK(s < 1.0 + 1e-15);
      if (t > p.mu + 1 && prev > 0 && prev < 1) CHECK(s >= prev);
      prev = s;
    }
  }
}

TEST_CASE("lognormal fit recovers parameters") {
  Rng rng(3);
  const LogNormalParams truth{0, 1000, 0.8, ""};
  const auto xs = synth::sample_lognormal(truth, 10000, rng);
  FitReport rep;
  const auto fit = fit_lognormal(xs, &rep);
  CHECK(std::abs(fit.sigma / truth.sigma - 1) < 0.05);
  CHECK(std::abs(fit.s / truth.s - 1) < 0.05);
  CHECK(fit.mu >= 0);
  CHECK(rep.ks_statistic < 0.02);
  // the fitted median
  CHECK(std::abs(lognormal_cdf(fit.mu + fit.sigma, fit) - 0.5) < 1e-6);
}

TEST_CASE("lognormal fit with a location shift") {
  Rng rng(4);
  const LogNormalParams truth{400, 1500, 0.6, ""};
  const auto xs = synth::sample_lognormal(truth, 10000, rng);
  const auto fit = fit_lognormal(xs);
  CHECK(std::abs(fit.mu + fit.sigma - (truth.mu + truth.sigma)) < 0.05 * truth.sigma);
  CHECK(fit.mu < *std::min_element(xs.begin(), xs.end()));
}

TEST_CASE("lognormal fit errors") {
  std::vector<double> few(19, 100.0);
  few[0] = 50;
  CHECK(code_of([&] { fit_lognormal(few); }) == Errc::TooFewSamples);
  std::vector<double> same(50, 700.0);
  CHECK(code_of([&] { fit_lognormal(same); }) == Errc::DegenerateSamples);
}

TEST_CASE("skew-normal cdf and bin mass match quadrature") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = sn(rng.uniform(5000, 50000), rng.uniform(3000, 30000), rng.uniform(-4, 4));
    const double lo = p.xi - 8 * p.omega;
    const double x = rng.uniform(0, 60000);
    const double quad = test::simpson([&](double t) { return sn_pdf(t, p.xi, p.omega, p.a); }, lo, x, 40000);
    CHECK(std::abs(skewnormal_cdf(x, p) - quad) < 1e-6);
    const auto bin = static_cast<std::int64_t>(rng.index(600));
    const double a = static_cast<double>(bin * 100);
    const double mass = test::simpson([&](double t) { return sn_pdf(t, p.xi, p.omega, p.a); }, a, a + 100, 200);
    CHECK(std::abs(skewnormal_bin_mass(bin, p) - mass) < 1e-9);
  }
}

TEST_CASE("progress score: scaling and range") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = sn(rng.uniform(0, 60000), rng.uniform(2000, 40000), rng.uniform(-5, 5));
    double mx = 0, mass_max = 0;
    for (std::int64_t b = 0; b < 600; ++b) {
      mx = std::max(mx, progress_score(static_cast<double>(b * 100 + 50), p));
      mass_max = std::max(mass_max, skewnormal_bin_mass(b, p));
    }
    CHECK(mx == 1.0);
    CHECK(p.k * mass_max == 1.0);
    CHECK(progress_score(60001, p) == 0.0);
    CHECK(progress_score(60000, p) == 0.0);
    CHECK(progress_score(-1, p) == 0.0);
  }
  // piecewise constant on bins
  const auto p = sn(30000, 12000, 3);
  CHECK(progress_score(4500, p) == progress_score(4599.9, p));
}

TEST_CASE("progress score at 45 s equals k times the integrated bin") {
  const auto& f = demo().tasks.at("fluency").progress;
  const double mass = test::simpson([&](double t) { return sn_pdf(t, f.xi, f.omega, f.a); }, 45000, 45100, 400);
  CHECK(std::abs(progress_score(45000, f) - f.k * mass) < 1e-6);
}

TEST_CASE("skew-normal fit recovers parameters") {
  Rng rng(7);
  const auto truth = sn(30000, 12000, 3);
  const auto xs = synth::sample_skewnormal_in_task(truth, 10000, rng);
  FitReport rep;
  const auto fit = fit_skewnormal(xs, 60000, 100, &rep);
  CHECK(std::abs(fit.xi / truth.xi - 1) < 0.1);
  CHECK(std::abs(fit.omega / truth.omega - 1) < 0.1);
  CHECK(std::abs(fit.a / truth.a - 1) < 0.1);
  CHECK(fit.k == progress_scale(fit));
}

TEST_CASE("symmetric samples give small shape") {
  Rng rng(8);
  int ok = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto xs = synth::sample_skewnormal_in_task(sn(30000, 8000, 0), 10000, rng);
    ok += std::abs(fit_skewnormal(xs, 60000).a) < 0.3;
  }
  CHECK(ok == 5);
}

TEST_CASE("skew-normal fit errors") {
  std::vector<double> few(10, 1000.0);
  CHECK(code_of([&] { fit_skewnormal(few, 60000); }) == Errc::TooFewSamples);
  std::vector<double> outside(100, 90000.0);
  CHECK(code_of([&] { fit_skewnormal(outside, 60000); }) == Errc::TooFewSamples);
  CHECK(code_of([&] { fit_skewnormal(few, 60050, 100); }) == Errc::InvalidArgument);
}

TEST_CASE("participant score") {
  const PlattParams p{-1.7, 0.6};
  CHECK(std::abs(participant_score(-p.beta / p.alpha, p) - 0.5) < 1e-12);
  CHECK(participant_score(3.0, p) > 0.5);  // deep in the +1 half-space
  CHECK(participant_score(-3.0, p) < 0.5);
  CHECK(participant_score(0.4, p) == participant_score(0.4, p));
}

TEST_CASE("pbc score examples") {
  const TriplePWeights third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(pbc_score(0.9, 0.6, 0.3, third) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(pbc_score(1, 1, 1, third) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(code_of([] { pbc_score(0.5, 0.5, 0.5, TriplePWeights{0.5, 0.5, 0.5}); }) == Errc::WeightsNotNormalized);
  CHECK(code_of([] { pbc_score(0.5, 0.5, 0.5, TriplePWeights{1.2, -0.1, -0.1}); }) == Errc::WeightsNotNormalized);
}

TEST_CASE("pbc score is a convex combination") {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    double a = rng.uniform(), b = rng.uniform();
    if (a > b) std::swap(a, b);
    const TriplePWeights w{a, b - a, 1 - b};
    const double s1 = rng.uniform(), s2 = rng.uniform(), s3 = rng.uniform();
    const double got = pbc_score(s1, s2, s3, w);
    CHECK(std::abs(got - (w.pause * s1 + w.progress * s2 + w.participant * s3)) < 1e-12);
    CHECK(got >= std::min({s1, s2, s3}) - 1e-15);
    CHECK(got <= std::max({s1, s2, s3}) + 1e-15);
  }
}

TEST_CASE("pbc decision is strict and monotone in the threshold") {
  CHECK_FALSE(pbc_decision(0.75, 0.75));
  CHECK(pbc_decision(std::nextafter(0.75, 1.0), 0.75));
  CHECK_FALSE(pbc_decision(0.5, 0.99));
  Rng rng(10);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform(), t1 = rng.uniform(), t2 = rng.uniform() * t1;
    if (pbc_decision(s, t1)) CHECK(pbc_decision(s, t2));
  }
}

TEST_CASE("decision is monotone in pause within a progress bin") {
  const auto& c = demo();
  const auto& m = c.tasks.at("fluency");
  for (double task_t = 0; task_t < 60000; task_t += 100) {
    bool fired = false;
    for (double pause = 0; pause < 20000; pause += 100) {
      const bool d = pbc_decision(pbc_score(pause_score(pause, m.pause), progress_score(task_t + 50, m.progress), 0.5, c), c);
      if (fired) CHECK(d);
      fired = fired || d;
    }
  }
}

TEST_CASE("config validation") {
  TriplePConfig c = demo();
  CHECK_NOTHROW(c.validate());
  c.thr_pbc = 1.0;
  CHECK(code_of([&] { c.validate(); }) == Errc::InvalidArgument);
  c = demo();
  c.weights.pause = 0.6;
  CHECK(code_of([&] { c.validate(); }) == Errc::WeightsNotNormalized);
  c = demo();
  c.tasks.begin()->second.progress.bin_ms = 70;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("shipped serial-7 pause score dominates verbal fluency") {
  const auto& s7 = demo().tasks.at("serial7").pause;
  const auto& fl = demo().tasks.at("fluency").pause;
  for (int t = 0; t <= 10000; t += 10) CHECK(pause_score(t, s7) >= pause_score(t, fl));
}
