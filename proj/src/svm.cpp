#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "bc/error.hpp"
#include "bc/models.hpp"
#include "bc/rng.hpp"

namespace bc {

namespace {

struct WeightedRow {
  std::vector<double> x;  // raw selected features
  int y = 0;
  double weight = 0.0;
};

// Merges identical (x, y) rows, keeping first-occurrence order.
std::vector<WeightedRow> merge_rows(const Matrix& X, std::span<const int> y, const std::vector<int>& cols) {
  std::map<std::pair<std::vector<double>, int>, std::size_t> seen;
  std::vector<WeightedRow> rows;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> x;
    x.reserve(cols.size());
    for (int c : cols) x.push_back(X(i, c));
    const int label = y[static_cast<std::size_t>(i)];
    auto [it, inserted] = seen.try_emplace({x, label}, rows.size());
    if (inserted) rows.push_back({std::move(x), label, 1.0});
    else rows[it->second].weight += 1.0;
  }
  return rows;
}

double objective(const std::vector<double>& w, const std::vector<std::vector<double>>& xs,
                 const std::vector<WeightedRow>& rows, double total_weight, double c) {
  double reg = 0.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) reg += w[k] * w[k];
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double m = rows[i].y * std::inner_product(w.begin(), w.end(), xs[i].begin(), 0.0);
    loss += rows[i].weight * std::max(0.0, 1.0 - m);
  }
  return 0.5 * reg + c * loss / total_weight;
}

}  // namespace

SvmModel svm_train(const Matrix& X, std::span<const int> y, const SvmConfig& cfg, std::uint64_t seed,
                   std::span<const int> feature_indices, const std::string& schema_id, SvmTrainReport* report) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw Error(Errc::LengthMismatch, "X rows vs labels");
  if (!(cfg.c > 0.0) || cfg.epochs < 1) throw Error(Errc::InvalidArgument, "svm needs c > 0 and epochs >= 1");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    if (v == 1) has_pos = true;
    else if (v == -1) has_neg = true;
    else throw Error(Errc::InvalidArgument, "svm labels must be +1/-1");
  }
  if (!has_pos || !has_neg) throw Error(Errc::SingleClass, "svm training data has one class");

  std::vector<int> cols(feature_indices.begin(), feature_indices.end());
  if (cols.empty()) {
    cols.resize(static_cast<std::size_t>(X.cols()));
    std::iota(cols.begin(), cols.end(), 0);
  }
  for (int c : cols) {
    if (c < 0 || c >= X.cols()) throw Error(Errc::InvalidArgument, "feature index out of range");
  }

  auto rows = merge_rows(X, y, cols);
  double total = 0.0;
  for (const auto& r : rows) total += r.weight;

  // Weighted standardizer; drop zero-variance columns.
  SvmModel model;
  model.schema_id = schema_id;
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    double s1 = 0.0;
    for (const auto& r : rows) s1 += r.weight * r.x[k];
    const double mean = s1 / total;
    double s2 = 0.0;
    for (const auto& r : rows) s2 += r.weight * (r.x[k] - mean) * (r.x[k] - mean);
    const double sd = std::sqrt(s2 / total);
    if (sd > 1e-12) {
      keep.push_back(k);
      model.feature_indices.push_back(cols[k]);
      model.standardizer.mean.push_back(mean);
      model.standardizer.stddev.push_back(sd);
    } else if (report) {
      report->dropped_features.push_back(cols[k]);
    }
  }
  const std::size_t d = keep.size() + 1;  // + constant input carrying the bias

  std::vector<std::vector<double>> xs(rows.size(), std::vector<double>(d, 1.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < keep.size(); ++k) {
      xs[i][k] = (rows[i].x[keep[k]] - model.standardizer.mean[k]) / model.standardizer.stddev[k];
    }
  }
  std::vector<double> cumulative(rows.size());
  cumulative[0] = rows[0].weight;
  for (std::size_t i = 1; i < rows.size(); ++i) cumulative[i] = cumulative[i - 1] + rows[i].weight;

  const double lambda = 1.0 / cfg.c;
  const double radius = 1.0 / std::sqrt(lambda);
  const std::size_t steps_per_epoch = rows.size();
  const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);
  const std::size_t average_from = total_steps / 2;

  Rng rng(seed);
  std::vector<double> w(d, 0.0), avg(d, 0.0), epoch_avg(d, 0.0);
  std::size_t n_avg = 0;
  for (std::size_t t = 1; t <= total_steps; ++t) {
    const double u = rng.uniform() * total;
    auto pos = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(pos), rows.size() - 1);

    const double eta = 1.0 / (lambda * static_cast<double>(t));
    const double margin = rows[i].y * std::inner_product(w.begin(), w.end(), xs[i].begin(), 0.0);
    const double shrink = 1.0 - eta * lambda;
    for (double& v : w) v *= shrink;
    if (margin < 1.0) {
      for (std::size_t k = 0; k < d; ++k) w[k] += eta * rows[i].y * xs[i][k];
    }
    double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    if (norm > radius) {
      for (double& v : w) v *= radius / norm;
    }

    for (std::size_t k = 0; k < d; ++k) epoch_avg[k] += w[k];
    if (t > average_from) {
      for (std::size_t k = 0; k < d; ++k) avg[k] += w[k];
      ++n_avg;
    }
    if (t % steps_per_epoch == 0) {
      if (report) {
        for (double& v : epoch_avg) v /= static_cast<double>(steps_per_epoch);
        report->epoch_objective.push_back(objective(epoch_avg, xs, rows, total, cfg.c));
      }
      std::fill(epoch_avg.begin(), epoch_avg.end(), 0.0);
    }
  }
  for (double& v : avg) v /= static_cast<double>(n_avg);

  model.weights.assign(avg.begin(), avg.end() - 1);
  model.bias = avg.back();
  return model;
}

double svm_decision_row(const SvmModel& m, std::span<const double> row) {
  double dot = m.bias;
  double norm2 = 0.0;
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    const auto idx = static_cast<std::size_t>(m.feature_indices[k]);
    if (idx >= row.size()) throw Error(Errc::SchemaMismatch, "feature index beyond input length");
    const double z = (row[idx] - m.standardizer.mean[k]) / m.standardizer.stddev[k];
    dot += m.weights[k] * z;
    norm2 += m.weights[k] * m.weights[k];
  }
  return norm2 > 0.0 ? dot / std::sqrt(norm2) : m.bias;
}

double svm_decision(const SvmModel& m, const FeatureVector& x) {
  if (!m.schema_id.empty() && x.schema_id != m.schema_id) {
    throw Error(Errc::SchemaMismatch, "model schema " + m.schema_id + " vs input " + x.schema_id);
  }
  return svm_decision_row(m, x.values);
}

int svm_predict(const SvmModel& m, const FeatureVector& x) { return sign_with_tie(svm_decision(m, x)); }

}  // namespace bc
