#include "bc/error.hpp"
#include "bc/models.hpp"

namespace bc {

Metrics eval_metrics(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size() || pred.empty()) {
    throw Error(Errc::LengthMismatch, std::to_string(pred.size()) + " predictions vs " +
                                          std::to_string(truth.size()) + " labels");
  }
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] > 0, t = truth[i] > 0;
    if (p && t) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
    else ++tn;
  }
  Metrics m;
  m.accuracy = (tp + tn) / static_cast<double>(pred.size());
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace bc
