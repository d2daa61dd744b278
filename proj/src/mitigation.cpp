#include "qdrive/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qdrive {

namespace {
constexpr double kRowTol = 1e-9;

bool significant(double a, double b, std::size_t n, ZneMode mode) {
  if (mode == ZneMode::expectation) {
    a = 0.5 * (a + 1.0);
    b = 0.5 * (b + 1.0);
  }
  return std::abs(z_score(a, b, n)) > kZCritical;
}

bool strictly_between(double v, double lo_or_hi, double hi_or_lo) {
  const double lo = std::min(lo_or_hi, hi_or_lo);
  const double hi = std::max(lo_or_hi, hi_or_lo);
  return lo < v && v < hi;
}

double clamp_to_mode(double x, ZneMode mode) {
  return mode == ZneMode::expectation ? std::clamp(x, -1.0, 1.0) : std::clamp(x, 0.0, 1.0);
}
}  // namespace

void ConfusionMatrix::validate() const {
  for (double p : {p00, p01, p10, p11})
    if (!(p >= 0.0 && p <= 1.0)) throw MitigationError("confusion entries must be probabilities");
  if (std::abs(p00 + p01 - 1.0) > kRowTol || std::abs(p10 + p11 - 1.0) > kRowTol)
    throw MitigationError("confusion rows must sum to one");
  if (!(p00 - p10 > 1e-12)) throw MitigationError("degenerate confusion matrix (p00 <= p10)");
}

double readout_forward(double t0, const ConfusionMatrix& m) {
  return t0 * m.p00 + (1.0 - t0) * m.p10;
}

ReadoutEstimate readout_invert(double n0, const ConfusionMatrix& m) {
  m.validate();
  const double n1 = 1.0 - n0;
  ReadoutEstimate est;
  est.t0 = (n0 - m.p10) / (m.p00 - m.p10);
  est.t1 = (n1 - m.p01) / (m.p11 - m.p01);
  if (est.t0 < 0.0 || est.t0 > 1.0 || est.t1 < 0.0 || est.t1 > 1.0) {
    est.clamped = true;
    est.t0 = std::clamp(est.t0, 0.0, 1.0);
    est.t1 = std::clamp(est.t1, 0.0, 1.0);
    const double total = est.t0 + est.t1;
    if (total > 0.0) {
      est.t0 /= total;
      est.t1 /= total;
    } else {
      est.t0 = est.t1 = 0.5;
    }
  }
  return est;
}

namespace {
// Apply a 2x2 row-vector map [a b; c d] on bit k of every outcome index.
void apply_on_bit(std::vector<double>& probs, std::size_t bit, double a, double b, double c, double d) {
  const std::size_t stride = std::size_t{1} << bit;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i & stride) continue;
    const double v0 = probs[i], v1 = probs[i | stride];
    probs[i] = v0 * a + v1 * c;
    probs[i | stride] = v0 * b + v1 * d;
  }
}
}  // namespace

std::vector<double> readout_forward_distribution(std::vector<double> probs,
                                                 const std::vector<ConfusionMatrix>& qubit_confusion) {
  for (std::size_t k = 0; k < qubit_confusion.size(); ++k) {
    const auto& m = qubit_confusion[k];
    apply_on_bit(probs, k, m.p00, m.p01, m.p10, m.p11);
  }
  return probs;
}

std::vector<double> readout_invert_distribution(std::vector<double> probs,
                                                const std::vector<ConfusionMatrix>& qubit_confusion,
                                                bool* clamped) {
  for (std::size_t k = 0; k < qubit_confusion.size(); ++k) {
    const auto& m = qubit_confusion[k];
    m.validate();
    const double det = m.p00 * m.p11 - m.p01 * m.p10;
    apply_on_bit(probs, k, m.p11 / det, -m.p01 / det, -m.p10 / det, m.p00 / det);
  }
  bool fired = false;
  double total = 0.0;
  for (double& p : probs) {
    if (p < 0.0) {
      // Inversion of exact data may leave -1e-17 style round-off; only flag real clamps.
      if (p < -1e-12) fired = true;
      p = 0.0;
    }
    total += p;
  }
  if (total > 0.0)
    for (double& p : probs) p /= total;
  if (clamped) *clamped = fired;
  return probs;
}

std::string_view to_string(ZneBranch b) {
  switch (b) {
    case ZneBranch::constant: return "constant";
    case ZneBranch::undefined_averaged: return "undefined-averaged";
    case ZneBranch::outlier_x5: return "outlier-x5";
    case ZneBranch::linear: return "linear";
    case ZneBranch::exponential: return "exponential";
  }
  return "unknown";
}

double z_score(double x3, double x5, std::size_t shots) {
  const double diff = x3 - x5;
  const double var = x3 * (1.0 - x3) + x5 * (1.0 - x5);
  if (shots == 0 || !(var > 0.0)) {
    if (diff == 0.0) return 0.0;
    return diff > 0.0 ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
  }
  return diff / std::sqrt(var / static_cast<double>(shots));
}

ZneResult zne_extrapolate(const ZnePoints& pts) {
  const double x1 = pts.x1, x3 = pts.x3, x5 = pts.x5;
  const std::size_t n = pts.shots;
  ZneResult r;
  {
    double a = x3, b = x5;
    if (pts.mode == ZneMode::expectation) {
      a = 0.5 * (a + 1.0);
      b = 0.5 * (b + 1.0);
    }
    r.z35 = z_score(a, b, n);
  }

  const bool sig13 = significant(x1, x3, n, pts.mode);
  const bool sig35 = std::abs(r.z35) > kZCritical;
  const bool sig15 = significant(x1, x5, n, pts.mode);

  auto finish = [&](double x0, ZneBranch b) {
    r.x0 = clamp_to_mode(x0, pts.mode);
    r.branch = b;
    return r;
  };

  if (!sig13 && !sig35 && !sig15) return finish(x1, ZneBranch::constant);
  if (!sig15) return finish(x1, ZneBranch::undefined_averaged);
  if (strictly_between(x1, x3, x5)) return finish(0.5 * (x1 + x3), ZneBranch::outlier_x5);
  if (strictly_between(x5, x1, x3)) return finish(0.5 * (3.0 * x1 - x3), ZneBranch::linear);
  if (!sig35) return finish(0.5 * (3.0 * x1 - x3), ZneBranch::linear);

  // Monotone here: x3 lies between x1 and x5 (or coincides with x1).
  if (x1 == x3) return finish(x1, ZneBranch::exponential);
  const double ratio = (x3 - x5) / (x1 - x3);
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    // Only reachable through x3 == x5 with infinite z; treat as linear.
    return finish(0.5 * (3.0 * x1 - x3), ZneBranch::linear);
  }
  const double beta = std::sqrt(ratio);
  return finish(x1 + (x1 - x3) / (beta * beta + beta), ZneBranch::exponential);
}

Circuit fold_circuit(const Circuit& circuit, int lambda) {
  if (lambda < 1 || lambda % 2 == 0) throw MitigationError("fold factor must be a positive odd integer");
  const int reps = (lambda - 1) / 2;
  Circuit out(circuit.qubits());
  for (const Gate& g : circuit.gates()) {
    out.append(g);
    if (g.kind == GateKind::Measure) continue;
    const Gate inv = g.inverse();
    for (int r = 0; r < reps; ++r) {
      out.append(inv);
      out.append(g);
    }
  }
  return out;
}

}  // namespace qdrive
