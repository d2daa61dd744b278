#pragma once

// Readout confusion inversion and hybrid exponential-linear three-point
// zero-noise extrapolation.

#include <cstddef>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "qdrive/circuit.hpp"

namespace qdrive {

class MitigationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// p_ij: probability that true state i is read as j. Rows sum to one.
struct ConfusionMatrix {
  double p00 = 1.0, p01 = 0.0, p10 = 0.0, p11 = 1.0;

  static ConfusionMatrix symmetric(double error) { return {1.0 - error, error, error, 1.0 - error}; }
  static ConfusionMatrix identity() { return {}; }

  /// Throws MitigationError unless rows sum to one, entries are
  /// probabilities and p00 > p10.
  void validate() const;
};

/// Forward model N = T P for a single qubit: returns N0 for true T0.
double readout_forward(double t0, const ConfusionMatrix& m);

struct ReadoutEstimate {
  double t0 = 0.0;
  double t1 = 0.0;
  bool clamped = false;
};

ReadoutEstimate readout_invert(double n0, const ConfusionMatrix& m);

/// Apply per-qubit forward confusion to a full outcome distribution. Entry
/// `qubit_confusion[k]` acts on bit k of the outcome index.
std::vector<double> readout_forward_distribution(std::vector<double> probs,
                                                 const std::vector<ConfusionMatrix>& qubit_confusion);

/// Tensor-product inverse of readout_forward_distribution, followed by
/// clamping negative entries to zero and renormalizing. `clamped` reports
/// whether clamping changed anything.
std::vector<double> readout_invert_distribution(std::vector<double> probs,
                                                const std::vector<ConfusionMatrix>& qubit_confusion,
                                                bool* clamped = nullptr);

/// Expectation mode: values in [-1, 1] (ancilla <Z>). Probability mode: [0, 1].
enum class ZneMode { expectation, probability };

struct ZnePoints {
  double x1 = 0.0, x3 = 0.0, x5 = 0.0;
  std::size_t shots = 0;
  ZneMode mode = ZneMode::expectation;
};

enum class ZneBranch { constant, undefined_averaged, outlier_x5, linear, exponential };

std::string_view to_string(ZneBranch b);

struct ZneResult {
  double x0 = 0.0;
  ZneBranch branch = ZneBranch::constant;
  double z35 = 0.0;  // z-score of x3 vs x5
};

/// Two-sample binomial z-score for proportions x3, x5 in [0, 1]. Returns
/// +/-infinity when the joint variance vanishes but the values differ, 0 when
/// both vanish together.
double z_score(double x3, double x5, std::size_t shots);

/// Critical value for the two-sided test at the 0.95 level.
inline constexpr double kZCritical = 1.96;

/// Branch rules, first match wins:
///  constant            x1 ~ x3 ~ x5 pairwise insignificant -> x1
///  undefined-averaged  x1 ~ x5                             -> x1
///  outlier-x5          x1 strictly between x3 and x5       -> (x1 + x3) / 2
///  linear              x5 strictly between x1 and x3       -> (3 x1 - x3) / 2
///  linear              x3 ~ x5                             -> (3 x1 - x3) / 2
///  exponential         otherwise (monotone)                -> x1 + (x1 - x3) / (b^2 + b)
/// with b = sqrt((x3 - x5) / (x1 - x3)). The result is clamped to the mode's
/// physical range.
ZneResult zne_extrapolate(const ZnePoints& pts);

/// Unitary folding: every gate G becomes G (G^dagger G)^((lambda - 1) / 2).
/// Measurements are kept as is. Rejects even or non-positive lambda.
Circuit fold_circuit(const Circuit& circuit, int lambda);

}  // namespace qdrive
