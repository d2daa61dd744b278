#pragma once

// Derivative-free minimizers and the two circuit objectives of the pipeline.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdrive/estimator.hpp"
#include "qdrive/pauli.hpp"

namespace qdrive {

enum class OptimizerKind { nft, trust_region, simplex };
std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::nft;
  int max_iterations = 512;
  int max_evaluations = 2048;   // f_max
  int reset_interval = 32;      // NFT: exact re-evaluation every R updates
  int retries = 0;              // restarts from the best point until target
  double initial_radius = 1.0;  // trust region R_beg
  double initial_step = 1.0;    // simplex P_beg
  double final_radius = 1e-6;   // trust region / simplex stop radius
  double target = -std::numeric_limits<double>::infinity();  // f_tol
  /// NFT only: stop when a full sweep improves the model value by less.
  double sweep_tolerance = 0.0;
  /// NFT only: highest harmonic of the per-parameter model. 1 for linear
  /// observables, 2 for objectives quadratic in expectation values.
  int harmonics = 1;
  /// NFT only: 5-point sinusoid residual check on the first sweep.
  bool check_sinusoid = false;
  double sinusoid_tolerance = 1e-3;
  /// Wrap parameters into [-pi, pi) after each accepted move.
  bool wrap_angles = true;
};

struct TelemetryRow {
  int iteration = 0;
  std::uint64_t params_hash = 0;
  double value = 0.0;
  int evaluations = 0;
};

/// Counted objective. Evaluations go through operator() only.
class Objective {
 public:
  using Fn = std::function<double(std::span<const double>)>;
  explicit Objective(Fn fn) : fn_(std::move(fn)) {}

  double operator()(std::span<const double> x);
  int evaluations() const { return evaluations_; }
  std::vector<TelemetryRow>& telemetry() { return telemetry_; }
  const std::vector<TelemetryRow>& telemetry() const { return telemetry_; }
  void record(int iteration, std::span<const double> x, double value);

 private:
  Fn fn_;
  int evaluations_ = 0;
  std::vector<TelemetryRow> telemetry_;
};

struct OptimizeResult {
  std::vector<double> params;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool budget_exhausted = false;
  bool reached_target = false;
  OptimizerKind used = OptimizerKind::nft;
  std::vector<std::string> warnings;
};

struct Bounds {
  double lower = -3.14159265358979323846;
  double upper = 3.14159265358979323846;
};

/// Minimize from `initial`. Budget exhaustion is reported through the result,
/// never thrown; the returned point is the best evaluated one.
OptimizeResult minimize(Objective& objective, const OptimizerConfig& config, std::vector<double> initial,
                        Bounds bounds = {});

std::uint64_t hash_params(std::span<const double> x);

/// <H_H> + c sum_j |<psi(theta)|psi(theta_j)>|^2 with low-depth overlaps.
double vqd_objective(std::span<const double> params, const PauliSum& hermitian,
                     const std::vector<std::vector<double>>& priors, double penalty, EstimatorContext& ctx);

/// Operators needed by the pseudovariance objective.
struct PseudovarianceOperators {
  PauliSum nonhermitian;  // H_N = H_H + i V_CAP
  PauliSum product;       // H_N^dagger H_N
  static PseudovarianceOperators from(const PauliSum& nonhermitian);
};

struct PseudovarianceValue {
  double value = 0.0;   // <H_N^dagger H_N> - |<H_N>|^2
  cplx energy;          // <H_H> + i <V_CAP>
};

PseudovarianceValue evaluate_pseudovariance(std::span<const double> params, const PseudovarianceOperators& ops,
                                            EstimatorContext& ctx);

double pseudovariance_objective(std::span<const double> params, const PseudovarianceOperators& ops,
                                EstimatorContext& ctx);

}  // namespace qdrive
