#pragma once

// Device noise profile for the density-matrix tier.

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdrive/mitigation.hpp"

namespace qdrive {

class NoiseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct QubitNoise {
  double t1_us = std::numeric_limits<double>::infinity();
  double t2_us = std::numeric_limits<double>::infinity();
  double excited_population = 0.0;  // equilibrium p of generalized amplitude damping
  double p1 = 0.0;                  // one-qubit depolarizing probability
  double p2 = 0.0;                  // two-qubit depolarizing probability (pair uses the mean)
  ConfusionMatrix readout;
};

struct NoiseModel {
  std::string name = "ideal";
  std::vector<QubitNoise> qubits;
  double one_qubit_gate_us = 0.0;
  double two_qubit_gate_us = 0.0;
  double gate_noise_reduction = 1.0;
  double qubit_longevity_us = 0.0;  // informational; 0 = baseline profile

  int size() const { return static_cast<int>(qubits.size()); }
  /// Probabilities in range, T2 <= 2 T1, confusion rows valid.
  void validate() const;
  std::vector<ConfusionMatrix> readout(int first, int count) const;
};

/// Noise-free model for `n` qubits.
NoiseModel ideal_noise(int n);

/// Five-qubit Torino-like placeholder profile: T1 = 70 us, T2 = 50 us,
/// p1 = 3e-4, p2 = 3e-3, symmetric readout error 2e-2, 1q gate 0.06 us,
/// 2q gate 0.3 us. Representative values, not calibration data.
NoiseModel torino_profile();

inline constexpr int kTorinoQubits = 5;

/// Gate error probabilities divided by `reduction`; T1 set to
/// leading_digit(T1) * longevity_us with T2/T1 kept. Infinite longevity turns
/// thermal relaxation off; longevity_us <= 0 keeps the baseline times.
NoiseModel scale_noise(const NoiseModel& baseline, double reduction, double longevity_us);

/// Leading decimal digit of a positive value (70 -> 7, 0.35 -> 3).
int leading_digit(double value);

/// Order of magnitude 10^floor(log10(value)) (70 -> 10).
double order_of_magnitude(double value);

}  // namespace qdrive
