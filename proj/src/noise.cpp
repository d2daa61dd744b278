#include "qdrive/noise.hpp"

#include <cmath>

namespace qdrive {

void NoiseModel::validate() const {
  if (one_qubit_gate_us < 0.0 || two_qubit_gate_us < 0.0) throw NoiseError("gate durations must be >= 0");
  if (!(gate_noise_reduction > 0.0)) throw NoiseError("gate noise reduction factor must be positive");
  for (std::size_t k = 0; k < qubits.size(); ++k) {
    const auto& q = qubits[k];
    const std::string where = " (qubit " + std::to_string(k) + ")";
    for (double p : {q.excited_population, q.p1, q.p2})
      if (!(p >= 0.0 && p <= 1.0)) throw NoiseError("noise probability out of [0,1]" + where);
    if (!(q.t1_us > 0.0) || !(q.t2_us > 0.0)) throw NoiseError("T1 and T2 must be positive" + where);
    if (q.t2_us > 2.0 * q.t1_us * (1.0 + 1e-12)) throw NoiseError("T2 must not exceed 2 T1" + where);
    try {
      q.readout.validate();
    } catch (const MitigationError& e) {
      throw NoiseError(std::string(e.what()) + where);
    }
  }
}

std::vector<ConfusionMatrix> NoiseModel::readout(int first, int count) const {
  std::vector<ConfusionMatrix> out;
  for (int k = first; k < first + count; ++k) {
    if (k >= size()) throw NoiseError("noise profile has too few qubits");
    out.push_back(qubits[static_cast<std::size_t>(k)].readout);
  }
  return out;
}

NoiseModel ideal_noise(int n) {
  NoiseModel m;
  m.qubits.resize(static_cast<std::size_t>(n));
  return m;
}

NoiseModel torino_profile() {
  NoiseModel m;
  m.name = "torino-like";
  m.one_qubit_gate_us = 0.06;
  m.two_qubit_gate_us = 0.3;
  m.qubits.resize(kTorinoQubits);
  for (auto& q : m.qubits) {
    q.t1_us = 70.0;
    q.t2_us = 50.0;
    q.excited_population = 0.0;
    q.p1 = 3e-4;
    q.p2 = 3e-3;
    q.readout = ConfusionMatrix::symmetric(2e-2);
  }
  return m;
}

int leading_digit(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw NoiseError("leading digit needs a positive finite value");
  const double scaled = value / order_of_magnitude(value);
  return static_cast<int>(std::floor(scaled + 1e-9));
}

double order_of_magnitude(double value) {
  return std::pow(10.0, std::floor(std::log10(value) + 1e-12));
}

NoiseModel scale_noise(const NoiseModel& baseline, double reduction, double longevity_us) {
  if (!(reduction > 0.0)) throw NoiseError("gate noise reduction factor must be positive");
  NoiseModel out = baseline;
  out.gate_noise_reduction = baseline.gate_noise_reduction * reduction;
  out.qubit_longevity_us = longevity_us;
  for (auto& q : out.qubits) {
    q.p1 /= reduction;
    q.p2 /= reduction;
    if (std::isinf(longevity_us)) {
      q.t1_us = q.t2_us = std::numeric_limits<double>::infinity();
    } else if (longevity_us > 0.0 && std::isfinite(q.t1_us)) {
      const double ratio = q.t2_us / q.t1_us;
      q.t1_us = leading_digit(q.t1_us) * longevity_us;
      q.t2_us = ratio * q.t1_us;
    }
  }
  return out;
}

}  // namespace qdrive
