#include "qdrive/estimator.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <stdexcept>

#include "qdrive/simulator.hpp"

namespace qdrive {

namespace {

using Reducer = std::function<double(const std::vector<double>&)>;

std::vector<double> marginal(const std::vector<double>& probs, std::span<const int> measured) {
  std::vector<double> out(std::size_t{1} << measured.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    std::size_t j = 0;
    for (std::size_t b = 0; b < measured.size(); ++b)
      if ((i >> measured[b]) & 1u) j |= std::size_t{1} << b;
    out[j] += probs[i];
  }
  return out;
}

void normalize(std::vector<double>& p) {
  double total = 0.0;
  for (double v : p) total += v;
  if (total > 0.0)
    for (double& v : p) v /= total;
}

// Mitigated outcome distribution of one (possibly folded) circuit on the noisy tier.
std::vector<double> noisy_distribution(const Circuit& circuit, std::span<const int> measured,
                                       EstimatorContext& ctx) {
  const auto& opts = ctx.options();
  const DensityMatrix rho = simulate_density(circuit, opts.noise);
  std::vector<double> p = marginal(rho.probabilities(), measured);
  normalize(p);

  std::vector<ConfusionMatrix> conf;
  for (int q : measured) conf.push_back(opts.noise.qubits.at(static_cast<std::size_t>(q)).readout);
  p = readout_forward_distribution(std::move(p), conf);
  normalize(p);
  if (opts.shots > 0) p = sample_shots(p, opts.shots, ctx.next_seed()).probabilities();
  if (!opts.readout_mitigation) return p;

  bool clamped = false;
  if (measured.size() == 1) {
    const auto est = readout_invert(p[0], conf[0]);
    p = {est.t0, est.t1};
    clamped = est.clamped;
  } else {
    p = readout_invert_distribution(std::move(p), conf, &clamped);
  }
  if (clamped) ++ctx.telemetry().readout_clamps;
  return p;
}

double estimate(const Circuit& circuit, std::span<const int> measured, const Reducer& reduce, ZneMode mode,
                const std::string& label, EstimatorContext& ctx) {
  const auto& opts = ctx.options();
  auto& tel = ctx.telemetry();
  switch (opts.tier) {
    case Tier::statevector: {
      ++tel.circuits;
      return reduce(marginal(probabilities(statevector(circuit)), measured));
    }
    case Tier::shots: {
      ++tel.circuits;
      auto p = marginal(probabilities(statevector(circuit)), measured);
      normalize(p);
      return reduce(sample_shots(p, opts.shots, ctx.next_seed()).probabilities());
    }
    case Tier::noisy: {
      if (!opts.zne) {
        ++tel.circuits;
        return reduce(noisy_distribution(circuit, measured, ctx));
      }
      double x[3];
      const int scales[3] = {1, 3, 5};
      for (int s = 0; s < 3; ++s) {
        ++tel.circuits;
        x[s] = reduce(noisy_distribution(fold_circuit(circuit, scales[s]), measured, ctx));
      }
      const ZneResult r = zne_extrapolate(ZnePoints{x[0], x[1], x[2], opts.shots, mode});
      ++tel.zne_branches[std::string(to_string(r.branch))];
      if (opts.verbose) tel.zne_log.push_back(ZneRecord{label, x[0], x[1], x[2], r.z35, r.x0, r.branch});
      return r.x0;
    }
  }
  throw std::logic_error("unknown tier");
}

std::size_t circuits_per_estimate(const EstimatorOptions& o) {
  return o.tier == Tier::noisy && o.zne ? 3 : 1;
}

void count_word(EstimatorContext& ctx, const PauliWord& w) {
  auto& tel = ctx.telemetry();
  const std::size_t n = circuits_per_estimate(ctx.options());
  tel.circuits_by_word[w.str()] += n;
  if (w.is_identity()) tel.identity_word_circuits += n;
}

void check_qubits(const PauliWord& w, int q) {
  if (w.qubits() != q) throw std::invalid_argument("observable qubit count does not match the Ansatz");
}

double direct_word(std::span<const double> params, int q, const PauliWord& word, EstimatorContext& ctx) {
  count_word(ctx, word);
  Circuit c = build_ansatz(params, q);
  for (int k = 0; k < q; ++k) {
    switch (word.letter(k)) {
      case PauliLetter::X: c.h(k); break;
      case PauliLetter::Y: c.sdg(k).h(k); break;
      default: break;
    }
  }
  std::vector<int> measured(static_cast<std::size_t>(q));
  for (int k = 0; k < q; ++k) measured[static_cast<std::size_t>(k)] = k;
  const std::uint64_t support = word.support();
  const Reducer parity = [support](const std::vector<double>& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      acc += (std::popcount(static_cast<std::uint64_t>(i) & support) & 1) ? -p[i] : p[i];
    return acc;
  };
  return estimate(c, measured, parity, ZneMode::expectation, word.str(), ctx);
}

double hadamard_word(std::span<const double> params, int q, const PauliWord& word, HadamardPart part,
                     EstimatorContext& ctx) {
  count_word(ctx, word);
  Circuit c(q + 1);
  c.h(0);
  c.append(build_ansatz(params, q), 1);
  if (part == HadamardPart::imaginary) c.sdg(0);
  c.controlled_word(0, word, 1);
  c.h(0);
  const int measured[1] = {0};
  const Reducer z = [](const std::vector<double>& p) { return p[0] - p[1]; };
  return estimate(c, measured, z, ZneMode::expectation, word.str(), ctx);
}

}  // namespace

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::statevector: return "statevector";
    case Tier::shots: return "shots";
    case Tier::noisy: return "noisy";
  }
  return "unknown";
}

Tier parse_tier(std::string_view s) {
  if (s == "statevector") return Tier::statevector;
  if (s == "shots") return Tier::shots;
  if (s == "noisy") return Tier::noisy;
  throw std::invalid_argument("unknown tier '" + std::string(s) + "'");
}

std::string_view to_string(EstimatorMethod m) { return m == EstimatorMethod::direct ? "direct" : "hadamard"; }

EstimatorMethod parse_method(std::string_view s) {
  if (s == "direct") return EstimatorMethod::direct;
  if (s == "hadamard") return EstimatorMethod::hadamard;
  throw std::invalid_argument("unknown estimator method '" + std::string(s) + "'");
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined state
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EstimatorContext::EstimatorContext(EstimatorOptions options, std::uint64_t seed)
    : options_(std::move(options)), seed_(seed) {
  if (options_.tier != Tier::statevector && options_.shots == 0)
    throw std::invalid_argument("sampled tiers need a positive shot count");
  if (options_.tier == Tier::noisy) {
    options_.noise.validate();
    if (options_.noise.size() > kTorinoQubits)
      throw std::invalid_argument("noisy tier simulates at most five qubits");
  }
}

void merge_telemetry(EstimatorTelemetry& into, const EstimatorTelemetry& from) {
  into.circuits += from.circuits;
  into.overlap_circuits += from.overlap_circuits;
  into.identity_word_circuits += from.identity_word_circuits;
  into.readout_clamps += from.readout_clamps;
  for (const auto& [k, v] : from.circuits_by_word) into.circuits_by_word[k] += v;
  for (const auto& [k, v] : from.zne_branches) into.zne_branches[k] += v;
  into.zne_log.insert(into.zne_log.end(), from.zne_log.begin(), from.zne_log.end());
}

std::uint64_t EstimatorContext::next_seed() { return mix_seed(seed_, counter_++); }

int ansatz_qubits(std::size_t n) {
  const std::size_t per = ansatz_parameter_count(1);
  if (n == 0 || n % per != 0) throw std::invalid_argument("parameter count does not match the Ansatz");
  return static_cast<int>(n / per);
}

std::map<PauliWord, double> estimate_words(std::span<const double> params, const std::set<PauliWord>& words,
                                           EstimatorContext& ctx) {
  const int q = ansatz_qubits(params.size());
  std::map<PauliWord, double> out;
  const auto& opts = ctx.options();

  if (opts.tier == Tier::statevector && opts.method == EstimatorMethod::direct) {
    const StateVector psi = statevector(build_ansatz(params, q));
    for (const auto& w : words) {
      check_qubits(w, q);
      if (w.is_identity()) {
        out[w] = 1.0;
        continue;
      }
      count_word(ctx, w);
      ++ctx.telemetry().circuits;
      out[w] = expectation(psi, w).real();
    }
    return out;
  }

  for (const auto& w : words) {
    check_qubits(w, q);
    if (w.is_identity()) {
      out[w] = 1.0;
      continue;
    }
    out[w] = opts.method == EstimatorMethod::direct ? direct_word(params, q, w, ctx)
                                                    : hadamard_word(params, q, w, HadamardPart::real, ctx);
  }
  return out;
}

namespace {
cplx assemble(const PauliSum& observable, const std::map<PauliWord, double>& values) {
  cplx acc = 0.0;
  for (const auto& [w, c] : observable.terms()) acc += c * values.at(w);
  return acc;
}

std::set<PauliWord> words_of(const PauliSum& s) {
  std::set<PauliWord> out;
  for (const auto& kv : s.terms()) out.insert(kv.first);
  return out;
}
}  // namespace

cplx expectation(std::span<const double> params, const PauliSum& observable, EstimatorContext& ctx) {
  return assemble(observable, estimate_words(params, words_of(observable), ctx));
}

cplx expectation_pauli_direct(std::span<const double> params, const PauliSum& observable,
                              EstimatorContext& ctx) {
  const int q = ansatz_qubits(params.size());
  std::map<PauliWord, double> values;
  for (const auto& [w, c] : observable.terms()) {
    check_qubits(w, q);
    values[w] = w.is_identity() ? 1.0 : direct_word(params, q, w, ctx);
  }
  return assemble(observable, values);
}

double expectation_hadamard_test(std::span<const double> params, const PauliWord& word, HadamardPart part,
                                 EstimatorContext& ctx) {
  const int q = ansatz_qubits(params.size());
  check_qubits(word, q);
  if (word.is_identity()) return part == HadamardPart::real ? 1.0 : 0.0;
  return hadamard_word(params, q, word, part, ctx);
}

double overlap_lowdepth(std::span<const double> a, std::span<const double> b, EstimatorContext& ctx) {
  if (a.size() != b.size()) throw std::invalid_argument("overlap needs equal Ansatz sizes");
  const int q = ansatz_qubits(a.size());
  Circuit c = build_ansatz(a, q);
  c.append(build_ansatz(b, q).inverse());
  std::vector<int> measured(static_cast<std::size_t>(q));
  for (int k = 0; k < q; ++k) measured[static_cast<std::size_t>(k)] = k;
  ctx.telemetry().overlap_circuits += circuits_per_estimate(ctx.options());
  const Reducer zeros = [](const std::vector<double>& p) { return p[0]; };
  const double v = estimate(c, measured, zeros, ZneMode::probability, "overlap", ctx);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace qdrive
