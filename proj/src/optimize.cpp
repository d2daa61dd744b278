#include "qdrive/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

namespace qdrive {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w - kPi;
}

// Best evaluated point, shared by all kinds so restarts and downgrades keep it.
struct Tracker {
  Objective& obj;
  const OptimizerConfig& cfg;
  Bounds bounds;
  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  int iteration = 0;

  bool can_spend(int n) const { return obj.evaluations() + n <= cfg.max_evaluations; }

  void project(std::vector<double>& x) const {
    for (double& v : x) v = cfg.wrap_angles ? wrap_angle(v) : std::clamp(v, bounds.lower, bounds.upper);
  }

  double eval(const std::vector<double>& x) {
    const double f = obj(x);
    if (f < best_f || best_x.empty()) {
      best_f = f;
      best_x = x;
    }
    obj.record(iteration, x, f);
    return f;
  }
};

// ---------------------------------------------------------------- trust region
// Quadratic model: central-difference gradient and diagonal curvature every
// iteration, off-diagonal curvature from SR1 updates. The subproblem is solved
// exactly in the model's eigenbasis.
std::vector<double> diagonal_tr_step(const Eigen::VectorXd& g, const Eigen::VectorXd& d, double radius) {
  const Eigen::Index m = g.size();
  auto step_for = [&](double mu) {
    Eigen::VectorXd s(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double denom = d(k) + mu;
      s(k) = denom > 1e-14 ? -g(k) / denom : 0.0;
    }
    return s;
  };
  const double dmin = d.minCoeff();
  if (dmin > 1e-12) {
    const Eigen::VectorXd s = step_for(0.0);
    if (s.norm() <= radius) return {s.data(), s.data() + m};
  }
  if (g.norm() < 1e-300) {
    // Hard case with zero gradient: move along the most negative curvature.
    Eigen::Index k = 0;
    d.minCoeff(&k);
    std::vector<double> s(static_cast<std::size_t>(m), 0.0);
    if (d(k) < 0.0) s[static_cast<std::size_t>(k)] = radius;
    return s;
  }
  double lo = std::max(0.0, -dmin) + 1e-12;
  double hi = lo + g.norm() / radius + 1.0;
  while (step_for(hi).norm() > radius) hi *= 2.0;
  if (step_for(lo).norm() <= radius) {
    // Hard case: the boundary cannot be reached by mu > -dmin alone.
    const Eigen::VectorXd s = step_for(lo);
    return {s.data(), s.data() + m};
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (step_for(mid).norm() > radius) lo = mid; else hi = mid;
  }
  const Eigen::VectorXd s = step_for(hi);
  return {s.data(), s.data() + m};
}

void trust_region_pass(Tracker& t, std::vector<double> x, double fx, OptimizeResult& res) {
  const auto& cfg = t.cfg;
  const std::size_t m = x.size();
  double radius = cfg.initial_radius;
  const auto em = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd B;
  Eigen::VectorXd g_prev, step_prev;
  while (radius > cfg.final_radius && t.iteration < cfg.max_iterations) {
    if (!t.can_spend(static_cast<int>(2 * m + 1))) {
      res.budget_exhausted = true;
      return;
    }
    ++t.iteration;
    const double h = std::min(radius, 1.0);
    Eigen::VectorXd g(em), d(em);
    std::vector<double> probe_x;
    Eigen::VectorXd probe_step = Eigen::VectorXd::Zero(em);
    double probe_f = fx;
    for (std::size_t k = 0; k < m; ++k) {
      const auto ek = static_cast<Eigen::Index>(k);
      std::vector<double> xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      t.project(xp);
      t.project(xm);
      const double fp = t.eval(xp), fm = t.eval(xm);
      g(ek) = (fp - fm) / (2.0 * h);
      d(ek) = (fp - 2.0 * fx + fm) / (h * h);
      if (fp < probe_f) { probe_f = fp; probe_x = xp; probe_step.setZero(); probe_step(ek) = h; }
      if (fm < probe_f) { probe_f = fm; probe_x = xm; probe_step.setZero(); probe_step(ek) = -h; }
    }

    // SR1 update from the last accepted step, then the measured diagonal.
    if (B.size() == 0) {
      B = d.asDiagonal();
    } else if (step_prev.size() == em) {
      const Eigen::VectorXd r = (g - g_prev) - B * step_prev;
      const double denom = r.dot(step_prev);
      if (std::abs(denom) > 1e-8 * r.norm() * step_prev.norm()) B += r * r.transpose() / denom;
    }
    B.diagonal() = d;
    step_prev.resize(0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (B + B.transpose()));
    const Eigen::VectorXd gr = eig.eigenvectors().transpose() * g;
    const std::vector<double> sr = diagonal_tr_step(gr, eig.eigenvalues(), radius);
    const Eigen::VectorXd s = eig.eigenvectors() * Eigen::Map<const Eigen::VectorXd>(sr.data(), em);
    const double predicted = -(g.dot(s) + 0.5 * s.dot(B * s));
    const double snorm = s.norm();

    double ratio = -1.0;
    std::vector<double> trial = x;
    double ftrial = std::numeric_limits<double>::infinity();
    if (snorm > 0.0 && predicted > 0.0) {
      for (std::size_t k = 0; k < m; ++k) trial[k] += s(static_cast<Eigen::Index>(k));
      t.project(trial);
      ftrial = t.eval(trial);
      ratio = (fx - ftrial) / predicted;
    }

    if (ftrial < fx && ftrial <= probe_f) {
      x = trial;
      fx = ftrial;
      step_prev = s;
    } else if (probe_f < fx) {
      x = probe_x;
      fx = probe_f;
      step_prev = probe_step;
    }
    if (step_prev.size() == em) g_prev = g;

    if (ratio > 0.75 && snorm >= 0.99 * radius) {
      radius = std::min(2.0 * radius, kPi);
    } else if (ratio < 0.25) {
      radius *= 0.5;
    }
  }
}

// --------------------------------------------------------------------- simplex
// Linear-approximation method: m+1 vertices define a linear model, the trial
// moves distance rho downhill from the best vertex, rho halves on failure.
void simplex_pass(Tracker& t, std::vector<double> x, double fx, OptimizeResult& res) {
  const auto& cfg = t.cfg;
  const std::size_t m = x.size();
  const auto em = static_cast<Eigen::Index>(m);
  double rho = cfg.initial_step;
  std::vector<std::vector<double>> verts;
  std::vector<double> fv;

  auto rebuild = [&]() -> bool {
    if (!t.can_spend(static_cast<int>(m))) return false;
    verts.assign(m, x);
    fv.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      verts[k][k] += rho;
      if (!cfg.wrap_angles) verts[k][k] = std::clamp(verts[k][k], t.bounds.lower, t.bounds.upper);
      fv[k] = t.eval(verts[k]);
    }
    return true;
  };

  if (!rebuild()) {
    res.budget_exhausted = true;
    return;
  }
  while (rho > cfg.final_radius && t.iteration < cfg.max_iterations) {
    ++t.iteration;
    Eigen::MatrixXd A(em, em);
    Eigen::VectorXd b(em);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t j = 0; j < m; ++j) A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = verts[k][j] - x[j];
      b(static_cast<Eigen::Index>(k)) = fv[k] - fx;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    const bool degenerate = qr.rank() < em;
    Eigen::VectorXd g = degenerate ? Eigen::VectorXd::Zero(em) : Eigen::VectorXd(qr.solve(b));
    if (degenerate || g.norm() < 1e-14) {
      rho *= 0.5;
      if (!rebuild()) { res.budget_exhausted = true; return; }
      continue;
    }
    if (!t.can_spend(1)) { res.budget_exhausted = true; return; }
    std::vector<double> trial = x;
    const double gn = g.norm();
    for (std::size_t k = 0; k < m; ++k) trial[k] -= rho * g(static_cast<Eigen::Index>(k)) / gn;
    if (!cfg.wrap_angles) t.project(trial);
    const double ft = t.eval(trial);
    const auto worst = static_cast<std::size_t>(std::max_element(fv.begin(), fv.end()) - fv.begin());
    if (ft < fx) {
      verts[worst] = x;
      fv[worst] = fx;
      x = trial;
      fx = ft;
    } else if (ft < fv[worst]) {
      verts[worst] = trial;
      fv[worst] = ft;
    } else {
      rho *= 0.5;
      if (!rebuild()) { res.budget_exhausted = true; return; }
    }
    // Keep the simplex local: vertices drifting beyond 3 rho degrade the model.
    for (const auto& v : verts) {
      double dist = 0.0;
      for (std::size_t j = 0; j < m; ++j) dist += (v[j] - x[j]) * (v[j] - x[j]);
      if (std::sqrt(dist) > 3.0 * rho) {
        if (!rebuild()) { res.budget_exhausted = true; return; }
        break;
      }
    }
  }
}

// ------------------------------------------------------------------------- NFT
// Each parameter enters as a + B cos(delta) + C sin(delta); the values at
// 0, +pi/2 and -pi/2 fix a, B and C and so the exact coordinate minimizer.
// Degree-2 variant: f(delta) = a0 + sum_{n=1,2} a_n cos(n delta) + b_n sin(n delta)
// from five equally spaced samples; returns the minimizing shift and value.
std::pair<double, double> second_harmonic_step(Tracker& t, const std::vector<double>& x, std::size_t k,
                                               double current) {
  double f[5];
  f[0] = current;
  for (int j = 1; j < 5; ++j) {
    std::vector<double> xj = x;
    xj[k] += 2.0 * kPi * j / 5.0;
    f[j] = t.eval(xj);
  }
  double a0 = 0.0, a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;
  for (int j = 0; j < 5; ++j) {
    const double d = 2.0 * kPi * j / 5.0;
    a0 += f[j] / 5.0;
    a1 += 0.4 * f[j] * std::cos(d);
    b1 += 0.4 * f[j] * std::sin(d);
    a2 += 0.4 * f[j] * std::cos(2.0 * d);
    b2 += 0.4 * f[j] * std::sin(2.0 * d);
  }
  auto model = [&](double d) {
    return a0 + a1 * std::cos(d) + b1 * std::sin(d) + a2 * std::cos(2.0 * d) + b2 * std::sin(2.0 * d);
  };
  double best = 0.0, best_v = model(0.0);
  for (int j = 1; j < 64; ++j) {
    const double d = 2.0 * kPi * j / 64.0;
    if (const double v = model(d); v < best_v) { best_v = v; best = d; }
  }
  for (int it = 0; it < 20; ++it) {
    const double g = -a1 * std::sin(best) + b1 * std::cos(best) - 2.0 * a2 * std::sin(2.0 * best) +
                     2.0 * b2 * std::cos(2.0 * best);
    const double h = -a1 * std::cos(best) - b1 * std::sin(best) - 4.0 * a2 * std::cos(2.0 * best) -
                     4.0 * b2 * std::sin(2.0 * best);
    if (h <= 0.0) break;
    const double next = best - g / h;
    if (model(next) > best_v) break;
    best = next;
    best_v = model(next);
  }
  return {best, best_v};
}

void nft_pass(Tracker& t, std::vector<double> x, double fx, OptimizeResult& res) {
  const auto& cfg = t.cfg;
  const std::size_t m = x.size();
  double current = fx;
  int since_reset = 0;
  bool first_sweep = true;
  bool fresh = true;  // current is an exact evaluation of x
  while (true) {
    const double sweep_start = current;
    for (std::size_t k = 0; k < m; ++k) {
      const int needed = cfg.harmonics == 2 ? 4 : 2 + (first_sweep && cfg.check_sinusoid ? 2 : 0);
      if (t.iteration >= cfg.max_iterations) goto done;
      if (!t.can_spend(needed)) {
        res.budget_exhausted = true;
        goto done;
      }
      if (cfg.harmonics == 2) {
        const auto [delta, value] = second_harmonic_step(t, x, k, current);
        x[k] += delta;
        if (cfg.wrap_angles) x[k] = wrap_angle(x[k]);
        current = value;
        fresh = false;
        ++t.iteration;
        if (++since_reset >= cfg.reset_interval) {
          since_reset = 0;
          if (!t.can_spend(1)) {
            res.budget_exhausted = true;
            goto done;
          }
          current = t.eval(x);
          fresh = true;
        }
        continue;
      }
      std::vector<double> xp = x, xm = x;
      xp[k] += kPi / 2.0;
      xm[k] -= kPi / 2.0;
      const double zp = t.eval(xp), zm = t.eval(xm);
      const double a = 0.5 * (zp + zm);
      const double C = 0.5 * (zp - zm);
      const double B = current - a;

      if (first_sweep && cfg.check_sinusoid) {
        std::vector<double> xpi = x, xq = x;
        xpi[k] += kPi;
        xq[k] += kPi / 4.0;
        const double zpi = t.eval(xpi), zq = t.eval(xq);
        const double r1 = std::abs(zpi - (a - B));
        const double r2 = std::abs(zq - (a + B * std::cos(kPi / 4.0) + C * std::sin(kPi / 4.0)));
        if (std::max(r1, r2) > cfg.sinusoid_tolerance) {
          res.warnings.push_back("sinusoid residual " + std::to_string(std::max(r1, r2)) +
                                 " above tolerance; switching to trust_region");
          res.used = OptimizerKind::trust_region;
          trust_region_pass(t, t.best_x, t.best_f, res);
          return;
        }
      }

      x[k] += std::atan2(-C, -B);
      if (cfg.wrap_angles) x[k] = wrap_angle(x[k]);
      current = a - std::hypot(B, C);
      fresh = false;
      ++t.iteration;
      if (++since_reset >= cfg.reset_interval) {
        since_reset = 0;
        if (!t.can_spend(1)) {
          res.budget_exhausted = true;
          goto done;
        }
        current = t.eval(x);
        fresh = true;
      }
    }
    first_sweep = false;
    if (cfg.sweep_tolerance > 0.0 && sweep_start - current < cfg.sweep_tolerance) break;
  }
done:
  if (!fresh && t.can_spend(1)) t.eval(x);
}
}  // namespace

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::nft: return "nft";
    case OptimizerKind::trust_region: return "trust_region";
    case OptimizerKind::simplex: return "simplex";
  }
  return "unknown";
}

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "nft") return OptimizerKind::nft;
  if (s == "trust_region") return OptimizerKind::trust_region;
  if (s == "simplex") return OptimizerKind::simplex;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

double Objective::operator()(std::span<const double> x) {
  ++evaluations_;
  return fn_(x);
}

void Objective::record(int iteration, std::span<const double> x, double value) {
  telemetry_.push_back(TelemetryRow{iteration, hash_params(x), value, evaluations_});
}

std::uint64_t hash_params(std::span<const double> x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the raw bytes
  for (double v : x) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

OptimizeResult minimize(Objective& objective, const OptimizerConfig& config, std::vector<double> initial,
                        Bounds bounds) {
  if (config.max_evaluations < 1 || config.max_iterations < 1)
    throw std::invalid_argument("optimizer budgets must be positive");
  if (initial.empty()) throw std::invalid_argument("optimizer needs at least one parameter");

  OptimizeResult res;
  res.used = config.kind;
  Tracker t{objective, config, bounds, {}, std::numeric_limits<double>::infinity(), 0};
  t.project(initial);
  const double f0 = t.eval(initial);

  switch (config.kind) {
    case OptimizerKind::nft:
      if (config.reset_interval < 1) throw std::invalid_argument("NFT reset interval must be positive");
      if (config.harmonics != 1 && config.harmonics != 2) throw std::invalid_argument("NFT harmonics must be 1 or 2");
      nft_pass(t, initial, f0, res);
      for (int r = 0; r < config.retries && t.best_f > config.target && !res.budget_exhausted; ++r) {
        nft_pass(t, t.best_x, t.best_f, res);
      }
      break;
    case OptimizerKind::trust_region:
      if (!(config.initial_radius > 0.0)) throw std::invalid_argument("trust region radius must be positive");
      trust_region_pass(t, initial, f0, res);
      for (int r = 0; r < config.retries && t.best_f > config.target && !res.budget_exhausted; ++r) {
        trust_region_pass(t, t.best_x, t.best_f, res);
      }
      break;
    case OptimizerKind::simplex:
      if (!(config.initial_step > 0.0)) throw std::invalid_argument("simplex step must be positive");
      simplex_pass(t, initial, f0, res);
      break;
  }

  res.params = t.best_x;
  res.value = t.best_f;
  res.evaluations = objective.evaluations();
  res.iterations = t.iteration;
  res.reached_target = t.best_f <= config.target;
  return res;
}

double vqd_objective(std::span<const double> params, const PauliSum& hermitian,
                     const std::vector<std::vector<double>>& priors, double penalty, EstimatorContext& ctx) {
  double value = expectation(params, hermitian, ctx).real();
  for (const auto& prior : priors) value += penalty * overlap_lowdepth(params, prior, ctx);
  return value;
}

PseudovarianceOperators PseudovarianceOperators::from(const PauliSum& nonhermitian) {
  PseudovarianceOperators ops;
  ops.nonhermitian = nonhermitian;
  ops.product = multiply(adjoint(nonhermitian), nonhermitian);
  // H^dagger H is Hermitian; drop round-off imaginary parts.
  ops.product = ops.product.real_part();
  return ops;
}

PseudovarianceValue evaluate_pseudovariance(std::span<const double> params, const PseudovarianceOperators& ops,
                                            EstimatorContext& ctx) {
  std::set<PauliWord> words;
  for (const auto& kv : ops.nonhermitian.terms()) words.insert(kv.first);
  for (const auto& kv : ops.product.terms()) words.insert(kv.first);
  const auto values = estimate_words(params, words, ctx);

  double hh = 0.0, vcap = 0.0, prod = 0.0;
  for (const auto& [w, c] : ops.nonhermitian.terms()) {
    hh += c.real() * values.at(w);
    vcap += c.imag() * values.at(w);
  }
  for (const auto& [w, c] : ops.product.terms()) prod += c.real() * values.at(w);

  PseudovarianceValue out;
  out.energy = cplx(hh, vcap);
  out.value = prod - (hh * hh + vcap * vcap);
  return out;
}

double pseudovariance_objective(std::span<const double> params, const PseudovarianceOperators& ops,
                                EstimatorContext& ctx) {
  return evaluate_pseudovariance(params, ops, ctx).value;
}

}  // namespace qdrive
