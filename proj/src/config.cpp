#include "qdrive/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qdrive {

using nlohmann::json;

namespace {

// Leaf types: "number", "real" (number or +/-inf string), "integer",
// "boolean", "string", "string[]", "number[]", "real[]". Objects nest.
const json& schema() {
  static const json optimizer = {
      {"kind", "string"},          {"max_iterations", "integer"}, {"max_evaluations", "integer"},
      {"reset_interval", "integer"}, {"retries", "integer"},      {"initial_radius", "number"},
      {"initial_step", "number"},  {"final_radius", "number"},    {"target", "real"},
      {"sweep_tolerance", "number"}, {"check_sinusoid", "boolean"}, {"sinusoid_tolerance", "number"},
      {"harmonics", "integer"},    {"wrap_angles", "boolean"}};
  static const json slot = {{"parity", "string"}, {"index", "integer"}};
  static const json s = {
      {"model",
       {{"lambda", "number"}, {"J", "number"}, {"x0", "number"}, {"x_max", "number"}, {"n_points", "integer"},
        {"cap", "boolean"}}},
      {"q", "integer"},
      {"N", "integer"},
      {"B", "integer"},
      {"parities", "string[]"},
      {"tier", "string"},
      {"method", "string"},
      {"noise_profile", "string"},
      {"gate_noise_reduction", "number"},
      {"qubit_longevity_us", "real"},
      {"shots", "integer"},
      {"final_shots", "integer"},
      {"readout_mitigation", "boolean"},
      {"zne", "boolean"},
      {"seed", "integer"},
      {"batch_id", "integer"},
      {"workers", "integer"},
      {"output_dir", "string"},
      {"penalty", "number"},
      {"overlap_tol", "number"},
      {"diagnostics", "boolean"},
      {"optimizer", {{"hermitian", optimizer}, {"nonhermitian", optimizer}}},
      {"classifier",
       {{"cap_weight_max", "number"}, {"im_gain_tol", "number"}, {"sigma_max", "number"}, {"bound_im_tol", "number"}}},
      {"slots", {{"bound", slot}, {"first_resonance", slot}, {"second_resonance", slot}}},
      {"sweep", {{"reductions", "number[]"}, {"longevities_us", "real[]"}, {"repeats", "integer"}}}};
  return s;
}

std::string locate(const std::string& text, const std::string& key) {
  if (text.empty()) return {};
  const std::string needle = "\"" + key + "\"";
  const auto pos = text.find(needle);
  if (pos == std::string::npos) return {};
  const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n');
  return " (line " + std::to_string(line) + ")";
}

bool is_real(const json& v) {
  if (v.is_number()) return true;
  if (!v.is_string()) return false;
  const auto s = v.get<std::string>();
  return s == "inf" || s == "-inf" || s == "infinity" || s == "-infinity";
}

bool leaf_ok(const std::string& type, const json& v) {
  if (type == "number") return v.is_number();
  if (type == "real") return is_real(v);
  if (type == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
  if (type == "boolean") return v.is_boolean();
  if (type == "string") return v.is_string();
  if (type.size() > 2 && type.substr(type.size() - 2) == "[]") {
    if (!v.is_array()) return false;
    const std::string elem = type.substr(0, type.size() - 2);
    return std::all_of(v.begin(), v.end(), [&](const json& e) { return leaf_ok(elem, e); });
  }
  return false;
}

void validate(const json& doc, const json& sch, const std::string& prefix, const std::string& text) {
  if (!doc.is_object()) throw ConfigError("config" + (prefix.empty() ? "" : " key '" + prefix + "'") + ": expected an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!sch.contains(key)) throw ConfigError("unknown config key '" + path + "'" + locate(text, key));
    const json& expected = sch.at(key);
    if (expected.is_object()) {
      validate(value, expected, path, text);
    } else if (!leaf_ok(expected.get<std::string>(), value)) {
      throw ConfigError("config key '" + path + "'" + locate(text, key) + ": expected " + expected.get<std::string>());
    }
  }
}

double real_of(const json& v) {
  if (v.is_number()) return v.get<double>();
  const auto s = v.get<std::string>();
  return s[0] == '-' ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
}

json real_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json optimizer_json(const OptimizerConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"max_iterations", c.max_iterations},
          {"max_evaluations", c.max_evaluations},
          {"reset_interval", c.reset_interval},
          {"retries", c.retries},
          {"initial_radius", c.initial_radius},
          {"initial_step", c.initial_step},
          {"final_radius", c.final_radius},
          {"target", real_json(c.target)},
          {"sweep_tolerance", c.sweep_tolerance},
          {"check_sinusoid", c.check_sinusoid},
          {"sinusoid_tolerance", c.sinusoid_tolerance},
          {"harmonics", c.harmonics},
          {"wrap_angles", c.wrap_angles}};
}

void apply_optimizer(OptimizerConfig& c, const json& j, const std::string& path) {
  try {
    if (j.contains("kind")) c.kind = parse_optimizer(j["kind"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + path + ".kind': " + e.what());
  }
  if (j.contains("max_iterations")) c.max_iterations = j["max_iterations"].get<int>();
  if (j.contains("max_evaluations")) c.max_evaluations = j["max_evaluations"].get<int>();
  if (j.contains("reset_interval")) c.reset_interval = j["reset_interval"].get<int>();
  if (j.contains("retries")) c.retries = j["retries"].get<int>();
  if (j.contains("initial_radius")) c.initial_radius = j["initial_radius"].get<double>();
  if (j.contains("initial_step")) c.initial_step = j["initial_step"].get<double>();
  if (j.contains("final_radius")) c.final_radius = j["final_radius"].get<double>();
  if (j.contains("target")) c.target = real_of(j["target"]);
  if (j.contains("sweep_tolerance")) c.sweep_tolerance = j["sweep_tolerance"].get<double>();
  if (j.contains("check_sinusoid")) c.check_sinusoid = j["check_sinusoid"].get<bool>();
  if (j.contains("sinusoid_tolerance")) c.sinusoid_tolerance = j["sinusoid_tolerance"].get<double>();
  if (j.contains("harmonics")) c.harmonics = j["harmonics"].get<int>();
  if (j.contains("wrap_angles")) c.wrap_angles = j["wrap_angles"].get<bool>();
  if (c.max_iterations < 1 || c.max_evaluations < 1) throw ConfigError("config key '" + path + "': budgets must be positive");
  if (c.reset_interval < 1) throw ConfigError("config key '" + path + ".reset_interval': must be positive");
  if (c.retries < 0) throw ConfigError("config key '" + path + ".retries': must be nonnegative");
  if (c.harmonics != 1 && c.harmonics != 2) throw ConfigError("config key '" + path + ".harmonics': must be 1 or 2");
}

StateSlot slot_of(const json& j, StateSlot s, const std::string& path) {
  try {
    if (j.contains("parity")) s.parity = parse_parity(j["parity"].get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + path + ".parity': " + e.what());
  }
  if (j.contains("index")) s.index = j["index"].get<int>();
  return s;
}

json slot_json(const StateSlot& s) { return {{"parity", to_string(s.parity)}, {"index", s.index}}; }

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc, text);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

RunConfig parse_config(const json& doc, const std::string& text) {
  validate(doc, schema(), "", text);
  RunConfig c;
  RunPlan& p = c.plan;
  auto fail = [&](const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "'" + locate(text, key.substr(key.rfind('.') + 1)) + ": " + what);
  };

  if (doc.contains("model")) {
    const json& m = doc["model"];
    if (m.contains("lambda")) p.potential.lambda = m["lambda"].get<double>();
    if (m.contains("J")) p.potential.J = m["J"].get<double>();
    if (m.contains("x0")) p.potential.x0 = m["x0"].get<double>();
    if (m.contains("x_max")) p.x_max = m["x_max"].get<double>();
    if (m.contains("n_points")) p.n_points = m["n_points"].get<std::size_t>();
    if (m.contains("cap")) p.potential.cap_enabled = m["cap"].get<bool>();
  }
  if (doc.contains("q")) p.qubits = doc["q"].get<int>();
  if (doc.contains("N")) p.states = doc["N"].get<int>();
  if (doc.contains("B")) p.batch = doc["B"].get<int>();
  if (doc.contains("parities")) {
    p.parities.clear();
    for (const auto& v : doc["parities"]) {
      try {
        const Parity par = parse_parity(v.get<std::string>());
        if (std::find(p.parities.begin(), p.parities.end(), par) != p.parities.end()) fail("parities", "duplicate parity");
        p.parities.push_back(par);
      } catch (const ModelError& e) {
        fail("parities", e.what());
      }
    }
  }
  try {
    if (doc.contains("tier")) p.estimator.tier = parse_tier(doc["tier"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("tier", e.what());
  }
  try {
    if (doc.contains("method")) p.estimator.method = parse_method(doc["method"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("method", e.what());
  }
  if (doc.contains("noise_profile")) c.noise_profile = doc["noise_profile"].get<std::string>();
  if (doc.contains("gate_noise_reduction")) c.gate_noise_reduction = doc["gate_noise_reduction"].get<double>();
  if (doc.contains("qubit_longevity_us")) c.qubit_longevity_us = real_of(doc["qubit_longevity_us"]);
  if (doc.contains("shots")) {
    const auto v = doc["shots"].get<long long>();
    if (v < 1) fail("shots", "must be positive");
    p.estimator.shots = static_cast<std::size_t>(v);
  }
  if (doc.contains("final_shots")) {
    const auto v = doc["final_shots"].get<long long>();
    if (v < 1) fail("final_shots", "must be positive");
    p.final_shots = static_cast<std::size_t>(v);
  }
  if (doc.contains("readout_mitigation")) p.estimator.readout_mitigation = doc["readout_mitigation"].get<bool>();
  if (doc.contains("zne")) p.estimator.zne = doc["zne"].get<bool>();
  if (doc.contains("seed")) p.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("batch_id")) p.batch_id = doc["batch_id"].get<std::uint64_t>();
  if (doc.contains("workers")) c.workers = doc["workers"].get<int>();
  if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();
  if (doc.contains("penalty")) p.penalty = doc["penalty"].get<double>();
  if (doc.contains("overlap_tol")) p.overlap_tol = doc["overlap_tol"].get<double>();
  if (doc.contains("diagnostics")) p.diagnostics = doc["diagnostics"].get<bool>();

  p.hermitian_optimizer = default_hermitian_optimizer(p.estimator.tier);
  p.nonhermitian_optimizer = default_nonhermitian_optimizer(p.estimator.tier);
  if (doc.contains("optimizer")) {
    const json& o = doc["optimizer"];
    if (o.contains("hermitian")) apply_optimizer(p.hermitian_optimizer, o["hermitian"], "optimizer.hermitian");
    if (o.contains("nonhermitian"))
      apply_optimizer(p.nonhermitian_optimizer, o["nonhermitian"], "optimizer.nonhermitian");
  }
  if (doc.contains("classifier")) {
    const json& t = doc["classifier"];
    if (t.contains("cap_weight_max")) p.thresholds.cap_weight_max = t["cap_weight_max"].get<double>();
    if (t.contains("im_gain_tol")) p.thresholds.im_gain_tol = t["im_gain_tol"].get<double>();
    if (t.contains("sigma_max")) p.thresholds.sigma_max = t["sigma_max"].get<double>();
    if (t.contains("bound_im_tol")) p.thresholds.bound_im_tol = t["bound_im_tol"].get<double>();
  }
  if (doc.contains("slots")) {
    const json& s = doc["slots"];
    if (s.contains("bound")) p.slots.bound = slot_of(s["bound"], p.slots.bound, "slots.bound");
    if (s.contains("first_resonance"))
      p.slots.first_resonance = slot_of(s["first_resonance"], p.slots.first_resonance, "slots.first_resonance");
    if (s.contains("second_resonance"))
      p.slots.second_resonance = slot_of(s["second_resonance"], p.slots.second_resonance, "slots.second_resonance");
  }
  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    if (s.contains("reductions")) c.sweep.reductions = s["reductions"].get<std::vector<double>>();
    if (s.contains("longevities_us")) {
      c.sweep.longevities_us.clear();
      for (const auto& v : s["longevities_us"]) c.sweep.longevities_us.push_back(real_of(v));
    }
    if (s.contains("repeats")) c.sweep.repeats = s["repeats"].get<int>();
  }

  if (c.workers < 1) fail("workers", "must be >= 1");
  if (!(c.gate_noise_reduction > 0.0)) fail("gate_noise_reduction", "must be positive");
  if (c.sweep.repeats < 1) fail("sweep.repeats", "must be >= 1");
  for (double r : c.sweep.reductions)
    if (!(r > 0.0)) fail("sweep.reductions", "factors must be positive");
  if (c.output_dir.empty()) fail("output_dir", "must not be empty");
  if (!(p.x_max > 0.0)) fail("model.x_max", "must be positive");
  if (p.n_points < 4 || (p.n_points & (p.n_points - 1)) != 0) fail("model.n_points", "must be a power of two >= 4");
  if (p.estimator.tier == Tier::noisy) {
    try {
      p.estimator.noise = resolved_noise(c);
    } catch (const std::exception& e) {
      fail("noise_profile", e.what());
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    fail(msg.substr(0, colon), colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  return c;
}

json config_to_json(const RunConfig& c) {
  const RunPlan& p = c.plan;
  json parities = json::array();
  for (Parity par : p.parities) parities.push_back(to_string(par));
  json longevities = json::array();
  for (double l : c.sweep.longevities_us) longevities.push_back(real_json(l));
  return {{"model",
           {{"lambda", p.potential.lambda},
            {"J", p.potential.J},
            {"x0", p.potential.x0},
            {"x_max", p.x_max},
            {"n_points", p.n_points},
            {"cap", p.potential.cap_enabled}}},
          {"q", p.qubits},
          {"N", p.states},
          {"B", p.batch},
          {"parities", parities},
          {"tier", to_string(p.estimator.tier)},
          {"method", to_string(p.estimator.method)},
          {"noise_profile", c.noise_profile},
          {"gate_noise_reduction", c.gate_noise_reduction},
          {"qubit_longevity_us", real_json(c.qubit_longevity_us)},
          {"shots", p.estimator.shots},
          {"final_shots", p.final_shots},
          {"readout_mitigation", p.estimator.readout_mitigation},
          {"zne", p.estimator.zne},
          {"seed", p.seed},
          {"batch_id", p.batch_id},
          {"workers", c.workers},
          {"output_dir", c.output_dir},
          {"penalty", p.penalty},
          {"overlap_tol", p.overlap_tol},
          {"diagnostics", p.diagnostics},
          {"optimizer",
           {{"hermitian", optimizer_json(p.hermitian_optimizer)},
            {"nonhermitian", optimizer_json(p.nonhermitian_optimizer)}}},
          {"classifier",
           {{"cap_weight_max", p.thresholds.cap_weight_max},
            {"im_gain_tol", p.thresholds.im_gain_tol},
            {"sigma_max", p.thresholds.sigma_max},
            {"bound_im_tol", p.thresholds.bound_im_tol}}},
          {"slots",
           {{"bound", slot_json(p.slots.bound)},
            {"first_resonance", slot_json(p.slots.first_resonance)},
            {"second_resonance", slot_json(p.slots.second_resonance)}}},
          {"sweep", {{"reductions", c.sweep.reductions}, {"longevities_us", longevities}, {"repeats", c.sweep.repeats}}}};
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    start = dot + 1;
  }
}

json noise_to_json(const NoiseModel& m) {
  json qubits = json::array();
  for (const auto& q : m.qubits) {
    qubits.push_back({{"t1_us", real_json(q.t1_us)},
                      {"t2_us", real_json(q.t2_us)},
                      {"excited_population", q.excited_population},
                      {"p1", q.p1},
                      {"p2", q.p2},
                      {"readout", {q.readout.p00, q.readout.p01, q.readout.p10, q.readout.p11}}});
  }
  return {{"name", m.name},
          {"one_qubit_gate_us", m.one_qubit_gate_us},
          {"two_qubit_gate_us", m.two_qubit_gate_us},
          {"qubits", qubits}};
}

NoiseModel noise_from_json(const json& j) {
  NoiseModel m;
  try {
    m.name = j.value("name", std::string("custom"));
    m.one_qubit_gate_us = j.at("one_qubit_gate_us").get<double>();
    m.two_qubit_gate_us = j.at("two_qubit_gate_us").get<double>();
    for (const auto& q : j.at("qubits")) {
      QubitNoise n;
      n.t1_us = real_of(q.at("t1_us"));
      n.t2_us = real_of(q.at("t2_us"));
      n.excited_population = q.value("excited_population", 0.0);
      n.p1 = q.at("p1").get<double>();
      n.p2 = q.at("p2").get<double>();
      const auto r = q.at("readout").get<std::vector<double>>();
      if (r.size() != 4) throw ConfigError("readout needs [p00, p01, p10, p11]");
      n.readout = ConfusionMatrix{r[0], r[1], r[2], r[3]};
      m.qubits.push_back(n);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("noise profile: ") + e.what());
  }
  m.validate();
  return m;
}

NoiseModel load_noise_profile(const std::string& name_or_path) {
  if (name_or_path == "torino") return torino_profile();
  if (name_or_path == "ideal") return ideal_noise(kTorinoQubits);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("noise profile '" + name_or_path + "' is neither builtin nor a readable file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("noise profile '" + name_or_path + "': " + e.what());
  }
  return noise_from_json(j);
}

NoiseModel resolved_noise(const RunConfig& c) {
  return scale_noise(load_noise_profile(c.noise_profile), c.gate_noise_reduction, c.qubit_longevity_us);
}

std::filesystem::path output_root() {
  if (const char* env = std::getenv("QDRIVE_OUTPUT_ROOT"); env && *env) return env;
  return std::filesystem::current_path();
}

}  // namespace qdrive
