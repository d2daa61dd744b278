#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "qdrive/commands.hpp"
#include "qdrive/config.hpp"

using namespace qdrive;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qdrive-config-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(QDRIVE_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, Defaults) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c.plan.potential.lambda, 0.1);
  EXPECT_EQ(c.plan.potential.J, 0.8);
  EXPECT_EQ(c.plan.potential.x0, 8.0);
  EXPECT_TRUE(c.plan.potential.cap_enabled);
  EXPECT_EQ(c.plan.x_max, 10.0);
  EXPECT_EQ(c.plan.n_points, 4096u);
  EXPECT_EQ(c.plan.batch, 8);
  EXPECT_EQ(c.plan.estimator.shots, 100000u);
  EXPECT_EQ(c.plan.penalty, 100.0);
  EXPECT_EQ(c.plan.estimator.tier, Tier::statevector);
  EXPECT_EQ(c.plan.estimator.method, EstimatorMethod::direct);
  EXPECT_EQ(c.plan.parities.size(), 2u);
  EXPECT_EQ(c.noise_profile, "torino");
}

TEST(Config, UnknownKeyNamesKeyAndLine) {
  const std::string msg = config_error("{\n  \"q\": 3,\n  \"modle\": {}\n}");
  EXPECT_NE(msg.find("modle"), std::string::npos);
  EXPECT_NE(msg.find("line 3"), std::string::npos);
  const std::string nested = config_error("{\"model\": {\"lamda\": 0.2}}");
  EXPECT_NE(nested.find("model.lamda"), std::string::npos);
}

TEST(Config, WrongTypesRejected) {
  EXPECT_NE(config_error("{\"q\": \"three\"}").find("'q'"), std::string::npos);
  EXPECT_FALSE(config_error("{\"q\": 2.5}").empty());
  EXPECT_FALSE(config_error("{\"zne\": 1}").empty());
  EXPECT_FALSE(config_error("{\"parities\": \"even\"}").empty());
  EXPECT_FALSE(config_error("{\"tier\": \"quantum\"}").empty());
  EXPECT_FALSE(config_error("{\"method\": \"magic\"}").empty());
  EXPECT_FALSE(config_error("{\"optimizer\": {\"nonhermitian\": {\"kind\": \"adam\"}}}").empty());
  EXPECT_FALSE(config_error("{\"optimizer\": {\"hermitian\": {\"harmonics\": 3}}}").empty());
  EXPECT_FALSE(config_error("{\"N\": 0}").empty());
  EXPECT_FALSE(config_error("[1, 2]").empty());
  EXPECT_FALSE(config_error("{\"q\": 3").empty());
}

TEST(Config, Overrides) {
  json doc = json::object();
  apply_override(doc, "model.x0=7.5");
  apply_override(doc, "tier=shots");
  apply_override(doc, "parities=[\"odd\"]");
  apply_override(doc, "optimizer.nonhermitian.kind=trust_region");
  const RunConfig c = parse_config(doc);
  EXPECT_EQ(c.plan.potential.x0, 7.5);
  EXPECT_EQ(c.plan.estimator.tier, Tier::shots);
  ASSERT_EQ(c.plan.parities.size(), 1u);
  EXPECT_EQ(c.plan.parities[0], Parity::odd);
  EXPECT_EQ(c.plan.nonhermitian_optimizer.kind, OptimizerKind::trust_region);
  EXPECT_THROW(apply_override(doc, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(doc, "model..x0=1"), ConfigError);
  apply_override(doc, "q=2");
  EXPECT_THROW(apply_override(doc, "q.sub=1"), ConfigError);
}

TEST(Config, ResolvedDocumentRoundTrips) {
  RunConfig c = parse_config("{\"q\": 2, \"tier\": \"noisy\", \"qubit_longevity_us\": \"inf\", \"seed\": 11}");
  EXPECT_TRUE(std::isinf(c.qubit_longevity_us));
  const json j = config_to_json(c);
  EXPECT_EQ(j.at("qubit_longevity_us"), "inf");
  EXPECT_EQ(j.at("sweep").at("longevities_us")[1], "inf");
  const RunConfig back = parse_config(j.dump());
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_EQ(back.plan.seed, 11u);
  EXPECT_EQ(back.plan.hermitian_optimizer.max_iterations, c.plan.hermitian_optimizer.max_iterations);
}

TEST(Config, TierDependentOptimizerDefaults) {
  const json sv = config_to_json(parse_config("{\"tier\": \"statevector\"}"));
  const json noisy = config_to_json(parse_config("{\"tier\": \"noisy\"}"));
  EXPECT_NE(sv.at("optimizer").at("hermitian"), noisy.at("optimizer").at("hermitian"));
  EXPECT_FALSE(noisy.at("optimizer").at("hermitian").at("check_sinusoid").get<bool>());
}

TEST(NoiseProfile, BuiltinsAndJsonRoundTrip) {
  const NoiseModel torino = load_noise_profile("torino");
  EXPECT_EQ(torino.size(), 5);
  EXPECT_NO_THROW(torino.validate());
  EXPECT_EQ(load_noise_profile("ideal").name, "ideal");
  const json j = noise_to_json(torino);
  EXPECT_EQ(noise_to_json(noise_from_json(j)), j);

  const fs::path dir = temp_dir("profile");
  std::ofstream(dir / "p.json") << j.dump(2);
  EXPECT_EQ(noise_to_json(load_noise_profile((dir / "p.json").string())), j);
  EXPECT_THROW(load_noise_profile((dir / "missing.json").string()), ConfigError);
  json bad = j;
  bad["qubits"][0]["readout"] = json::array({1.0, 0.0});
  EXPECT_THROW(noise_from_json(bad), ConfigError);
  fs::remove_all(dir);
}

TEST(NoiseProfile, ResolvedFactors) {
  RunConfig c = parse_config("{\"tier\": \"noisy\", \"gate_noise_reduction\": 10, \"qubit_longevity_us\": 100}");
  const NoiseModel base = load_noise_profile("torino");
  const NoiseModel n = resolved_noise(c);
  EXPECT_NEAR(n.qubits[0].p1, base.qubits[0].p1 / 10.0, 1e-15);
  EXPECT_NEAR(n.qubits[0].t1_us, 700.0, 1e-9);
  EXPECT_NEAR(n.qubits[0].t2_us, 500.0, 1e-9);
}

TEST(Commands, DiagSpectrum) {
  const fs::path dir = temp_dir("diag");
  RunConfig c = parse_config("{\"q\": 3, \"parities\": [\"even\"]}");
  std::ostringstream out;
  EXPECT_EQ(cmd_diag(c, {dir, false}, out), kExitOk);
  const std::string csv = slurp(dir / "spectrum.csv");
  EXPECT_EQ(csv, out.str());
  EXPECT_NE(csv.find("3,even,1,0.504"), std::string::npos);
  EXPECT_NE(csv.find(",-2.0"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "spectrum.json"));

  c = parse_config("{\"q\": 2, \"model\": {\"cap\": false}}");
  const fs::path off = temp_dir("diag-off");
  std::ostringstream out2;
  cmd_diag(c, {off, false}, out2);
  const json doc = json::parse(slurp(off / "spectrum.json"));
  for (const auto& parity : {"even", "odd"})
    for (const auto& e : doc.at(parity)) EXPECT_EQ(e.at("im").get<double>(), 0.0);
  fs::remove_all(dir);
  fs::remove_all(off);
}

TEST(Commands, RunRefusesOverwrite) {
  const fs::path dir = temp_dir("run");
  const RunConfig c = parse_config("{\"q\": 2, \"N\": 1, \"B\": 1, \"parities\": [\"even\"]}");
  std::ostringstream out;
  const int first = cmd_run(c, {dir, false}, out);
  EXPECT_EQ(first, kExitPartial);
  EXPECT_TRUE(fs::exists(dir / "table.csv"));
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_EQ(cmd_run(c, {dir, false}, out), kExitConfig);
  EXPECT_EQ(cmd_run(c, {dir, true}, out), first);
  fs::remove_all(dir);
}

TEST(Commands, ZneDemo) {
  std::ostringstream out;
  EXPECT_EQ(cmd_zne_demo({}, out), kExitOk);
  for (const char* branch : {"constant", "exponential", "linear", "outlier-x5", "undefined-averaged"})
    EXPECT_NE(out.str().find(branch), std::string::npos) << branch;
  std::ostringstream one;
  cmd_zne_demo({{0.9, 0.7, 0.5, 100000, ZneMode::expectation}}, one);
  EXPECT_NE(one.str().find("exponential"), std::string::npos);
}

TEST(Commands, SweepSinglePoint) {
  const fs::path dir = temp_dir("sweep");
  const RunConfig c = parse_config(R"({
    "q": 2, "N": 1, "B": 1, "tier": "noisy", "shots": 2000, "final_shots": 2000,
    "optimizer": {"hermitian": {"max_iterations": 4, "max_evaluations": 64},
                  "nonhermitian": {"max_iterations": 2, "max_evaluations": 64, "retries": 0}},
    "sweep": {"reductions": [10000], "longevities_us": ["inf"], "repeats": 1}
  })");
  std::ostringstream out;
  EXPECT_EQ(cmd_sweep(c, {dir, false}, out), kExitOk);
  const std::string csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find(",even,1,"), std::string::npos);
  EXPECT_NE(csv.find(",odd,1,"), std::string::npos);
  EXPECT_NE(csv.find("10000,inf,0,"), std::string::npos);

  std::ostringstream err;
  EXPECT_EQ(cmd_sweep(parse_config("{}"), {dir, true}, err), kExitConfig);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = temp_dir("cli");
  std::ofstream(dir / "bad.json") << "{\"bogus\": 1}";
  EXPECT_EQ(cli("diag -c " + (dir / "bad.json").string() + " -o " + (dir / "a").string()), kExitConfig);
  EXPECT_EQ(cli("diag --q 2 --set nope=1 -o " + (dir / "b").string()), kExitConfig);
  EXPECT_EQ(cli("frobnicate"), kExitConfig);
  EXPECT_EQ(cli("diag --q 2 -o " + (dir / "c").string()), kExitOk);
  EXPECT_EQ(cli("zne-demo --x1 0.9 --x3 0.7 --x5 0.5"), kExitOk);
  EXPECT_EQ(cli("zne-demo --x1 0.9"), kExitConfig);
  EXPECT_EQ(cli("run --q 2 --N 1 --B 1 --set 'parities=[\"even\"]' -o " + (dir / "d").string()), kExitPartial);
  EXPECT_EQ(cli("task --task nonsense -c " + (dir / "d" / "config.json").string()), kExitConfig);
  fs::remove_all(dir);
}
