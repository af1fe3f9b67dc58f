#include "mfg/commands.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "mfg/io.hpp"
#include "mfg/rnn_policy.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mfg;

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    root = fs::temp_directory_path() /
           ("mfg_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  void TearDown() override { fs::remove_all(root); }

  std::string write_config(const std::string& text) {
    const fs::path p = root / "run.ini";
    io::write_atomic(p, text);
    return p.string();
  }

  CommandOptions options(const std::string& config_text, const std::string& out = "out") {
    CommandOptions o;
    o.config_path = write_config(config_text);
    o.out_dir = (root / out).string();
    return o;
  }

  static std::size_t lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
  }

  fs::path root;
  std::ostringstream out, err;
};

const char* kSmall =
    "[discretization]\nsteps = 6\n"
    "[training]\niterations = 4\nepoch_size = 2\ntrain_agents = 3\ntest_agents = 3\nmc_samples = 2\n";

TEST_F(Commands, CorruptConfigWritesNothing) {
  CommandOptions o = options("[training]\nmc_samples = lots\n");
  EXPECT_EQ(cmd_train(o, out, err), exit_code::kInvalidConfig);
  EXPECT_NE(err.str().find("training.mc_samples"), std::string::npos);
  EXPECT_FALSE(fs::exists(root / "out"));
}

TEST_F(Commands, MissingConfigFileIsInvalid) {
  CommandOptions o;
  o.config_path = (root / "nope.ini").string();
  EXPECT_EQ(cmd_train(o, out, err), exit_code::kInvalidConfig);
}

TEST_F(Commands, ZeroIterationsWritesInitialCheckpointOnly) {
  CommandOptions o = options("[training]\niterations = 0\n");
  ASSERT_EQ(cmd_train(o, out, err), exit_code::kOk) << err.str();
  const fs::path dir = root / "out";
  EXPECT_TRUE(fs::exists(dir / "final_v.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "final_pi.ckpt"));
  EXPECT_FALSE(fs::exists(dir / "epoch_1_v.ckpt"));
  EXPECT_EQ(lines(dir / "metrics.jsonl"), 0u);
  EXPECT_EQ(lines(dir / "posterior.csv"), 1u);
}

TEST_F(Commands, TrainWritesArtifacts) {
  CommandOptions o = options(kSmall);
  o.seed = 5;
  ASSERT_EQ(cmd_train(o, out, err), exit_code::kOk) << err.str();
  const fs::path dir = root / "out";
  for (const char* f : {"epoch_1_v.ckpt", "epoch_1_pi.ckpt", "epoch_2_v.ckpt", "epoch_2_pi.ckpt",
                        "final_v.ckpt", "final_pi.ckpt", "config.ini", "timing.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(io::read_bytes(dir / "epoch_2_v.ckpt"), io::read_bytes(dir / "final_v.ckpt"));
  EXPECT_EQ(lines(dir / "metrics.jsonl"), 6u);
  EXPECT_EQ(lines(dir / "posterior.csv"), 3u);

  std::ifstream in(dir / "metrics.jsonl");
  std::string first;
  std::getline(in, first);
  const auto j = nlohmann::json::parse(first);
  EXPECT_EQ(j["step"], 1);
  EXPECT_TRUE(j.contains("loss"));
  EXPECT_TRUE(j.contains("grad_norm_v"));
  EXPECT_TRUE(j.contains("grad_norm_pi"));

  // The echoed config records the override and reproduces the run.
  const std::string echoed = io::read_text(dir / "config.ini");
  EXPECT_NE(echoed.find("seed = 5"), std::string::npos);
  CommandOptions again;
  again.config_path = (dir / "config.ini").string();
  again.out_dir = (root / "again").string();
  ASSERT_EQ(cmd_train(again, out, err), exit_code::kOk);
  EXPECT_EQ(io::read_text(dir / "metrics.jsonl"), io::read_text(root / "again" / "metrics.jsonl"));
  EXPECT_EQ(io::read_bytes(dir / "final_pi.ckpt"), io::read_bytes(root / "again" / "final_pi.ckpt"));
}

TEST_F(Commands, NonFiniteTrainingStateExitsWithThree) {
  // An initial mean this large overflows the running cost.
  CommandOptions o = options(std::string(kSmall) + "[model]\ninit_mean = 1e300\n");
  EXPECT_EQ(cmd_train(o, out, err), exit_code::kNonFinite) << err.str();
  EXPECT_NE(err.str().find("aborted"), std::string::npos);
}

TEST_F(Commands, EvaluateWritesReportAndIsDeterministic) {
  CommandOptions o = options(kSmall);
  ASSERT_EQ(cmd_train(o, out, err), exit_code::kOk);
  o.j_eval = 3;
  ASSERT_EQ(cmd_evaluate(o, out, err), exit_code::kOk) << err.str();
  const fs::path dir = root / "out";
  const std::string summary = io::read_text(dir / "summary.json");
  const auto j = nlohmann::json::parse(summary);
  EXPECT_EQ(j["samples"], 3);
  EXPECT_TRUE(j.contains("price_rel_l2"));
  EXPECT_TRUE(j.contains("price_rel_l2_noise_free"));
  EXPECT_EQ(lines(dir / "prices_sample_2.csv"), 8u);
  EXPECT_FALSE(fs::exists(dir / "prices_sample_3.csv"));
  EXPECT_EQ(lines(dir / "trajectories.csv"), 1u + 3 * 3 * 7);
  const std::string traj = io::read_text(dir / "trajectories.csv");
  EXPECT_EQ(traj.substr(0, traj.find('\n')), "run_id,sample_j,agent_n,k,t,X,v,P,price,Q");

  ASSERT_EQ(cmd_evaluate(o, out, err), exit_code::kOk);
  EXPECT_EQ(io::read_text(dir / "summary.json"), summary);
}

TEST_F(Commands, EvaluateExplicitCheckpoints) {
  CommandOptions o = options(kSmall);
  ASSERT_EQ(cmd_train(o, out, err), exit_code::kOk);
  const fs::path dir = root / "out";
  o.checkpoints = {(dir / "epoch_1_pi.ckpt").string(), (dir / "epoch_1_v.ckpt").string()};
  EXPECT_EQ(cmd_evaluate(o, out, err), exit_code::kOk) << err.str();

  o.checkpoints = {(dir / "epoch_1_v.ckpt").string(), (dir / "epoch_2_v.ckpt").string()};
  EXPECT_EQ(cmd_evaluate(o, out, err), exit_code::kCheckpointMismatch);
}

TEST_F(Commands, EvaluateRejectsMismatchedDimensions) {
  const fs::path dir = root / "out";
  fs::create_directories(dir);
  Rng rng(1);
  const std::vector<std::size_t> dims = {8, 8, 1};
  io::write_atomic(dir / "final_v.ckpt", save_params(init_params(NetworkKind::kControl, dims, kControlInputs, rng)));
  io::write_atomic(dir / "final_pi.ckpt", save_params(init_price_params(rng)));
  CommandOptions o = options(kSmall);
  EXPECT_EQ(cmd_evaluate(o, out, err), exit_code::kCheckpointMismatch);

  io::write_atomic(dir / "final_v.ckpt", std::string_view("MFGP garbage"));
  EXPECT_EQ(cmd_evaluate(o, out, err), exit_code::kCheckpointMismatch);
}

TEST_F(Commands, ZeroNetworksGiveLargeBalanceResidual) {
  const fs::path dir = root / "out";
  fs::create_directories(dir);
  io::write_atomic(dir / "final_v.ckpt",
                   save_params(zero_params(NetworkKind::kControl, control_layer_dims(), kControlInputs)));
  io::write_atomic(dir / "final_pi.ckpt",
                   save_params(zero_params(NetworkKind::kPrice, price_layer_dims(), kPriceInputs)));
  CommandOptions o = options("");
  o.j_eval = 4;
  ASSERT_EQ(cmd_evaluate(o, out, err), exit_code::kOk) << err.str();
  const auto j = nlohmann::json::parse(io::read_text(dir / "summary.json"));
  // v = 0 leaves the whole supply uncleared: mse_eb is the mean of Q^2.
  std::ifstream in(dir / "trajectories.csv");
  std::string line;
  std::getline(in, line);
  double q2 = 0.0;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells[2] != "0") continue;
    const double q = std::stod(cells[9]);
    q2 += q * q;
    ++count;
  }
  EXPECT_EQ(count, 4u * 41u);
  EXPECT_NEAR(j["mse_eb"].get<double>(), q2 / static_cast<double>(count), 1e-12);
  EXPECT_GT(j["mse_eb"].get<double>(), 0.05);
}

TEST_F(Commands, OracleDefaultShape) {
  CommandOptions o = options("");
  ASSERT_EQ(cmd_oracle(o, out, err), exit_code::kOk) << err.str();
  const fs::path dir = root / "out";
  EXPECT_TRUE(fs::exists(dir / "oracle_sample_59.csv"));
  EXPECT_FALSE(fs::exists(dir / "oracle_sample_60.csv"));
  EXPECT_EQ(lines(dir / "oracle_sample_0.csv"), 42u);  // header + 41 rows

  std::ifstream in(dir / "oracle_coeffs.csv");
  std::string line, last;
  while (std::getline(in, line)) last = line;
  std::vector<double> cells;
  std::stringstream ss(last);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(std::stod(cell));
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[1], 1.0);
  EXPECT_NEAR(cells[2], std::exp(-1.0), 1e-15);
  EXPECT_NEAR(cells[3], -std::exp(-1.0), 1e-15);
  EXPECT_EQ(cells[4], -1.0);
}

TEST_F(Commands, OracleWithoutNoiseGivesIdenticalPaths) {
  CommandOptions o = options("[model]\nsupply_noise = 0\n");
  o.j_eval = 3;
  ASSERT_EQ(cmd_oracle(o, out, err), exit_code::kOk);
  const fs::path dir = root / "out";
  EXPECT_EQ(io::read_text(dir / "oracle_sample_0.csv"), io::read_text(dir / "oracle_sample_2.csv"));
}

TEST_F(Commands, OracleRejectsNonQuadraticModel) {
  CommandOptions o = options("[model]\nkind = cosh\n");
  EXPECT_EQ(cmd_oracle(o, out, err), exit_code::kUnsupportedModel);
  EXPECT_FALSE(fs::exists(root / "out"));
}

TEST_F(Commands, GradCheckReportsBothNetworks) {
  CommandOptions o = options("");
  const int code = cmd_grad_check(o, out, err);
  EXPECT_TRUE(code == exit_code::kOk || code == exit_code::kFailure);
  EXPECT_NE(out.str().find("control"), std::string::npos);
  EXPECT_NE(out.str().find("price"), std::string::npos);
}

}  // namespace
