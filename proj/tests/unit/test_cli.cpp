#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kCli = DISNN_CLI_PATH;
const std::string kData = DISNN_MNIST_DIR;

bool have_mnist() { return fs::exists(kData + "/train-images-idx3-ubyte"); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Runs the CLI from `cwd`, returns its exit status; output goes to log.txt.
int run(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + kCli + "' " + args +
                          " >> log.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("disnn_cli_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!HasFailure()) fs::remove_all(dir_);
  }
  int cli(const std::string& args) { return run(dir_, args); }
  std::string log() const { return slurp(dir_ / "log.txt"); }

  // Small parameters with near-exact bootstraps.
  void write_params() {
    std::ofstream(dir_ / "oracle.json")
        << R"({"name":"oracle","n":16,"N":4096,"log_q":42,"bg_bits":7,"ks_bits":14,)"
           R"("sigma_lwe":3.19,"sigma_ring":3.19,"secret":"binary"})";
  }
  void trained_model() {
    ASSERT_EQ(cli("train --data " + kData +
                  " --limit 300 --epochs 1 --seed 3 --out snn.json"),
              0)
        << log();
    ASSERT_EQ(cli("convert --model snn.json --data " + kData +
                  " --calib 300 --tau 10 --T 3 --out di.json"),
              0)
        << log();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(cli("--no-such-flag"), 2);
  EXPECT_EQ(cli("convert"), 2);  // --model is required
  EXPECT_EQ(cli("encrypt --mode A"), 2);
}

TEST_F(Cli, MissingDataExitsThree) {
  EXPECT_EQ(cli("train --data /nonexistent/mnist --out snn.json"), 3);
  EXPECT_FALSE(fs::exists(dir_ / "snn.json"));
}

TEST_F(Cli, TruncatedIdxLeavesNoCheckpoint) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found";
  const fs::path bad = dir_ / "mnist";
  fs::create_directories(bad);
  for (const char* f : {"train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                        "t10k-labels-idx1-ubyte"}) {
    fs::copy_file(kData + "/" + f, bad / f);
  }
  const std::string img = slurp(kData + "/train-images-idx3-ubyte");
  std::ofstream(bad / "train-images-idx3-ubyte", std::ios::binary)
      .write(img.data(), static_cast<std::streamsize>(img.size() / 2));
  EXPECT_EQ(cli("train --data mnist --limit 10 --epochs 1 --out snn.json"), 3);
  EXPECT_FALSE(fs::exists(dir_ / "snn.json"));
  EXPECT_NE(log().find("offset"), std::string::npos) << log();
}

TEST_F(Cli, TrainingIsDeterministic) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found";
  const std::string args = "train --data " + kData + " --limit 200 --epochs 1 --seed 11";
  ASSERT_EQ(cli(args + " --out a.json"), 0) << log();
  ASSERT_EQ(cli(args + " --out b.json"), 0) << log();
  EXPECT_EQ(slurp(dir_ / "a.json"), slurp(dir_ / "b.json"));
  ASSERT_EQ(cli("train --data " + kData + " --limit 200 --epochs 1 --seed 12 --out c.json"),
            0);
  EXPECT_NE(slurp(dir_ / "a.json"), slurp(dir_ / "c.json"));
}

TEST_F(Cli, ConvertErrors) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found";
  trained_model();
  EXPECT_EQ(cli("convert --model snn.json --data " + kData + " --calib 50 --tau 0"), 2);
  EXPECT_EQ(cli("convert --model snn.json --data " + kData + " --calib 50 --p 16"), 4);
  EXPECT_NE(log().find("smallest admissible p"), std::string::npos);
  EXPECT_EQ(cli("convert --model missing.json"), 3);
}

TEST_F(Cli, EmptySweepWarns) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found";
  trained_model();
  EXPECT_EQ(cli("sweep --kind T --grid '' --model snn.json --data " + kData +
                " --out sweep.csv"),
            0);
  EXPECT_NE(log().find("warning"), std::string::npos) << log();
}

TEST_F(Cli, EncryptedPipelineWithRoleSeparation) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found";
  write_params();
  trained_model();
  ASSERT_EQ(cli("keygen --params oracle.json --seed 5 --out keys"), 0) << log();
  ASSERT_EQ(cli("encrypt --secret keys/secret.key --model di.json --mode A --T 3"
                " --count 2 --seed 1 --data " + kData + " --out bundle.bin"),
            0)
      << log();

  // The server works in a directory that holds no secret key.
  const fs::path server = dir_ / "server";
  fs::create_directories(server);
  fs::copy_file(dir_ / "keys/eval.key", server / "eval.key");
  fs::copy_file(dir_ / "di.json", server / "di.json");
  fs::copy_file(dir_ / "bundle.bin", server / "bundle.bin");
  ASSERT_EQ(run(server, "infer --eval eval.key --model di.json --bundle bundle.bin"
                        " --workers 2 --out scores.bin"),
            0)
      << slurp(server / "log.txt");
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(server)) names.insert(e.path().filename());
  EXPECT_EQ(names, (std::set<std::string>{"bundle.bin", "di.json", "eval.key", "log.txt",
                                          "scores.bin"}));
  fs::copy_file(server / "scores.bin", dir_ / "scores.bin");
  ASSERT_EQ(cli("evaluate --secret keys/secret.key --scores scores.bin --model di.json"
                " --data " + kData + " --out report.json"),
            0)
      << log();
  const json r = json::parse(slurp(dir_ / "report.json"));
  EXPECT_EQ(r.at("count").get<int>(), 2);
  EXPECT_DOUBLE_EQ(r.at("agreement_halved").get<double>(), 1.0);
  EXPECT_EQ(r.at("bootstraps").at("total").get<int>(), 2 * 2 * 40 * 3);
}

TEST_F(Cli, LineageRefusals) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found";
  write_params();
  trained_model();
  ASSERT_EQ(cli("keygen --params oracle.json --seed 5 --out keys"), 0) << log();
  ASSERT_EQ(cli("keygen --params oracle.json --seed 6 --out other"), 0) << log();
  ASSERT_EQ(cli("encrypt --secret keys/secret.key --model di.json --T 2 --count 1"
                " --data " + kData + " --out bundle.bin"),
            0)
      << log();

  // Evaluation key from another keygen run.
  EXPECT_EQ(cli("infer --eval other/eval.key --model di.json --bundle bundle.bin"
                " --out s.bin"),
            2);
  EXPECT_FALSE(fs::exists(dir_ / "s.bin"));

  // Secret key passed where the evaluation key belongs.
  EXPECT_EQ(cli("infer --eval keys/secret.key --model di.json --bundle bundle.bin"
                " --out s.bin"),
            2);

  // Tampered bundle header.
  std::string b = slurp(dir_ / "bundle.bin");
  b[40] = static_cast<char>(b[40] ^ 0x20);
  std::ofstream(dir_ / "tampered.bin", std::ios::binary)
      .write(b.data(), static_cast<std::streamsize>(b.size()));
  EXPECT_EQ(cli("infer --eval keys/eval.key --model di.json --bundle tampered.bin"
                " --out s.bin"),
            2);
  EXPECT_NE(log().find("lineage error"), std::string::npos) << log();

  // A different discretised model than the one the bundle was made for.
  ASSERT_EQ(cli("convert --model snn.json --data " + kData +
                " --calib 300 --tau 12 --T 3 --out di12.json"),
            0);
  EXPECT_EQ(cli("infer --eval keys/eval.key --model di12.json --bundle bundle.bin"
                " --out s.bin"),
            2);
  EXPECT_FALSE(fs::exists(dir_ / "s.bin"));
}
