#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "disnn/errors.hpp"
#include "disnn/mnist.hpp"
#include "disnn/snn.hpp"

using namespace disnn;

namespace {

NeuronModelConfig if_cfg() { return {}; }

NeuronModelConfig lif_cfg(double omega) {
  NeuronModelConfig c;
  c.kind = NeuronKind::kLIF;
  c.omega = omega;
  return c;
}

// Independent straight-line simulator used as an oracle.
std::vector<double> oracle_scores(const SnnModel& m, const SpikeTrain& in) {
  std::vector<double> v1(m.k, 0.0), v2(m.m, 0.0), score(m.m, 0.0);
  const double vt = m.neuron.v_threshold, vr = m.neuron.v_reset;
  const bool lif = m.neuron.kind == NeuronKind::kLIF;
  for (std::size_t t = 0; t < in.T; ++t) {
    std::vector<double> s1(m.k, 0.0);
    for (std::size_t i = 0; i < m.k; ++i) {
      double I = 0.0;
      for (std::size_t j = 0; j < m.n; ++j) I += m.W1[i * m.n + j] * in.at(t, j);
      const double h = lif ? v1[i] + (I - v1[i]) / m.neuron.omega : v1[i] + I;
      s1[i] = h >= vt ? 1.0 : 0.0;
      v1[i] = h >= vt ? vr : (h < vr ? vr : h);
    }
    for (std::size_t i = 0; i < m.m; ++i) {
      double I = 0.0;
      for (std::size_t j = 0; j < m.k; ++j) I += m.W2[i * m.k + j] * s1[j];
      const double h = lif ? v2[i] + (I - v2[i]) / m.neuron.omega : v2[i] + I;
      score[i] += h >= vt ? 1.0 : 0.0;
      v2[i] = h >= vt ? vr : (h < vr ? vr : h);
    }
  }
  return score;
}

SpikeTrain random_train(std::size_t T, std::size_t dim, double rate, Prng& rng) {
  SpikeTrain s{T, dim, std::vector<std::uint8_t>(T * dim)};
  for (auto& b : s.bits) b = rng.uniform01() < rate;
  return s;
}

SnnModel random_model(std::size_t n, std::size_t k, std::size_t m,
                      const NeuronModelConfig& cfg, std::uint64_t seed, double scale = 3.0) {
  Prng rng(seed);
  SnnModel model = SnnModel::initialise(n, k, m, cfg, rng);
  for (auto& w : model.W1) w *= scale;
  for (auto& w : model.W2) w *= scale;
  return model;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("disnn_test_" + name)).string();
}

Dataset load_or_skip(const std::string& split) {
  return load_mnist(std::string(DISNN_MNIST_DIR), split);
}

bool have_mnist() {
  return std::filesystem::exists(std::string(DISNN_MNIST_DIR) + "/train-images-idx3-ubyte");
}

}  // namespace

TEST(Charge, IfIsAdditive) {
  EXPECT_DOUBLE_EQ(charge({0.0}, {0.6}, if_cfg())[0], 0.6);
  EXPECT_DOUBLE_EQ(charge({0.25}, {-0.5}, if_cfg())[0], -0.25);
}

TEST(Charge, LifLeaksTowardZero) {
  EXPECT_DOUBLE_EQ(charge({1.0}, {0.0}, lif_cfg(2.0))[0], 0.5);
  EXPECT_DOUBLE_EQ(charge({0.0}, {1.0}, lif_cfg(4.0))[0], 0.25);
}

TEST(Charge, SizeMismatchThrows) {
  EXPECT_THROW(charge({0.0, 1.0}, {0.0}, if_cfg()), ParameterError);
}

TEST(Fire, StepAtThreshold) {
  const auto cfg = if_cfg();
  const auto s = fire({1.0, 1.0 - 1e-12, 6.0, -3.0}, cfg);
  EXPECT_EQ(s, (std::vector<std::uint8_t>{1, 0, 1, 0}));
}

TEST(Reset, ThreeBranches) {
  NeuronModelConfig cfg;
  cfg.v_reset = -0.5;
  const auto v = reset({1.0, 3.0, 0.2, -0.5, -2.0}, cfg);
  EXPECT_DOUBLE_EQ(v[0], -0.5);
  EXPECT_DOUBLE_EQ(v[1], -0.5);
  EXPECT_DOUBLE_EQ(v[2], 0.2);
  EXPECT_DOUBLE_EQ(v[3], -0.5);
  EXPECT_DOUBLE_EQ(v[4], -0.5);
}

TEST(NeuronConfig, Validation) {
  NeuronModelConfig c;
  c.v_reset = 1.0;
  EXPECT_THROW(c.validate(), ParameterError);
  auto l = lif_cfg(0.0);
  EXPECT_THROW(l.validate(), ParameterError);
}

TEST(Poisson, BlackAndWhitePixels) {
  Prng rng(5);
  const auto s = poisson_encode({0.0, 1.0}, 2000, rng);
  for (std::size_t t = 0; t < s.T; ++t) {
    EXPECT_EQ(s.at(t, 0), 0);
    EXPECT_EQ(s.at(t, 1), 1);
  }
}

TEST(Poisson, RateConverges) {
  Prng rng(6);
  const std::vector<double> px = {0.5, 0.1, 0.9, 0.33};
  const std::size_t T = 10000;
  const auto s = poisson_encode(px, T, rng);
  for (std::size_t i = 0; i < px.size(); ++i) {
    double c = 0;
    for (std::size_t t = 0; t < T; ++t) c += s.at(t, i);
    EXPECT_NEAR(c / T, px[i], 0.02) << "pixel " << i;
  }
}

TEST(Poisson, OutOfRangePixelThrows) {
  Prng rng(1);
  EXPECT_THROW(poisson_encode({1.5}, 3, rng), DomainError);
  EXPECT_THROW(poisson_encode({-0.1}, 3, rng), DomainError);
}

TEST(Poisson, ByteEncoderUsesThresholds) {
  std::vector<std::uint8_t> img(50);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint8_t>(5 * i);
  Prng a(9), b(9);
  const auto s = poisson_encode_bytes(img.data(), img.size(), 20, a);
  const auto th = poisson_thresholds(img.size(), 20, b);
  for (std::size_t i = 0; i < s.bits.size(); ++i) {
    EXPECT_EQ(s.bits[i], img[i % img.size()] > th[i] ? 1 : 0);
  }
}

TEST(Forward, ZeroInputGivesNoSpikes) {
  const SnnModel m = random_model(20, 6, 3, if_cfg(), 1);
  NetworkState st = initial_state(m);
  const std::vector<std::uint8_t> zero(20, 0);
  for (int t = 0; t < 5; ++t) {
    const auto o = forward_timestep(m, zero.data(), st);
    for (auto s : o.hidden_spikes) EXPECT_EQ(s, 0);
    for (auto s : o.out_spikes) EXPECT_EQ(s, 0);
  }
}

TEST(Forward, SingleNeuronFiresImmediately) {
  SnnModel m;
  m.n = 1;
  m.k = 1;
  m.m = 1;
  m.W1 = {2.0};
  m.W2 = {2.0};
  NetworkState st = initial_state(m);
  const std::uint8_t in = 1;
  const auto o = forward_timestep(m, &in, st);
  EXPECT_EQ(o.hidden_spikes[0], 1);
  EXPECT_EQ(o.out_spikes[0], 1);
  EXPECT_DOUBLE_EQ(st.hidden.V[0], 0.0);
}

TEST(Forward, MatchesOracleIf) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SnnModel m = random_model(40, 8, 4, if_cfg(), seed);
    Prng rng(seed + 100);
    const auto in = random_train(15, 40, 0.3, rng);
    EXPECT_EQ(predict(m, in).scores, oracle_scores(m, in)) << "seed " << seed;
  }
}

TEST(Forward, MatchesOracleLif) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SnnModel m = random_model(40, 8, 4, lif_cfg(2.0), seed, 6.0);
    Prng rng(seed + 200);
    const auto in = random_train(15, 40, 0.3, rng);
    EXPECT_EQ(predict(m, in).scores, oracle_scores(m, in)) << "seed " << seed;
  }
}

TEST(Forward, ResetClampAndFireConsistency) {
  const SnnModel m = random_model(40, 10, 5, if_cfg(), 3);
  Prng rng(77);
  const auto in = random_train(50, 40, 0.4, rng);
  NetworkState st = initial_state(m);
  for (std::size_t t = 0; t < in.T; ++t) {
    const auto o = forward_timestep(m, in.step(t), st);
    for (std::size_t i = 0; i < m.k; ++i) {
      EXPECT_GE(st.hidden.V[i], m.neuron.v_reset);
      EXPECT_LT(st.hidden.V[i], m.neuron.v_threshold);
      EXPECT_EQ(o.hidden_spikes[i] == 1, st.hidden.H[i] >= m.neuron.v_threshold);
    }
    for (std::size_t i = 0; i < m.m; ++i) {
      EXPECT_GE(st.out.V[i], m.neuron.v_reset);
      EXPECT_LT(st.out.V[i], m.neuron.v_threshold);
    }
  }
}

TEST(Forward, IfScaleEquivariance) {
  // Weights that are multiples of 1/8 keep every sum exact after scaling.
  SnnModel m = random_model(30, 6, 3, if_cfg(), 11);
  for (auto& w : m.W1) w = std::round(w * 8.0) / 8.0;
  for (auto& w : m.W2) w = std::round(w * 8.0) / 8.0;
  Prng rng(12);
  const auto in = random_train(30, 30, 0.3, rng);
  for (double c : {0.5, 2.0, 7.0}) {
    SnnModel s = m;
    for (auto& w : s.W1) w *= c;
    for (auto& w : s.W2) w *= c;
    s.neuron.v_threshold *= c;
    s.neuron.v_reset *= c;
    EXPECT_EQ(predict(s, in).scores, predict(m, in).scores) << "c = " << c;
  }
}

TEST(Predict, DeterministicUnderSeed) {
  const SnnModel m = random_model(784, 30, 10, if_cfg(), 4);
  std::vector<std::uint8_t> img(784);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<std::uint8_t>(i * 37);
  Prng a = image_stream(3, 9), b = image_stream(3, 9);
  EXPECT_EQ(predict(m, img.data(), 10, a).scores, predict(m, img.data(), 10, b).scores);
}

TEST(Argmax, FirstMaximum) {
  EXPECT_EQ(argmax({1.0, 3.0, 3.0, 0.0}), 1);
  EXPECT_EQ(argmax({0.0, 0.0}), 0);
}

TEST(Surrogate, F4PeakValue) {
  for (double a : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(surrogate_grad(SurrogateKind::kF4, a, 1.0, 1.0),
                1.0 / std::sqrt(2.0 * M_PI * a), 1e-15);
  }
}

TEST(Surrogate, F1Support) {
  const double a = 2.0;
  EXPECT_DOUBLE_EQ(surrogate_grad(SurrogateKind::kF1, a, 1.0 + 0.99, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(surrogate_grad(SurrogateKind::kF1, a, 1.0 + 1.01, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(surrogate_grad(SurrogateKind::kF1, a, 1.0 - 1.01, 1.0), 0.0);
}

TEST(Surrogate, F3MatchesFiniteDifference) {
  const double a = 0.7, vth = 1.0, h = 1e-5;
  auto sig = [&](double v) { return 1.0 / (1.0 + std::exp(-(v - vth) / a)); };
  for (double v = -2.0; v <= 4.0; v += 0.25) {
    const double fd = (sig(v + h) - sig(v - h)) / (2.0 * h);
    EXPECT_NEAR(surrogate_grad(SurrogateKind::kF3, a, v, vth), fd, 1e-5) << "V = " << v;
  }
}

TEST(Surrogate, AtanMatchesFiniteDifference) {
  const double a = 2.0, vth = 1.0, h = 1e-5;
  auto act = [&](double v) { return std::atan(M_PI / 2.0 * a * (v - vth)) / M_PI + 0.5; };
  for (double v = -1.0; v <= 3.0; v += 0.25) {
    const double fd = (act(v + h) - act(v - h)) / (2.0 * h);
    EXPECT_NEAR(surrogate_grad(SurrogateKind::kAtan, a, v, vth), fd, 1e-5) << "V = " << v;
  }
}

TEST(Surrogate, UnknownNameAndBadWidth) {
  EXPECT_THROW(parse_surrogate("relu"), ParameterError);
  EXPECT_THROW(surrogate_grad(SurrogateKind::kF1, 0.0, 0.0, 1.0), ParameterError);
}

TEST(Loss, PerfectPredictionIsZero) {
  std::vector<double> r(10, 0.0);
  r[3] = 1.0;
  EXPECT_DOUBLE_EQ(rate_mse(r, 3), 0.0);
  EXPECT_DOUBLE_EQ(rate_mse(r, 4), 0.2);
}

TEST(Checkpoint, JsonRoundTrip) {
  const SnnModel m = random_model(12, 4, 3, lif_cfg(3.0), 8);
  const SnnModel back = SnnModel::from_json(m.to_json());
  EXPECT_EQ(back.W1, m.W1);
  EXPECT_EQ(back.W2, m.W2);
  EXPECT_EQ(back.neuron.kind, NeuronKind::kLIF);
  EXPECT_DOUBLE_EQ(back.neuron.omega, 3.0);
  const std::string path = tmp_path("ckpt.json");
  m.save(path);
  EXPECT_EQ(SnnModel::load(path).to_json(), m.to_json());
  std::filesystem::remove(path);
}

TEST(Checkpoint, MalformedRejected) {
  EXPECT_THROW(SnnModel::from_json("{}"), DataError);
  EXPECT_THROW(SnnModel::from_json("not json"), DataError);
  SnnModel m = random_model(4, 2, 2, if_cfg(), 1);
  m.W1.pop_back();
  EXPECT_THROW(SnnModel::from_json(m.to_json()), ParameterError);
}

TEST(Mnist, TruncatedFileReportsOffset) {
  const std::string path = tmp_path("trunc-images");
  {
    std::ofstream out(path, std::ios::binary);
    const unsigned char head[] = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 28, 0, 0, 0, 28, 1, 2, 3};
    out.write(reinterpret_cast<const char*>(head), sizeof head);
  }
  std::size_t r = 0, c = 0;
  try {
    read_idx_images(path, r, c);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 19"), std::string::npos) << e.what();
  }
  std::filesystem::remove(path);
}

TEST(Mnist, BadMagicAndLabels) {
  const std::string path = tmp_path("bad-labels");
  {
    std::ofstream out(path, std::ios::binary);
    const unsigned char head[] = {0, 0, 8, 1, 0, 0, 0, 2, 3, 12};
    out.write(reinterpret_cast<const char*>(head), sizeof head);
  }
  EXPECT_THROW(read_idx_labels(path), DataError);
  std::size_t r = 0, c = 0;
  EXPECT_THROW(read_idx_images(path, r, c), DataError);
  EXPECT_THROW(read_idx_labels(tmp_path("missing")), DataError);
  std::filesystem::remove(path);
}

TEST(Training, OverfitsSmallBatch) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found";
  const Dataset small = load_or_skip("train").head(32);
  Prng init(2, 1);
  SnnModel m = SnnModel::initialise(784, 30, 10, {}, init);
  TrainConfig cfg;
  cfg.T = 10;
  cfg.batch = 32;
  cfg.epochs = 200;
  cfg.seed = 2;
  m = train(std::move(m), small, cfg);
  EXPECT_GE(evaluate_accuracy(m, small, 10, 5), 0.95);
}

TEST(Training, SeedDeterminism) {
  if (!have_mnist()) GTEST_SKIP() << "MNIST not found";
  const Dataset small = load_or_skip("train").head(256);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 4;
  Prng i1(4, 1), i2(4, 1);
  const SnnModel a = train(SnnModel::initialise(784, 30, 10, {}, i1), small, cfg);
  const SnnModel b = train(SnnModel::initialise(784, 30, 10, {}, i2), small, cfg);
  EXPECT_EQ(a.to_json(), b.to_json());
}
