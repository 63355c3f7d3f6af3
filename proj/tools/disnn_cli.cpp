// Command-line front end: train, convert, keygen, encrypt, infer, evaluate,
// sweep.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "disnn/discretize.hpp"
#include "disnn/errors.hpp"
#include "disnn/fhe.hpp"
#include "disnn/mnist.hpp"
#include "disnn/serialize.hpp"
#include "disnn/snn.hpp"
#include "json.hpp"

#ifndef DISNN_DEFAULT_DATA
#define DISNN_DEFAULT_DATA "data/mnist"
#endif

using namespace disnn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string data_dir(const std::string& flag) {
  return flag.empty() ? data_root(DISNN_DEFAULT_DATA) : flag;
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (std::uint64_t{rd()} << 32) | rd();
}

std::string short_hex(const Digest& d) { return hex(d).substr(0, 16); }

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << text;
  }
  std::rename(tmp.c_str(), path.c_str());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_bounds(const char* name, const LayerBounds& b) {
  std::printf("  %s: empirical alpha %lld (observed H in [%lld, %lld]), analytic alpha %lld, "
              "beta %lld, worst case %lld, max spikes/step %lld\n",
              name, static_cast<long long>(b.alpha_empirical),
              static_cast<long long>(b.observed_min), static_cast<long long>(b.observed_max),
              static_cast<long long>(b.alpha), static_cast<long long>(b.beta),
              static_cast<long long>(b.alpha_worst), static_cast<long long>(b.max_spike_count));
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string data, out = "model.json", neuron = "IF", surrogate = "atan";
  std::size_t T = 10, epochs = 10, batch = 64, limit = 0, hidden = 30;
  double lr = 0.2, momentum = 0.9, width = 2.0, omega = 2.0;
  std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& a) {
  const std::string dir = data_dir(a.data);
  const Dataset train_set = load_mnist(dir, "train");
  const Dataset test = load_mnist(dir, "t10k");
  NeuronModelConfig cfg;
  if (a.neuron == "IF") {
    cfg.kind = NeuronKind::kIF;
  } else if (a.neuron == "LIF") {
    cfg.kind = NeuronKind::kLIF;
  } else {
    throw ConfigError("neuron must be IF or LIF");
  }
  cfg.omega = a.omega;
  cfg.validate();
  if (a.T == 0) throw ConfigError("T must be positive");
  Prng init(a.seed, 1);
  SnnModel model = SnnModel::initialise(train_set.dim(), a.hidden, 10, cfg, init);
  TrainConfig tc;
  tc.T = a.T;
  tc.epochs = a.epochs;
  tc.batch = a.batch;
  tc.lr = a.lr;
  tc.momentum = a.momentum;
  tc.surrogate = parse_surrogate(a.surrogate);
  tc.width = a.width;
  tc.seed = a.seed;
  tc.limit = a.limit;
  const auto t0 = std::chrono::steady_clock::now();
  tc.on_epoch = [&](std::size_t e, double loss) {
    std::printf("epoch %zu loss %.5f (%.1fs)\n", e, loss, seconds_since(t0));
    std::fflush(stdout);
  };
  model = train(std::move(model), train_set, tc);
  model.save(a.out);
  const double acc = evaluate_accuracy(model, test, a.T, a.seed + 1);
  std::printf("wrote %s\ntest accuracy T=%zu: %.4f\ntraining time %.1fs\n", a.out.c_str(),
              a.T, acc, seconds_since(t0));
  return 0;
}

// ---- convert -------------------------------------------------------------

struct ConvertArgs {
  std::string model, data, out = "disnn.json", bounds = "empirical";
  double tau = 10.0;
  std::uint64_t p = 0, seed = 0;
  std::size_t T = 10, calib = 10000;
};

int cmd_convert(const ConvertArgs& a) {
  if (!(a.tau > 0.0)) throw ConfigError("tau must be positive");
  if (a.bounds != "empirical" && a.bounds != "analytic") {
    throw ConfigError("--bounds must be empirical or analytic");
  }
  const SnnModel model = SnnModel::load(a.model);
  const Dataset train = load_mnist(data_dir(a.data), "train").head(a.calib);
  ConvertOptions opt;
  opt.tau = a.tau;
  opt.p = a.p;
  opt.T = a.T;
  opt.seed = a.seed;
  opt.bound_source = a.bounds == "analytic" ? BoundSource::kAnalytic : BoundSource::kEmpirical;
  const DiSnnModel di = convert(model, train, opt);
  di.save(a.out);
  std::printf("tau %g, V_threshold %lld, calibration %zu images at T=%zu\n", di.tau,
              static_cast<long long>(di.v_threshold), train.size(), a.T);
  print_bounds("layer 1", di.bounds1);
  print_bounds("layer 2", di.bounds2);
  print_bounds("layer 1 (halved weights)", di.half_bounds1);
  print_bounds("layer 2 (halved weights)", di.half_bounds2);
  std::printf("alpha %lld, beta %lld (%s), p %llu\nwrote %s\n",
              static_cast<long long>(di.alpha()), static_cast<long long>(di.beta()),
              a.bounds.c_str(), static_cast<unsigned long long>(di.p), a.out.c_str());
  return 0;
}

// ---- keygen --------------------------------------------------------------

struct KeygenArgs {
  std::string params, out = "keys";
  std::uint64_t seed = 0;
  bool seeded = false;
};

int cmd_keygen(const KeygenArgs& a) {
  const CryptoParams params = a.params.empty() ? CryptoParams::std128()
                                               : CryptoParams::load(a.params);
  params.validate();
  Prng rng(a.seeded ? a.seed : fresh_seed(), 0x6b657967656eULL);
  const auto t0 = std::chrono::steady_clock::now();
  const SecretKeys sk = generate_secret_keys(params, rng);
  const EvalKey ek = generate_eval_key(sk, rng);
  const Digest id = new_key_id(rng);
  fs::create_directories(a.out);
  const std::string skp = (fs::path(a.out) / "secret.key").string();
  const std::string ekp = (fs::path(a.out) / "eval.key").string();
  write_secret_key(skp, sk, id);
  write_eval_key(ekp, ek, id);
  std::printf("params %s (hash %s), key id %s\nwrote %s and %s (%.1fs)\n",
              params.name.c_str(), short_hex(params.hash()).c_str(), short_hex(id).c_str(),
              skp.c_str(), ekp.c_str(), seconds_since(t0));
  return 0;
}

// ---- encrypt -------------------------------------------------------------

struct EncryptArgs {
  std::string secret, model, data, out = "bundle.bin", mode = "A", split = "t10k";
  std::size_t T = 10, offset = 0, count = 100;
  std::uint64_t seed = 0;
};

int cmd_encrypt(const EncryptArgs& a) {
  const StoredSecretKey sk = read_secret_key(a.secret);
  const DiSnnModel di = DiSnnModel::load(a.model);
  const EncodingMode mode = parse_mode(a.mode);
  const FheDisnnModel fm = FheDisnnModel::from(di, mode);
  fm.check_steps(a.T);
  PlaintextParams{di.p}.validate(sk.keys.params.Q());
  if (2 * sk.keys.params.N < di.p) {
    throw ConfigError("message space exceeds the 2N bootstrap slots of the parameters");
  }
  const Dataset data = load_mnist(data_dir(a.data), a.split);
  if (a.offset >= data.size()) throw ConfigError("--offset beyond the dataset");
  const std::size_t end = std::min(data.size(), a.offset + a.count);
  Bundle b;
  b.params = sk.keys.params;
  b.key_id = sk.header.key_id;
  b.model_hash = model_digest(di);
  b.p = di.p;
  b.T = a.T;
  b.mode = mode;
  b.split = a.split;
  b.seed = a.seed;
  Prng rng(fresh_seed(), 0x656e63ULL);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = a.offset; i < end; ++i) {
    b.images.push_back(encode_and_encrypt(data.image(i), di.n, a.T, mode, sk.keys.lwe,
                                          sk.keys.params, di.p, a.seed, i, rng));
  }
  write_bundle(a.out, b);
  std::printf("encrypted %zu images (%s, T=%zu, p=%llu) in %.1fs\nwrote %s\n",
              b.images.size(), to_string(mode).c_str(), a.T,
              static_cast<unsigned long long>(di.p), seconds_since(t0), a.out.c_str());
  return 0;
}

// ---- infer ---------------------------------------------------------------

struct InferArgs {
  std::string eval, model, bundle, out = "scores.bin";
  std::size_t workers = 1;
};

int cmd_infer(const InferArgs& a) {
  // Lineage is checked on headers before any heavy work.
  const FileHeader eh = read_header(a.eval);
  FileHeader bh;
  const Bundle b = read_bundle(a.bundle, &bh);
  const DiSnnModel di = DiSnnModel::load(a.model);
  if (eh.kind != FileKind::kEvalKey) throw LineageError(a.eval + " is not an eval key");
  require_same(eh.param_hash, bh.param_hash, "parameter hash of eval key and bundle");
  require_same(eh.key_id, bh.key_id, "key id of eval key and bundle");
  require_same(model_digest(di), bh.model_hash, "model hash of bundle and model file");
  if (b.p != di.p) throw LineageError("bundle message space differs from the model");

  const StoredEvalKey ek = read_eval_key(a.eval);
  const FheDisnnModel fm = FheDisnnModel::from(di, b.mode);
  const BootstrapContext ctx(ek.key);
  const FheEvaluator ev(ctx, fm);

  ScoreFile s;
  s.params = b.params;
  s.key_id = b.key_id;
  s.model_hash = b.model_hash;
  s.parent_hash = bh.digest();
  s.p = b.p;
  s.T = b.T;
  s.mode = b.mode;
  s.split = b.split;
  s.seed = b.seed;
  s.workers = std::max<std::size_t>(1, a.workers);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<FheEvaluator::Result> results;
  if (s.workers == 1) {
    ExternalProductWorkspace ws;
    for (std::size_t i = 0; i < b.images.size(); ++i) {
      const auto ti = std::chrono::steady_clock::now();
      results.push_back(ev.predict(b.images[i], ws));
      std::printf("image %zu/%zu: %.1fs\n", i + 1, b.images.size(), seconds_since(ti));
      std::fflush(stdout);
    }
  } else {
    results = ev.predict_batch(b.images, s.workers);
  }
  const double total = seconds_since(t0);
  for (std::size_t i = 0; i < results.size(); ++i) {
    s.indices.push_back(b.images[i].index);
    s.scores.push_back(std::move(results[i].scores));
    double img = 0.0;
    for (double x : results[i].step_seconds) {
      s.step_seconds.push_back(x);
      img += x;
    }
    s.image_seconds.push_back(img);
  }
  s.counts = ev.counts();
  write_scores(a.out, s);
  const std::uint64_t expect = bootstrap_count(di.n, di.k, di.m, b.T, b.mode) * b.images.size();
  std::printf("bootstraps: %llu (encoding %llu, fire %llu, reset %llu), formula %llu\n",
              static_cast<unsigned long long>(s.counts.total()),
              static_cast<unsigned long long>(s.counts.encoding),
              static_cast<unsigned long long>(s.counts.fire),
              static_cast<unsigned long long>(s.counts.reset),
              static_cast<unsigned long long>(expect));
  std::printf("median time per step %.3fs, per image %.2fs, wall %.1fs with %zu worker(s)\n",
              median(s.step_seconds), median(s.image_seconds), total, s.workers);
  std::printf("wrote %s\n", a.out.c_str());
  return 0;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
  std::string secret, scores, model, data, out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const StoredSecretKey sk = read_secret_key(a.secret);
  FileHeader sh;
  const ScoreFile s = read_scores(a.scores, &sh);
  require_same(sk.header.key_id, sh.key_id, "key id of secret key and scores");
  require_same(sk.header.param_hash, sh.param_hash, "parameter hash of secret key and scores");
  const Dataset data = load_mnist(data_dir(a.data), s.split);

  bool have_model = !a.model.empty();
  DiSnnModel di;
  if (have_model) {
    di = DiSnnModel::load(a.model);
    require_same(model_digest(di), sh.model_hash, "model hash of scores and model file");
  }
  json report;
  json images = json::array();
  std::size_t correct = 0, di_correct = 0, half_correct = 0, agree = 0, agree_half = 0;
  for (std::size_t i = 0; i < s.indices.size(); ++i) {
    const std::uint64_t idx = s.indices[i];
    if (idx >= data.size()) throw DataError("score index beyond the dataset");
    const DecryptedScores d = decrypt_scores(s.scores[i], sk.keys.lwe);
    const int label = data.labels[idx];
    json row = {{"index", idx}, {"label", label}, {"fhe", d.label}, {"counts", d.counts}};
    std::int64_t worst = 0;
    for (const auto& ct : s.scores[i]) {
      worst = std::max<std::int64_t>(worst, std::llabs(lwe_measured_noise(ct, sk.keys.lwe)));
    }
    row["score_noise_max"] = worst;
    correct += d.label == label;
    if (have_model) {
      Prng rng = image_stream(s.seed, idx);
      const SpikeTrain in = poisson_encode_bytes(data.image(idx), di.n, s.T, rng);
      const int pl = di_predict(di, in).label;
      const int ph = di_predict(di, doubled(di.W1_half), doubled(di.W2_half), in).label;
      row["disnn"] = pl;
      row["disnn_halved"] = ph;
      row["agree"] = pl == d.label;
      row["agree_halved"] = ph == d.label;
      di_correct += pl == label;
      half_correct += ph == label;
      agree += pl == d.label;
      agree_half += ph == d.label;
    }
    images.push_back(row);
  }
  const double n = std::max<double>(1.0, static_cast<double>(s.indices.size()));
  report["images"] = images;
  report["count"] = s.indices.size();
  report["T"] = s.T;
  report["p"] = s.p;
  report["mode"] = to_string(s.mode);
  report["accuracy"] = correct / n;
  report["median_step_seconds"] = median(s.step_seconds);
  report["median_image_seconds"] = median(s.image_seconds);
  report["step_seconds"] = s.step_seconds;
  report["image_seconds"] = s.image_seconds;
  report["workers"] = s.workers;
  report["bootstraps"] = {{"encoding", s.counts.encoding},
                          {"fire", s.counts.fire},
                          {"reset", s.counts.reset},
                          {"total", s.counts.total()}};
  std::printf("images %zu, FHE accuracy %.4f\n", s.indices.size(), correct / n);
  if (have_model) {
    report["disnn_accuracy"] = di_correct / n;
    report["disnn_halved_accuracy"] = half_correct / n;
    report["agreement"] = agree / n;
    report["agreement_halved"] = agree_half / n;
    std::printf("DiSNN accuracy %.4f (halved weights %.4f)\n", di_correct / n,
                half_correct / n);
    std::printf("label agreement with DiSNN %.4f, with halved-weight DiSNN %.4f\n",
                agree / n, agree_half / n);
  }
  std::printf("median time per step %.3fs (%zu worker(s)), per image %.2fs\n",
              median(s.step_seconds), s.workers, median(s.image_seconds));
  std::printf("bootstraps %llu\n", static_cast<unsigned long long>(s.counts.total()));
  if (!a.out.empty()) {
    write_text(a.out, report.dump(2));
    std::printf("wrote %s\n", a.out.c_str());
  }
  return 0;
}

// ---- sweep ---------------------------------------------------------------

struct SweepArgs {
  std::string kind = "T", grid, model, data, out = "sweep.csv";
  double tau = 10.0;
  std::size_t T = 10, reps = 5, limit = 10000, calib = 10000;
  std::uint64_t seed = 0;
};

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad grid value '" + item + "'");
    }
  }
  return out;
}

int cmd_sweep(const SweepArgs& a) {
  if (a.kind != "T" && a.kind != "tau") throw ConfigError("--kind must be T or tau");
  const std::vector<double> grid = parse_grid(a.grid);
  if (grid.empty()) {
    std::fprintf(stderr, "warning: empty grid, nothing to do\n");
    return 0;
  }
  if (a.reps == 0) throw ConfigError("--reps must be positive");
  const SnnModel model = SnnModel::load(a.model);
  const std::string dir = data_dir(a.data);
  const Dataset test = load_mnist(dir, "t10k").head(a.limit);
  const Dataset calib = load_mnist(dir, "train").head(a.calib);

  std::ostringstream csv;
  csv << "kind,value,repetition,seed,metric,result\n";
  std::ostringstream summary;
  summary << "kind,value,metric,mean,min,max\n";
  std::printf("%-5s %8s %-8s %8s %8s %8s\n", "kind", "value", "metric", "mean", "min", "max");
  for (double v : grid) {
    std::map<std::string, std::vector<double>> results;
    DiSnnModel di;
    std::size_t T = a.T;
    double tau = a.tau;
    if (a.kind == "T") {
      if (v < 1 || v != std::floor(v)) throw ConfigError("T grid values must be integers >= 1");
      T = static_cast<std::size_t>(v);
    } else {
      if (!(v > 0.0)) throw ConfigError("tau grid values must be positive");
      tau = v;
    }
    ConvertOptions opt;
    opt.tau = tau;
    opt.T = T;
    opt.seed = a.seed;
    di = convert(model, calib, opt);
    for (std::size_t r = 0; r < a.reps; ++r) {
      const std::uint64_t seed = derive_seed(a.seed, r);
      results["snn"].push_back(evaluate_accuracy(model, test, T, seed));
      results["disnn"].push_back(di_accuracy(di, test, T, seed));
      for (const auto& [metric, vals] : results) {
        if (vals.size() == r + 1) {
          csv << a.kind << ',' << v << ',' << r << ',' << seed << ',' << metric << ','
              << vals.back() << '\n';
        }
      }
    }
    for (const auto& [metric, vals] : results) {
      double mean = 0.0;
      for (double x : vals) mean += x;
      mean /= static_cast<double>(vals.size());
      const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
      summary << a.kind << ',' << v << ',' << metric << ',' << mean << ',' << *lo << ','
              << *hi << '\n';
      std::printf("%-5s %8g %-8s %8.4f %8.4f %8.4f\n", a.kind.c_str(), v, metric.c_str(),
                  mean, *lo, *hi);
    }
    std::fflush(stdout);
  }
  write_text(a.out, csv.str());
  const std::string sp = a.out + ".summary.csv";
  write_text(sp, summary.str());
  std::printf("wrote %s and %s\n", a.out.c_str(), sp.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discretized spiking networks over homomorphic encryption"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train the plaintext SNN");
  train_cmd->add_option("--data", ta.data, "MNIST directory (default $DISNN_DATA)");
  train_cmd->add_option("--out", ta.out, "checkpoint path");
  train_cmd->add_option("--T", ta.T, "timesteps");
  train_cmd->add_option("--epochs", ta.epochs);
  train_cmd->add_option("--batch", ta.batch);
  train_cmd->add_option("--lr", ta.lr);
  train_cmd->add_option("--momentum", ta.momentum);
  train_cmd->add_option("--surrogate", ta.surrogate, "f1|f2|f3|f4|atan");
  train_cmd->add_option("--width", ta.width, "surrogate width a");
  train_cmd->add_option("--neuron", ta.neuron, "IF|LIF");
  train_cmd->add_option("--omega", ta.omega, "LIF time constant");
  train_cmd->add_option("--hidden", ta.hidden, "hidden layer size");
  train_cmd->add_option("--limit", ta.limit, "train on the first N images only");
  train_cmd->add_option("--seed", ta.seed);

  ConvertArgs ca;
  auto* convert_cmd = app.add_subcommand("convert", "discretise a trained SNN");
  convert_cmd->add_option("--model", ca.model, "SNN checkpoint")->required();
  convert_cmd->add_option("--tau", ca.tau, "discretisation level");
  convert_cmd->add_option("--p", ca.p, "message space (0 = smallest admissible)");
  convert_cmd->add_option("--T", ca.T, "timesteps for calibration");
  convert_cmd->add_option("--seed", ca.seed);
  convert_cmd->add_option("--calib", ca.calib, "calibration images from the training set");
  convert_cmd->add_option("--bounds", ca.bounds, "empirical|analytic");
  convert_cmd->add_option("--data", ca.data);
  convert_cmd->add_option("--out", ca.out);

  KeygenArgs ka;
  auto* keygen_cmd = app.add_subcommand("keygen", "generate secret and evaluation keys");
  keygen_cmd->add_option("--params", ka.params, "parameter JSON (default std128)");
  auto* seed_opt = keygen_cmd->add_option("--seed", ka.seed, "deterministic key seed");
  keygen_cmd->add_option("--out", ka.out, "output directory");

  EncryptArgs ea;
  auto* encrypt_cmd = app.add_subcommand("encrypt", "encrypt test images (client)");
  encrypt_cmd->add_option("--secret", ea.secret, "secret key file")->required();
  encrypt_cmd->add_option("--model", ea.model, "DiSNN file")->required();
  encrypt_cmd->add_option("--mode", ea.mode, "A (encode-then-encrypt) or B");
  encrypt_cmd->add_option("--T", ea.T);
  encrypt_cmd->add_option("--seed", ea.seed, "Poisson encoding seed");
  encrypt_cmd->add_option("--split", ea.split, "train|t10k");
  encrypt_cmd->add_option("--offset", ea.offset);
  encrypt_cmd->add_option("--count", ea.count);
  encrypt_cmd->add_option("--data", ea.data);
  encrypt_cmd->add_option("--out", ea.out);

  InferArgs ia;
  auto* infer_cmd = app.add_subcommand("infer", "encrypted inference (server, no secret key)");
  infer_cmd->add_option("--eval", ia.eval, "evaluation key file")->required();
  infer_cmd->add_option("--model", ia.model, "DiSNN file")->required();
  infer_cmd->add_option("--bundle", ia.bundle, "encrypted images")->required();
  infer_cmd->add_option("--workers", ia.workers, "parallel images");
  infer_cmd->add_option("--out", ia.out);

  EvaluateArgs va;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "decrypt scores and report (client)");
  evaluate_cmd->add_option("--secret", va.secret, "secret key file")->required();
  evaluate_cmd->add_option("--scores", va.scores, "encrypted scores")->required();
  evaluate_cmd->add_option("--model", va.model, "DiSNN file for plaintext comparison");
  evaluate_cmd->add_option("--data", va.data);
  evaluate_cmd->add_option("--out", va.out, "JSON report path");

  SweepArgs sa;
  auto* sweep_cmd = app.add_subcommand("sweep", "accuracy sweeps over T or tau");
  sweep_cmd->add_option("--kind", sa.kind, "T|tau");
  sweep_cmd->add_option("--grid", sa.grid, "comma-separated values");
  sweep_cmd->add_option("--model", sa.model, "SNN checkpoint")->required();
  sweep_cmd->add_option("--tau", sa.tau, "tau for T sweeps");
  sweep_cmd->add_option("--T", sa.T, "T for tau sweeps");
  sweep_cmd->add_option("--reps", sa.reps, "repetitions per point");
  sweep_cmd->add_option("--limit", sa.limit, "test images");
  sweep_cmd->add_option("--calib", sa.calib, "calibration images");
  sweep_cmd->add_option("--seed", sa.seed);
  sweep_cmd->add_option("--data", sa.data);
  sweep_cmd->add_option("--out", sa.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*train_cmd) return cmd_train(ta);
    if (*convert_cmd) return cmd_convert(ca);
    if (*keygen_cmd) {
      ka.seeded = seed_opt->count() > 0;
      return cmd_keygen(ka);
    }
    if (*encrypt_cmd) return cmd_encrypt(ea);
    if (*infer_cmd) return cmd_infer(ia);
    if (*evaluate_cmd) return cmd_evaluate(va);
    if (*sweep_cmd) return cmd_sweep(sa);
  } catch (const Error& e) {
    std::fprintf(stderr, "disnn: %s\n", e.what());
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "disnn: %s\n", e.what());
    return static_cast<int>(ExitCode::kData);
  }
  return 0;
}
