#include "disnn/snn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "disnn/errors.hpp"
#include "json.hpp"

namespace disnn {

using nlohmann::json;

void NeuronModelConfig::validate() const {
  if (!(v_reset < v_threshold)) {
    throw ParameterError("V_reset must be below V_threshold");
  }
  if (kind == NeuronKind::kLIF && !(omega > 0.0)) {
    throw ParameterError("LIF time constant must be positive");
  }
}

void SnnModel::validate() const {
  neuron.validate();
  if (n == 0 || k == 0 || m == 0) throw ParameterError("layer sizes must be positive");
  if (W1.size() != k * n || W2.size() != m * k) {
    throw ParameterError("weight matrix shape does not match layer sizes");
  }
  for (double w : W1) {
    if (!std::isfinite(w)) throw ParameterError("non-finite weight in W1");
  }
  for (double w : W2) {
    if (!std::isfinite(w)) throw ParameterError("non-finite weight in W2");
  }
}

SnnModel SnnModel::initialise(std::size_t n, std::size_t k, std::size_t m,
                              const NeuronModelConfig& cfg, Prng& rng) {
  SnnModel model;
  model.n = n;
  model.k = k;
  model.m = m;
  model.neuron = cfg;
  const double b1 = 1.0 / std::sqrt(static_cast<double>(n));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(k));
  model.W1.resize(k * n);
  model.W2.resize(m * k);
  for (auto& w : model.W1) w = (2.0 * rng.uniform01() - 1.0) * b1;
  for (auto& w : model.W2) w = (2.0 * rng.uniform01() - 1.0) * b2;
  model.validate();
  return model;
}

std::string SnnModel::to_json() const {
  json j;
  j["format"] = "disnn-snn";
  j["version"] = 1;
  j["n"] = n;
  j["k"] = k;
  j["m"] = m;
  j["neuron"] = {{"kind", neuron.kind == NeuronKind::kIF ? "IF" : "LIF"},
                 {"omega", neuron.omega},
                 {"v_threshold", neuron.v_threshold},
                 {"v_reset", neuron.v_reset}};
  j["W1"] = W1;
  j["W2"] = W2;
  return j.dump();
}

SnnModel SnnModel::from_json(const std::string& text) {
  SnnModel model;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "disnn-snn") {
      throw DataError("not an SNN checkpoint");
    }
    model.n = j.at("n").get<std::size_t>();
    model.k = j.at("k").get<std::size_t>();
    model.m = j.at("m").get<std::size_t>();
    const auto& nj = j.at("neuron");
    const std::string kind = nj.at("kind").get<std::string>();
    if (kind != "IF" && kind != "LIF") throw DataError("unknown neuron kind " + kind);
    model.neuron.kind = kind == "IF" ? NeuronKind::kIF : NeuronKind::kLIF;
    model.neuron.omega = nj.at("omega").get<double>();
    model.neuron.v_threshold = nj.at("v_threshold").get<double>();
    model.neuron.v_reset = nj.at("v_reset").get<double>();
    model.W1 = j.at("W1").get<std::vector<double>>();
    model.W2 = j.at("W2").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed SNN checkpoint: ") + e.what());
  }
  model.validate();
  return model;
}

void SnnModel::save(const std::string& path) const {
  const std::string text = to_json();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << text;
  }
  std::rename(tmp.c_str(), path.c_str());
}

SnnModel SnnModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

namespace {

struct ChargeCoeffs {
  double cv;
  double ci;
};

ChargeCoeffs coeffs(const NeuronModelConfig& cfg) {
  if (cfg.kind == NeuronKind::kIF) return {1.0, 1.0};
  return {1.0 - 1.0 / cfg.omega, 1.0 / cfg.omega};
}

double reset_one(double h, std::uint8_t s, const NeuronModelConfig& cfg) {
  if (s) return cfg.v_reset;
  return h < cfg.v_reset ? cfg.v_reset : h;
}

}  // namespace

std::vector<double> charge(const std::vector<double>& V,
                           const std::vector<double>& I,
                           const NeuronModelConfig& cfg) {
  if (V.size() != I.size()) throw ParameterError("charge: size mismatch");
  const auto c = coeffs(cfg);
  std::vector<double> H(V.size());
  for (std::size_t i = 0; i < V.size(); ++i) H[i] = c.cv * V[i] + c.ci * I[i];
  return H;
}

std::vector<std::uint8_t> fire(const std::vector<double>& H,
                               const NeuronModelConfig& cfg) {
  std::vector<std::uint8_t> s(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) s[i] = H[i] - cfg.v_threshold >= 0.0;
  return s;
}

std::vector<double> reset(const std::vector<double>& H,
                          const NeuronModelConfig& cfg) {
  std::vector<double> V(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) {
    V[i] = reset_one(H[i], H[i] >= cfg.v_threshold, cfg);
  }
  return V;
}

SpikeTrain poisson_encode(const std::vector<double>& image, std::size_t T,
                          Prng& rng) {
  for (double x : image) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("pixel outside [0, 1]");
  }
  SpikeTrain s{T, image.size(), std::vector<std::uint8_t>(T * image.size())};
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < image.size(); ++i) {
      s.bits[t * image.size() + i] = image[i] > rng.uniform01();
    }
  }
  return s;
}

std::vector<std::uint8_t> poisson_thresholds(std::size_t dim, std::size_t T,
                                             Prng& rng) {
  std::vector<std::uint8_t> th(T * dim);
  for (auto& v : th) {
    v = static_cast<std::uint8_t>(std::floor(255.0 * rng.uniform01()));
  }
  return th;
}

SpikeTrain poisson_encode_bytes(const std::uint8_t* image, std::size_t dim,
                                std::size_t T, Prng& rng) {
  const auto th = poisson_thresholds(dim, T, rng);
  SpikeTrain s{T, dim, std::vector<std::uint8_t>(T * dim)};
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < dim; ++i) {
      s.bits[t * dim + i] = image[i] > th[t * dim + i];
    }
  }
  return s;
}

Prng image_stream(std::uint64_t seed, std::uint64_t index) {
  return Prng(derive_seed(seed, index), 0x706f6973736f6eULL);
}

NetworkState initial_state(const SnnModel& model) {
  NetworkState st;
  st.hidden.V.assign(model.k, model.neuron.v_reset);
  st.hidden.H.assign(model.k, 0.0);
  st.out.V.assign(model.m, model.neuron.v_reset);
  st.out.H.assign(model.m, 0.0);
  return st;
}

namespace {

void layer_step(const std::vector<double>& W, std::size_t in_dim,
                const std::uint8_t* s_in, const NeuronModelConfig& cfg,
                LayerState& st, std::vector<std::uint8_t>& s_out) {
  const std::size_t out_dim = st.V.size();
  const auto c = coeffs(cfg);
  s_out.resize(out_dim);
  for (std::size_t i = 0; i < out_dim; ++i) {
    const double* row = W.data() + i * in_dim;
    double I = 0.0;
    for (std::size_t j = 0; j < in_dim; ++j) {
      if (s_in[j]) I += row[j];
    }
    const double h = c.cv * st.V[i] + c.ci * I;
    st.H[i] = h;
    s_out[i] = h - cfg.v_threshold >= 0.0;
    st.V[i] = reset_one(h, s_out[i], cfg);
  }
}

}  // namespace

StepOutput forward_timestep(const SnnModel& model, const std::uint8_t* spikes_in,
                            NetworkState& state) {
  StepOutput out;
  layer_step(model.W1, model.n, spikes_in, model.neuron, state.hidden,
             out.hidden_spikes);
  layer_step(model.W2, model.k, out.hidden_spikes.data(), model.neuron, state.out,
             out.out_spikes);
  return out;
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

Prediction predict(const SnnModel& model, const SpikeTrain& input) {
  if (input.dim != model.n) throw ParameterError("input dimension mismatch");
  NetworkState st = initial_state(model);
  Prediction p;
  p.scores.assign(model.m, 0.0);
  for (std::size_t t = 0; t < input.T; ++t) {
    const StepOutput o = forward_timestep(model, input.step(t), st);
    for (std::size_t i = 0; i < model.m; ++i) p.scores[i] += o.out_spikes[i];
  }
  p.label = argmax(p.scores);
  return p;
}

Prediction predict(const SnnModel& model, const std::uint8_t* image,
                   std::size_t T, Prng& rng) {
  return predict(model, poisson_encode_bytes(image, model.n, T, rng));
}

double evaluate_accuracy(const SnnModel& model, const Dataset& data,
                         std::size_t T, std::uint64_t seed,
                         std::vector<int>* labels) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  if (labels) labels->resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Prng rng = image_stream(seed, i);
    const int label = predict(model, data.image(i), T, rng).label;
    if (labels) (*labels)[i] = label;
    correct += label == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

SurrogateKind parse_surrogate(const std::string& name) {
  if (name == "f1") return SurrogateKind::kF1;
  if (name == "f2") return SurrogateKind::kF2;
  if (name == "f3") return SurrogateKind::kF3;
  if (name == "f4") return SurrogateKind::kF4;
  if (name == "atan") return SurrogateKind::kAtan;
  throw ParameterError("unknown surrogate '" + name + "'");
}

double surrogate_grad(SurrogateKind kind, double a, double V, double v_th) {
  if (!(a > 0.0)) throw ParameterError("surrogate width must be positive");
  const double x = V - v_th;
  switch (kind) {
    case SurrogateKind::kF1:
      return std::fabs(x) < a / 2.0 ? 1.0 / a : 0.0;
    case SurrogateKind::kF2: {
      const double r = std::sqrt(a);
      return 2.0 / r - std::fabs(x) > 0.0 ? r / 2.0 - a / 4.0 * std::fabs(x) : 0.0;
    }
    case SurrogateKind::kF3: {
      const double e = std::exp(-x / a);
      return e / (a * (1.0 + e) * (1.0 + e));
    }
    case SurrogateKind::kF4:
      return std::exp(-x * x / (2.0 * a)) / std::sqrt(2.0 * M_PI * a);
    case SurrogateKind::kAtan: {
      const double u = M_PI / 2.0 * a * x;
      return (a / 2.0) / (1.0 + u * u);
    }
  }
  throw ParameterError("unknown surrogate kind");
}

double rate_mse(const std::vector<double>& rates, int label) {
  double s = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const double d = rates[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
    s += d * d;
  }
  return s / static_cast<double>(rates.size());
}

namespace {

// Forward trace of one sample, kept for the backward pass.
struct Trace {
  std::vector<std::vector<std::uint16_t>> active;  // input spikes per step
  std::vector<double> H1, H2;                      // T x k, T x m
  std::vector<std::uint8_t> S1, S2;
  std::vector<double> counts;
};

void run_trace(const SnnModel& model, const SpikeTrain& in, Trace& tr) {
  const std::size_t T = in.T, n = model.n, k = model.k, m = model.m;
  const auto c = coeffs(model.neuron);
  const auto& cfg = model.neuron;
  tr.active.assign(T, {});
  tr.H1.assign(T * k, 0.0);
  tr.H2.assign(T * m, 0.0);
  tr.S1.assign(T * k, 0);
  tr.S2.assign(T * m, 0);
  tr.counts.assign(m, 0.0);
  std::vector<double> V1(k, cfg.v_reset), V2(m, cfg.v_reset), I1(k), I2(m);
  for (std::size_t t = 0; t < T; ++t) {
    auto& act = tr.active[t];
    const std::uint8_t* s = in.step(t);
    for (std::size_t j = 0; j < n; ++j) {
      if (s[j]) act.push_back(static_cast<std::uint16_t>(j));
    }
    std::fill(I1.begin(), I1.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const double* row = model.W1.data() + i * n;
      double acc = 0.0;
      for (auto j : act) acc += row[j];
      I1[i] = acc;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double h = c.cv * V1[i] + c.ci * I1[i];
      const std::uint8_t sp = h >= cfg.v_threshold;
      tr.H1[t * k + i] = h;
      tr.S1[t * k + i] = sp;
      V1[i] = reset_one(h, sp, cfg);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = model.W2.data() + i * k;
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (tr.S1[t * k + j]) acc += row[j];
      }
      const double h = c.cv * V2[i] + c.ci * acc;
      const std::uint8_t sp = h >= cfg.v_threshold;
      tr.H2[t * m + i] = h;
      tr.S2[t * m + i] = sp;
      V2[i] = reset_one(h, sp, cfg);
      tr.counts[i] += sp;
    }
  }
}

// Accumulates the gradient of the batch-mean loss for one sample.
void backward(const SnnModel& model, const Trace& tr, int label, double scale,
              const TrainConfig& cfg, std::vector<double>& gW1,
              std::vector<double>& gW2) {
  const std::size_t T = tr.active.size(), n = model.n, k = model.k, m = model.m;
  const auto c = coeffs(model.neuron);
  const auto& nc = model.neuron;
  std::vector<double> gOut(m), gV1(k, 0.0), gV2(m, 0.0), gI2(m), gS1(k), gI1(k);
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = tr.counts[i] * inv_t;
    const double y = static_cast<int>(i) == label ? 1.0 : 0.0;
    gOut[i] = scale * 2.0 * (r - y) / static_cast<double>(m) * inv_t;
  }
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t i = 0; i < m; ++i) {
      const double h = tr.H2[t * m + i];
      const double keep = tr.S2[t * m + i] == 0 && h >= nc.v_reset ? 1.0 : 0.0;
      const double gH = gOut[i] * surrogate_grad(cfg.surrogate, cfg.width, h,
                                                 nc.v_threshold) +
                        gV2[i] * keep;
      gV2[i] = gH * c.cv;
      gI2[i] = gH * c.ci;
    }
    std::fill(gS1.begin(), gS1.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double g = gI2[i];
      if (g == 0.0) continue;
      double* grow = gW2.data() + i * k;
      const double* wrow = model.W2.data() + i * k;
      for (std::size_t j = 0; j < k; ++j) {
        if (tr.S1[t * k + j]) grow[j] += g;
        gS1[j] += g * wrow[j];
      }
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double h = tr.H1[t * k + j];
      const double keep = tr.S1[t * k + j] == 0 && h >= nc.v_reset ? 1.0 : 0.0;
      const double gH =
          gS1[j] * surrogate_grad(cfg.surrogate, cfg.width, h, nc.v_threshold) +
          gV1[j] * keep;
      gV1[j] = gH * c.cv;
      gI1[j] = gH * c.ci;
    }
    const auto& act = tr.active[t];
    for (std::size_t j = 0; j < k; ++j) {
      const double g = gI1[j];
      if (g == 0.0) continue;
      double* grow = gW1.data() + j * n;
      for (auto a : act) grow[a] += g;
    }
  }
}

}  // namespace

SnnModel train(SnnModel model, const Dataset& data, const TrainConfig& cfg) {
  model.validate();
  if (data.dim() != model.n) throw ParameterError("dataset dimension mismatch");
  if (cfg.batch == 0 || cfg.T == 0) throw ParameterError("batch and T must be positive");
  const std::size_t count = cfg.limit ? std::min(cfg.limit, data.size()) : data.size();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> gW1(model.W1.size()), gW2(model.W2.size());
  std::vector<double> vW1(model.W1.size(), 0.0), vW2(model.W2.size(), 0.0);
  Trace tr;
  Prng shuffle_rng(derive_seed(cfg.seed, 0x5348ULL));
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < count; start += cfg.batch) {
      const std::size_t end = std::min(count, start + cfg.batch);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(gW1.begin(), gW1.end(), 0.0);
      std::fill(gW2.begin(), gW2.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        Prng rng(derive_seed(cfg.seed, (epoch + 1) * 0x100000000ULL + idx));
        const SpikeTrain in = poisson_encode_bytes(data.image(idx), model.n, cfg.T, rng);
        run_trace(model, in, tr);
        std::vector<double> rates(tr.counts);
        for (auto& r : rates) r /= static_cast<double>(cfg.T);
        const double loss = rate_mse(rates, data.labels[idx]);
        if (!std::isfinite(loss)) {
          std::ostringstream os;
          os << "non-finite loss at epoch " << epoch << ", sample " << idx;
          throw TrainingError(os.str());
        }
        loss_sum += loss;
        backward(model, tr, data.labels[idx], scale, cfg, gW1, gW2);
      }
      for (std::size_t i = 0; i < model.W1.size(); ++i) {
        vW1[i] = cfg.momentum * vW1[i] + gW1[i];
        model.W1[i] -= cfg.lr * vW1[i];
      }
      for (std::size_t i = 0; i < model.W2.size(); ++i) {
        vW2[i] = cfg.momentum * vW2[i] + gW2[i];
        model.W2[i] -= cfg.lr * vW2[i];
      }
    }
    for (double w : model.W1) {
      if (!std::isfinite(w)) throw TrainingError("weights diverged (W1 non-finite)");
    }
    const double mean_loss = loss_sum / static_cast<double>(count);
    if (cfg.on_epoch) cfg.on_epoch(epoch, mean_loss);
  }
  return model;
}

}  // namespace disnn
