#include "disnn/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <tuple>

#include "disnn/errors.hpp"
#include "disnn/params.hpp"
#include "json.hpp"

namespace disnn {

using nlohmann::json;

std::int64_t discret(double x, double tau) {
  if (!std::isfinite(x)) throw DomainError("cannot discretise a non-finite value");
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw DomainError("discretisation level must be positive");
  }
  const double y = x * tau;
  if (std::fabs(y) > 9.0e15) throw DomainError("discretised value out of range");
  return static_cast<std::int64_t>(std::round(y));  // half away from zero
}

double error_bound(std::size_t spike_count) {
  return 0.5 * static_cast<double>(spike_count);
}

McResult expected_error_mc(double lambda, std::size_t trials, Prng& rng) {
  if (!(lambda >= 0.0)) throw DomainError("Poisson rate must be non-negative");
  if (trials == 0) throw DomainError("trial count must be positive");
  std::poisson_distribution<long> count(lambda);
  McResult r;
  for (std::size_t t = 0; t < trials; ++t) {
    const long c = lambda > 0.0 ? count(rng) : 0;
    double sa = 0.0, s = 0.0;
    for (long j = 0; j < c; ++j) {
      const double xi = rng.uniform01() - 0.5;
      sa += std::fabs(xi);
      s += xi;
    }
    r.sum_abs += sa;
    r.abs_sum += std::fabs(s);
  }
  r.sum_abs /= static_cast<double>(trials);
  r.abs_sum /= static_cast<double>(trials);
  return r;
}

std::uint64_t choose_message_space(std::int64_t alpha, std::uint64_t min_p) {
  std::uint64_t p = std::max<std::uint64_t>(min_p, 4);
  if ((p & (p - 1)) != 0) throw ParameterError("minimum p must be a power of two");
  while (static_cast<std::int64_t>(p / 2) <= alpha) {
    if (p >= (std::uint64_t{1} << 40)) throw RangeError("alpha too large for any p");
    p <<= 1;
  }
  return p;
}

std::int64_t DiSnnModel::alpha() const {
  if (bound_source == BoundSource::kAnalytic) {
    return std::max({bounds1.alpha, bounds2.alpha, half_bounds1.alpha, half_bounds2.alpha});
  }
  return std::max({bounds1.alpha_empirical, bounds2.alpha_empirical,
                   half_bounds1.alpha_empirical, half_bounds2.alpha_empirical});
}

void DiSnnModel::validate() const {
  if (n == 0 || k == 0 || m == 0) throw ParameterError("layer sizes must be positive");
  if (W1.size() != k * n || W2.size() != m * k) {
    throw ParameterError("weight matrix shape does not match layer sizes");
  }
  if (W1_half.size() != W1.size() || W2_half.size() != W2.size()) {
    throw ParameterError("halved weight shape does not match layer sizes");
  }
  if (p < 4 || (p & (p - 1)) != 0) {
    throw ParameterError("message space must be a power of two >= 4");
  }
  if (!(tau > 0.0)) throw ParameterError("tau must be positive");
  if (v_reset >= v_threshold) throw ParameterError("V_reset must be below V_threshold");
}

namespace {

json bounds_json(const LayerBounds& b) {
  return {{"alpha", b.alpha},
          {"beta", b.beta},
          {"alpha_worst", b.alpha_worst},
          {"observed_max", b.observed_max},
          {"observed_min", b.observed_min},
          {"alpha_empirical", b.alpha_empirical},
          {"max_spike_count", b.max_spike_count}};
}

LayerBounds bounds_from(const json& j) {
  LayerBounds b;
  b.alpha = j.at("alpha").get<std::int64_t>();
  b.beta = j.at("beta").get<std::int64_t>();
  b.alpha_worst = j.at("alpha_worst").get<std::int64_t>();
  b.observed_max = j.at("observed_max").get<std::int64_t>();
  b.observed_min = j.at("observed_min").get<std::int64_t>();
  b.alpha_empirical = j.at("alpha_empirical").get<std::int64_t>();
  b.max_spike_count = j.at("max_spike_count").get<std::int64_t>();
  return b;
}

}  // namespace

std::string DiSnnModel::to_json() const {
  json j;
  j["format"] = "disnn-disnn";
  j["version"] = 1;
  j["n"] = n;
  j["k"] = k;
  j["m"] = m;
  j["tau"] = tau;
  j["p"] = p;
  j["v_threshold"] = v_threshold;
  j["v_reset"] = v_reset;
  j["neuron"] = {{"kind", neuron.kind == NeuronKind::kIF ? "IF" : "LIF"},
                 {"omega", neuron.omega},
                 {"v_threshold", neuron.v_threshold},
                 {"v_reset", neuron.v_reset}};
  j["bound_source"] = bound_source == BoundSource::kAnalytic ? "analytic" : "empirical";
  j["bounds1"] = bounds_json(bounds1);
  j["bounds2"] = bounds_json(bounds2);
  j["half_bounds1"] = bounds_json(half_bounds1);
  j["half_bounds2"] = bounds_json(half_bounds2);
  j["W1"] = W1;
  j["W2"] = W2;
  j["W1_half"] = W1_half;
  j["W2_half"] = W2_half;
  return j.dump();
}

DiSnnModel DiSnnModel::from_json(const std::string& text) {
  DiSnnModel d;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "disnn-disnn") {
      throw DataError("not a discretised model");
    }
    d.n = j.at("n").get<std::size_t>();
    d.k = j.at("k").get<std::size_t>();
    d.m = j.at("m").get<std::size_t>();
    d.tau = j.at("tau").get<double>();
    d.p = j.at("p").get<std::uint64_t>();
    d.v_threshold = j.at("v_threshold").get<std::int64_t>();
    d.v_reset = j.at("v_reset").get<std::int64_t>();
    const auto& nj = j.at("neuron");
    const std::string kind = nj.at("kind").get<std::string>();
    if (kind != "IF" && kind != "LIF") throw DataError("unknown neuron kind " + kind);
    d.neuron.kind = kind == "IF" ? NeuronKind::kIF : NeuronKind::kLIF;
    d.neuron.omega = nj.at("omega").get<double>();
    d.neuron.v_threshold = nj.at("v_threshold").get<double>();
    d.neuron.v_reset = nj.at("v_reset").get<double>();
    const std::string src = j.at("bound_source").get<std::string>();
    if (src != "analytic" && src != "empirical") throw DataError("unknown bound source");
    d.bound_source = src == "analytic" ? BoundSource::kAnalytic : BoundSource::kEmpirical;
    d.bounds1 = bounds_from(j.at("bounds1"));
    d.bounds2 = bounds_from(j.at("bounds2"));
    d.half_bounds1 = bounds_from(j.at("half_bounds1"));
    d.half_bounds2 = bounds_from(j.at("half_bounds2"));
    d.W1 = j.at("W1").get<std::vector<std::int64_t>>();
    d.W2 = j.at("W2").get<std::vector<std::int64_t>>();
    d.W1_half = j.at("W1_half").get<std::vector<std::int64_t>>();
    d.W2_half = j.at("W2_half").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed discretised model: ") + e.what());
  }
  d.validate();
  return d;
}

void DiSnnModel::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << to_json();
  }
  std::rename(tmp.c_str(), path.c_str());
}

DiSnnModel DiSnnModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string DiSnnModel::digest_hex() const {
  const std::string s = to_json();
  return hex(sha256(s.data(), s.size()));
}

DiState di_initial_state(const DiSnnModel& model) {
  DiState st;
  st.V1.assign(model.k, static_cast<double>(model.v_reset));
  st.V2.assign(model.m, static_cast<double>(model.v_reset));
  return st;
}

namespace {

void layer_step(const DiSnnModel& model, const std::int64_t* W, std::size_t rows,
                std::size_t cols, const std::uint8_t* s_in, std::vector<double>& V,
                std::vector<double>& H, std::vector<std::uint8_t>& S) {
  H.resize(rows);
  S.resize(rows);
  const bool lif = model.neuron.kind == NeuronKind::kLIF;
  const double inv = lif ? 1.0 / model.neuron.omega : 1.0;
  const double vth = static_cast<double>(model.v_threshold);
  const double vr = static_cast<double>(model.v_reset);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::int64_t* w = W + i * cols;
    std::int64_t acc = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (s_in[j]) acc += w[j];
    }
    const double I = static_cast<double>(acc);
    const double h = lif ? (1.0 - inv) * V[i] + inv * I : V[i] + I;
    H[i] = h;
    S[i] = h - vth >= 0.0;
    V[i] = S[i] ? vr : std::max(h, vr);
  }
}

}  // namespace

void di_timestep(const DiSnnModel& model, const std::vector<std::int64_t>& W1,
                 const std::vector<std::int64_t>& W2, const std::uint8_t* s_in,
                 DiState& st, DiStepTrace& out) {
  layer_step(model, W1.data(), model.k, model.n, s_in, st.V1, out.H1, out.S1);
  layer_step(model, W2.data(), model.m, model.k, out.S1.data(), st.V2, out.H2, out.S2);
}

DiPrediction di_predict(const DiSnnModel& model, const std::vector<std::int64_t>& W1,
                        const std::vector<std::int64_t>& W2,
                        const SpikeTrain& input) {
  if (input.dim != model.n) throw ParameterError("input dimension mismatch");
  if (W1.size() != model.k * model.n || W2.size() != model.m * model.k) {
    throw ParameterError("weight matrix shape does not match layer sizes");
  }
  DiState st = di_initial_state(model);
  DiStepTrace tr;
  DiPrediction p;
  p.scores.assign(model.m, 0.0);
  p.hidden_train.reserve(input.T * model.k);
  p.out_train.reserve(input.T * model.m);
  for (std::size_t t = 0; t < input.T; ++t) {
    di_timestep(model, W1, W2, input.step(t), st, tr);
    p.hidden_train.insert(p.hidden_train.end(), tr.S1.begin(), tr.S1.end());
    p.out_train.insert(p.out_train.end(), tr.S2.begin(), tr.S2.end());
    for (std::size_t i = 0; i < model.m; ++i) p.scores[i] += tr.S2[i];
  }
  p.label = argmax(p.scores);
  return p;
}

DiPrediction di_predict(const DiSnnModel& model, const SpikeTrain& input) {
  return di_predict(model, model.W1, model.W2, input);
}

double di_accuracy(const DiSnnModel& model, const Dataset& data, std::size_t T,
                   std::uint64_t seed, std::vector<int>* labels) {
  if (data.size() == 0) return 0.0;
  if (labels) labels->resize(data.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Prng rng = image_stream(seed, i);
    const SpikeTrain in = poisson_encode_bytes(data.image(i), model.n, T, rng);
    const int label = di_predict(model, in).label;
    if (labels) (*labels)[i] = label;
    correct += label == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

Calibration calibrate(const DiSnnModel& model, const std::vector<std::int64_t>& W1,
                      const std::vector<std::int64_t>& W2, const Dataset& data,
                      std::size_t T, std::uint64_t seed) {
  Calibration c;
  c.h1_max = c.h2_max = model.v_reset;
  c.h1_min = c.h2_min = model.v_reset;
  DiStepTrace tr;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Prng rng = image_stream(seed, i);
    const SpikeTrain in = poisson_encode_bytes(data.image(i), model.n, T, rng);
    DiState st = di_initial_state(model);
    for (std::size_t t = 0; t < T; ++t) {
      const std::uint8_t* s = in.step(t);
      c.s0_max = std::max<std::int64_t>(
          c.s0_max, std::count(s, s + model.n, std::uint8_t{1}));
      di_timestep(model, W1, W2, s, st, tr);
      c.s1_max = std::max<std::int64_t>(
          c.s1_max, std::count(tr.S1.begin(), tr.S1.end(), std::uint8_t{1}));
      for (double h : tr.H1) {
        c.h1_max = std::max(c.h1_max, static_cast<std::int64_t>(std::ceil(h)));
        c.h1_min = std::min(c.h1_min, static_cast<std::int64_t>(std::floor(h)));
      }
      for (double h : tr.H2) {
        c.h2_max = std::max(c.h2_max, static_cast<std::int64_t>(std::ceil(h)));
        c.h2_min = std::min(c.h2_min, static_cast<std::int64_t>(std::floor(h)));
      }
    }
  }
  return c;
}

namespace {

std::int64_t max_abs(const std::vector<std::int64_t>& w) {
  std::int64_t m = 0;
  for (auto x : w) m = std::max(m, x < 0 ? -x : x);
  return m;
}

LayerBounds layer_bounds(const DiSnnModel& model, std::int64_t wmax,
                         std::size_t fan_in, std::int64_t spikes,
                         std::int64_t hmax, std::int64_t hmin) {
  LayerBounds b;
  const std::int64_t vth = model.v_threshold;
  const std::int64_t vr = model.v_reset < 0 ? -model.v_reset : model.v_reset;
  b.max_spike_count = spikes;
  b.alpha = vth + wmax * spikes;
  // With |V_reset| folded into the lower extreme; equals -alpha + V_th when
  // V_reset is zero.
  b.beta = -(vr + wmax * spikes);
  b.alpha_worst = vth + wmax * static_cast<std::int64_t>(fan_in);
  b.observed_max = hmax;
  b.observed_min = hmin;
  b.alpha_empirical = std::max(hmax, vth - hmin);
  if (model.v_reset == 0 && b.beta != -b.alpha + vth) {
    throw ParameterError("lower bound does not mirror the upper bound");
  }
  return b;
}

}  // namespace

std::pair<LayerBounds, LayerBounds> compute_bounds(const DiSnnModel& model,
                                                   const std::vector<std::int64_t>& W1,
                                                   const std::vector<std::int64_t>& W2,
                                                   const Calibration& cal) {
  return {layer_bounds(model, max_abs(W1), model.n, cal.s0_max, cal.h1_max, cal.h1_min),
          layer_bounds(model, max_abs(W2), model.k, cal.s1_max, cal.h2_max, cal.h2_min)};
}

std::vector<std::int64_t> doubled(const std::vector<std::int64_t>& w) {
  std::vector<std::int64_t> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = 2 * w[i];
  return out;
}

DiSnnModel convert(const SnnModel& model, const Dataset& calibration,
                   const ConvertOptions& opt) {
  model.validate();
  if (opt.T == 0) throw ParameterError("T must be positive");
  if (opt.p != 0 && (opt.p < 4 || (opt.p & (opt.p - 1)) != 0)) {
    throw ParameterError("message space must be a power of two >= 4");
  }
  if (calibration.size() == 0) throw DataError("empty calibration set");
  if (calibration.dim() != model.n) throw DataError("calibration image size mismatch");
  DiSnnModel d;
  d.n = model.n;
  d.k = model.k;
  d.m = model.m;
  d.tau = opt.tau;
  d.neuron = model.neuron;
  d.bound_source = opt.bound_source;
  d.v_threshold = discret(model.neuron.v_threshold, opt.tau);
  d.v_reset = discret(model.neuron.v_reset, opt.tau);
  if (d.v_reset >= d.v_threshold) {
    throw ParameterError("tau too small: discretised threshold collapses onto reset");
  }
  d.W1.resize(model.W1.size());
  d.W2.resize(model.W2.size());
  for (std::size_t i = 0; i < d.W1.size(); ++i) d.W1[i] = discret(model.W1[i], opt.tau);
  for (std::size_t i = 0; i < d.W2.size(); ++i) d.W2[i] = discret(model.W2[i], opt.tau);
  d.W1_half.resize(model.W1.size());
  d.W2_half.resize(model.W2.size());
  for (std::size_t i = 0; i < d.W1.size(); ++i) {
    d.W1_half[i] = discret(model.W1[i], opt.tau / 2.0);
  }
  for (std::size_t i = 0; i < d.W2.size(); ++i) {
    d.W2_half[i] = discret(model.W2[i], opt.tau / 2.0);
  }

  const Calibration cal = calibrate(d, d.W1, d.W2, calibration, opt.T, opt.seed);
  std::tie(d.bounds1, d.bounds2) = compute_bounds(d, d.W1, d.W2, cal);
  const auto E1 = doubled(d.W1_half), E2 = doubled(d.W2_half);
  const Calibration half = calibrate(d, E1, E2, calibration, opt.T, opt.seed);
  std::tie(d.half_bounds1, d.half_bounds2) = compute_bounds(d, E1, E2, half);
  const std::int64_t a = d.alpha();
  const std::uint64_t need = choose_message_space(a);
  if (opt.p == 0) {
    d.p = need;
  } else if (static_cast<std::int64_t>(opt.p / 2) <= a) {
    std::ostringstream os;
    os << "message-space error: alpha = " << a << " does not fit p = " << opt.p
       << " at tau = " << opt.tau << "; smallest admissible p is " << need;
    throw RangeError(os.str());
  } else {
    d.p = opt.p;
  }
  d.validate();
  return d;
}

AuditResult audit_error_bound(const SnnModel& model, const DiSnnModel& di,
                              const Dataset& data, std::size_t T,
                              std::uint64_t seed) {
  if (model.n != di.n || model.k != di.k || model.m != di.m) {
    throw ParameterError("audit: model shapes differ");
  }
  AuditResult r;
  DiStepTrace tr;
  auto check_layer = [&](const std::vector<double>& W, const std::vector<std::int64_t>& Wh,
                         std::size_t rows, std::size_t cols, const std::uint8_t* s) {
    const std::size_t count = std::count(s, s + cols, std::uint8_t{1});
    const double bound = error_bound(count);
    for (std::size_t i = 0; i < rows; ++i) {
      std::int64_t ih = 0;
      double ir = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!s[j]) continue;
        ih += Wh[i * cols + j];
        ir += W[i * cols + j];
      }
      const double err = std::fabs(static_cast<double>(ih) - di.tau * ir);
      ++r.checks;
      // Allow for rounding in the floating-point sum of tau * w.
      if (err > bound + 1e-9 * (1.0 + bound)) ++r.violations;
      r.max_error = std::max(r.max_error, err);
      if (bound > 0.0) r.max_ratio = std::max(r.max_ratio, err / bound);
    }
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    Prng rng = image_stream(seed, i);
    const SpikeTrain in = poisson_encode_bytes(data.image(i), di.n, T, rng);
    DiState st = di_initial_state(di);
    for (std::size_t t = 0; t < T; ++t) {
      check_layer(model.W1, di.W1, di.k, di.n, in.step(t));
      di_timestep(di, di.W1, di.W2, in.step(t), st, tr);
      check_layer(model.W2, di.W2, di.m, di.k, tr.S1.data());
    }
  }
  return r;
}

}  // namespace disnn
