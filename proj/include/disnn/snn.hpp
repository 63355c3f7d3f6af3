#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "disnn/mnist.hpp"
#include "disnn/random.hpp"

namespace disnn {

enum class NeuronKind { kIF, kLIF };

struct NeuronModelConfig {
  NeuronKind kind = NeuronKind::kIF;
  double omega = 2.0;  // LIF membrane time constant
  double v_threshold = 1.0;
  double v_reset = 0.0;

  void validate() const;
};

// Binary spikes, T rows of `dim` entries.
struct SpikeTrain {
  std::size_t T = 0;
  std::size_t dim = 0;
  std::vector<std::uint8_t> bits;

  std::uint8_t at(std::size_t t, std::size_t i) const { return bits[t * dim + i]; }
  const std::uint8_t* step(std::size_t t) const { return bits.data() + t * dim; }
};

// Two fully connected spiking layers without bias. Weight matrices are
// row-major with one row per post-synaptic neuron: W1 is k x n, W2 is m x k.
struct SnnModel {
  std::size_t n = 784;
  std::size_t k = 30;
  std::size_t m = 10;
  std::vector<double> W1;
  std::vector<double> W2;
  NeuronModelConfig neuron;

  void validate() const;
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation.
  static SnnModel initialise(std::size_t n, std::size_t k, std::size_t m,
                             const NeuronModelConfig& cfg, Prng& rng);

  std::string to_json() const;
  static SnnModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static SnnModel load(const std::string& path);
};

struct LayerState {
  std::vector<double> V;
  std::vector<double> H;
};

// Pre-reset potential H = V + f(V, I).
std::vector<double> charge(const std::vector<double>& V,
                           const std::vector<double>& I,
                           const NeuronModelConfig& cfg);
// Spike where H - V_threshold >= 0.
std::vector<std::uint8_t> fire(const std::vector<double>& H,
                               const NeuronModelConfig& cfg);
// Hard reset with the lower clamp at V_reset.
std::vector<double> reset(const std::vector<double>& H,
                          const NeuronModelConfig& cfg);

// Per-step Bernoulli encoding: spike when x > M_t with M_t ~ U[0, 1).
SpikeTrain poisson_encode(const std::vector<double>& image, std::size_t T,
                          Prng& rng);
// Byte-image variant: spike when v > floor(255 M_t). Consumes the same
// random draws as poisson_encode and agrees with it on v / 255 up to
// floating-point ties.
SpikeTrain poisson_encode_bytes(const std::uint8_t* image, std::size_t dim,
                                std::size_t T, Prng& rng);
// The integer thresholds floor(255 M_t) behind poisson_encode_bytes.
std::vector<std::uint8_t> poisson_thresholds(std::size_t dim, std::size_t T,
                                             Prng& rng);
// Stream used to encode image `index` under `seed`.
Prng image_stream(std::uint64_t seed, std::uint64_t index);

struct NetworkState {
  LayerState hidden;
  LayerState out;
};

NetworkState initial_state(const SnnModel& model);

struct StepOutput {
  std::vector<std::uint8_t> hidden_spikes;
  std::vector<std::uint8_t> out_spikes;
};

StepOutput forward_timestep(const SnnModel& model, const std::uint8_t* spikes_in,
                            NetworkState& state);

struct Prediction {
  int label = 0;
  std::vector<double> scores;
};

// Index of the first maximum.
int argmax(const std::vector<double>& v);

Prediction predict(const SnnModel& model, const SpikeTrain& input);
Prediction predict(const SnnModel& model, const std::uint8_t* image,
                   std::size_t T, Prng& rng);
// Accuracy over a dataset, one encoding stream per image.
double evaluate_accuracy(const SnnModel& model, const Dataset& data,
                         std::size_t T, std::uint64_t seed,
                         std::vector<int>* labels = nullptr);

enum class SurrogateKind { kF1, kF2, kF3, kF4, kAtan };
SurrogateKind parse_surrogate(const std::string& name);

// Surrogate derivative of the spike function, evaluated at V.
double surrogate_grad(SurrogateKind kind, double a, double V, double v_th);

struct TrainConfig {
  std::size_t T = 10;
  std::size_t epochs = 10;
  std::size_t batch = 64;
  double lr = 0.2;
  double momentum = 0.9;
  SurrogateKind surrogate = SurrogateKind::kAtan;
  double width = 2.0;
  std::uint64_t seed = 0;
  std::size_t limit = 0;  // use only the first `limit` images when nonzero
  // Called after each epoch with (epoch, mean loss).
  std::function<void(std::size_t, double)> on_epoch;
};

// Rate-coded MSE between mean output spikes and the one-hot label.
double rate_mse(const std::vector<double>& rates, int label);

// Surrogate-gradient training through time. Throws TrainingError when the
// loss becomes non-finite.
SnnModel train(SnnModel model, const Dataset& data, const TrainConfig& cfg);

}  // namespace disnn
