#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "disnn/mnist.hpp"
#include "disnn/random.hpp"
#include "disnn/snn.hpp"

namespace disnn {

// Extremes of the pre-reset potential H of one layer.
struct LayerBounds {
  // Bound from the largest weight magnitude and the largest observed input
  // spike count: alpha = V_th + max|w| * max_t sum_j S_j[t].
  std::int64_t alpha = 0;
  std::int64_t beta = 0;
  // Same bound with every input spiking (sum S = fan-in).
  std::int64_t alpha_worst = 0;
  // Observed extremes of H over the calibration run.
  std::int64_t observed_max = 0;
  std::int64_t observed_min = 0;
  // max(observed_max, V_th - observed_min): the tightest alpha whose mirrored
  // beta = -alpha + V_th still covers the observed range.
  std::int64_t alpha_empirical = 0;
  std::int64_t max_spike_count = 0;
};

// Which bound drives message-space selection.
enum class BoundSource { kEmpirical, kAnalytic };

// Integer-weight network over Z_p.
struct DiSnnModel {
  std::size_t n = 784;
  std::size_t k = 30;
  std::size_t m = 10;
  std::vector<std::int64_t> W1;
  std::vector<std::int64_t> W2;
  // Weights discretised at tau / 2 for inputs carried as 2 * S.
  std::vector<std::int64_t> W1_half;
  std::vector<std::int64_t> W2_half;
  double tau = 10.0;
  std::uint64_t p = 1024;
  std::int64_t v_threshold = 10;
  std::int64_t v_reset = 0;
  NeuronModelConfig neuron;  // the source model's neuron configuration
  LayerBounds bounds1;
  LayerBounds bounds2;
  // Bounds of the network with effective weights 2 * W_half.
  LayerBounds half_bounds1;
  LayerBounds half_bounds2;
  BoundSource bound_source = BoundSource::kEmpirical;

  // alpha used for admissibility: the largest layer bound of the chosen
  // source over both weight sets.
  std::int64_t alpha() const;
  std::int64_t beta() const { return -alpha() + v_threshold; }
  void validate() const;

  std::string to_json() const;
  static DiSnnModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static DiSnnModel load(const std::string& path);
  // Fingerprint of the integer model, for file lineage.
  std::string digest_hex() const;
};

// round(x * tau), half away from zero. Throws DomainError when x is not
// finite or tau is not positive.
std::int64_t discret(double x, double tau);

// Elementwise 2 * w.
std::vector<std::int64_t> doubled(const std::vector<std::int64_t>& w);

// Worst-case |I_hat - tau I| for a given number of input spikes.
double error_bound(std::size_t spike_count);

struct McResult {
  double sum_abs = 0.0;  // mean of sum_j |xi_j|
  double abs_sum = 0.0;  // mean of |sum_j xi_j|
};
// Monte-Carlo estimate of the discretisation error with residuals xi_j drawn
// from U[-1/2, 1/2] and a Poisson(lambda) number of spikes.
McResult expected_error_mc(double lambda, std::size_t trials, Prng& rng);

// Smallest power of two p >= min_p with p/2 > alpha.
std::uint64_t choose_message_space(std::int64_t alpha, std::uint64_t min_p = 4);

// Integer state of a discretised network.
struct DiState {
  std::vector<double> V1, V2;
};

struct DiStepTrace {
  std::vector<double> H1, H2;
  std::vector<std::uint8_t> S1, S2;
};

// One timestep of a discretised network with explicit weights.
void di_timestep(const DiSnnModel& model, const std::vector<std::int64_t>& W1,
                 const std::vector<std::int64_t>& W2, const std::uint8_t* s_in,
                 DiState& st, DiStepTrace& out);
DiState di_initial_state(const DiSnnModel& model);

struct DiPrediction {
  int label = 0;
  std::vector<double> scores;
  std::vector<std::uint8_t> hidden_train;  // T x k
  std::vector<std::uint8_t> out_train;     // T x m
};

DiPrediction di_predict(const DiSnnModel& model, const SpikeTrain& input);
DiPrediction di_predict(const DiSnnModel& model, const std::vector<std::int64_t>& W1,
                        const std::vector<std::int64_t>& W2,
                        const SpikeTrain& input);
double di_accuracy(const DiSnnModel& model, const Dataset& data, std::size_t T,
                   std::uint64_t seed, std::vector<int>* labels = nullptr);

// Observed extremes of both layers over a calibration set.
struct Calibration {
  std::int64_t h1_max = 0, h1_min = 0, h2_max = 0, h2_min = 0;
  std::int64_t s0_max = 0;  // largest per-step input spike count
  std::int64_t s1_max = 0;  // largest per-step hidden spike count
};

Calibration calibrate(const DiSnnModel& model, const std::vector<std::int64_t>& W1,
                      const std::vector<std::int64_t>& W2, const Dataset& data,
                      std::size_t T, std::uint64_t seed);

// Layer bounds of a weight pair from calibration data.
std::pair<LayerBounds, LayerBounds> compute_bounds(const DiSnnModel& model,
                                                   const std::vector<std::int64_t>& W1,
                                                   const std::vector<std::int64_t>& W2,
                                                   const Calibration& cal);

struct ConvertOptions {
  double tau = 10.0;
  std::uint64_t p = 0;  // 0 selects the smallest admissible size
  std::size_t T = 10;
  std::uint64_t seed = 0;
  BoundSource bound_source = BoundSource::kEmpirical;
};

// Discretises weights and threshold at tau and attaches bounds. Throws
// RangeError naming the smallest admissible p when alpha >= p/2.
DiSnnModel convert(const SnnModel& model, const Dataset& calibration,
                   const ConvertOptions& opt);

// Dual-run audit of |I_hat - tau I| <= (1/2) sum_j S_j at every neuron and
// step, both layers fed the discretised network's own input spikes.
struct AuditResult {
  std::size_t checks = 0;
  std::size_t violations = 0;
  double max_error = 0.0;
  double max_ratio = 0.0;  // largest error / bound with a nonzero bound
};

AuditResult audit_error_bound(const SnnModel& model, const DiSnnModel& di,
                              const Dataset& data, std::size_t T,
                              std::uint64_t seed);

}  // namespace disnn
