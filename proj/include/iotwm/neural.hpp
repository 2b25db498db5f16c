#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "iotwm/detector.hpp"

namespace iotwm {

// One training sample: a timestep-major input sequence and its targets.
// y has either one row per timestep (sequence-to-sequence regression) or a
// single row that supervises the final timestep only (value regression).
struct Sequence {
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> y;
};

struct TrainConfig {
    double lr = 0.05;
    int epochs = 200;
    double clip_norm = 5.0;  // global gradient-norm clip; 0 disables
};

struct LossPoint {
    int epoch = 0;  // 0 records the pre-training loss
    double mse = 0.0;
};

// Stacked LSTM with a linear readout, trained by full backpropagation
// through time under mean-squared error. All parameters live in one flat
// vector so plain gradient descent and finite-difference checks stay
// trivial. Weights initialize uniform in [-1/sqrt(H), +1/sqrt(H)] per layer.
class Network {
public:
    Network(int input_dim, std::vector<int> hidden_dims, int output_dim, std::uint64_t seed);

    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }
    const std::vector<int>& hidden_dims() const { return hidden_dims_; }

    // Full-sequence inference: one output row per timestep.
    std::vector<std::vector<double>> forward(const std::vector<std::vector<double>>& xs) const;

    // Incremental inference. Lets callers evaluate many single-step
    // continuations of a shared prefix without recomputing it.
    struct State {
        std::vector<std::vector<double>> h, c;  // per layer
    };
    State initial_state() const;
    void advance(State& st, const std::vector<double>& x) const;
    std::vector<double> readout(const State& st) const;

    // Mean MSE over the batch; grad() also writes d(loss)/d(params).
    double loss(const std::vector<Sequence>& batch) const;
    double grad(const std::vector<Sequence>& batch, std::vector<double>& grad_out) const;
    void apply_update(const std::vector<double>& grad, double lr, double clip_norm);

    // Plain gradient descent over the whole dataset. Returns the loss curve
    // (entry 0 is the initial loss). Throws if the loss ever leaves the
    // realm of finite numbers.
    std::vector<LossPoint> train(const std::vector<Sequence>& data, const TrainConfig& cfg);

    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }

    std::string to_json() const;
    static Network from_json(const std::string& text);
    void save(const std::string& path) const;
    static Network load(const std::string& path);

private:
    struct Cache;  // per-sequence forward activations for BPTT

    void forward_cached(const std::vector<std::vector<double>>& xs, Cache& cache) const;
    void check_input(const std::vector<std::vector<double>>& xs) const;

    // Parameter block offsets inside theta_ for layer l.
    std::size_t off_W(int l) const { return offW_[static_cast<std::size_t>(l)]; }
    std::size_t off_U(int l) const { return offU_[static_cast<std::size_t>(l)]; }
    std::size_t off_b(int l) const { return offb_[static_cast<std::size_t>(l)]; }
    int in_dim(int l) const;  // layer input width

    int input_dim_;
    std::vector<int> hidden_dims_;
    int output_dim_;
    std::vector<double> theta_;
    std::vector<std::size_t> offW_, offU_, offb_;
    std::size_t offWy_ = 0, offby_ = 0;
};

// Expected-stream hook for the detector: the network reads the received
// window as per-timestep [sample, chip] pairs and emits one score per
// timestep; each bit of the expected stream is the sign of the mean score
// over that bit's segment.
HookExpected make_network_expected(std::shared_ptr<const Network> net, int ns);

}  // namespace iotwm
