#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "pnclab/matrix.hpp"

namespace pnclab {

enum class Activation { Relu, Tanh, Sigmoid, Linear };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
    Matrix weights;            // in_dim x out_dim
    std::vector<double> bias;  // out_dim

    int in_dim() const { return weights.rows; }
    int out_dim() const { return weights.cols; }
};

// Enforces unit average transmit power over a batch. BatchStatistic divides
// by sqrt(mean per-row power) of the current batch; Calibrated applies a
// frozen scale so single-symbol inference is well defined after training.
struct PowerNorm {
    enum class Mode { BatchStatistic, Calibrated };

    Mode mode = Mode::BatchStatistic;
    double calibrated_scale = 1.0;
};

using Layer = std::variant<DenseLayer, Activation, PowerNorm>;

// Forward intermediates retained for one backward pass.
// acts[0] is the input, acts[i + 1] the output of layer i.
struct ForwardTrace {
    std::vector<Matrix> acts;
    bool valid = false;
};

// Dense-layer parameter gradients, indexed like the layer list
// (slots for non-dense layers stay empty).
struct MlpGradients {
    struct DenseGrad {
        Matrix d_weights;
        std::vector<double> d_bias;
        bool present = false;
    };

    std::vector<DenseGrad> dense;

    void accumulate(const MlpGradients& other);
    double max_abs() const;
};

// Fixed-topology feedforward stack of dense / activation / power-norm
// layers with exact reverse-mode gradients. Parameters are only ever
// mutated by adam_step; forward/backward are pure gradient machinery.
class MlpNetwork {
public:
    MlpNetwork() = default;
    explicit MlpNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {}

    // Stateful pair: forward populates the internal trace, backward consumes
    // it. One training run owns the network; no interior sharing.
    const Matrix& forward(const Matrix& input);
    MlpGradients backward(const Matrix& upstream, Matrix* input_grad = nullptr);

    // Re-entrant pair for networks invoked more than once per loss (the
    // terminal modulator and demodulator both answer two directions).
    // Safe to call concurrently on a frozen network.
    Matrix forward(const Matrix& input, ForwardTrace& trace) const;
    MlpGradients backward(const ForwardTrace& trace, const Matrix& upstream,
                          Matrix* input_grad) const;

    // Same pair but stopping before a trailing Sigmoid head, so losses are
    // computed from pre-sigmoid logits.
    Matrix forward_logits(const Matrix& input, ForwardTrace& trace) const;
    MlpGradients backward_logits(const ForwardTrace& trace, const Matrix& upstream,
                                 Matrix* input_grad) const;

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    int input_dim() const;   // -1 if no dense layer pins it down
    int output_dim() const;  // dim after the last dense layer, -1 if none

    size_t parameter_count() const;

    bool has_power_norm() const;
    bool fully_calibrated() const;  // every power-norm frozen

private:
    Matrix run_forward(const Matrix& input, ForwardTrace& trace, size_t n_layers) const;
    MlpGradients run_backward(const ForwardTrace& trace, const Matrix& upstream,
                              Matrix* input_grad, size_t n_layers) const;
    size_t logit_layer_count() const;

    std::vector<Layer> layers_;
    ForwardTrace cache_;
};

// Builds the usual stack: dense/activation alternating through `dims`, the
// given output activation after the last dense layer, and optionally a
// power-norm tail. Weights are Glorot-uniform, biases zero, reproducible
// from the seed.
MlpNetwork init_network(const std::vector<int>& dims, Activation hidden_activation,
                        Activation output_activation, bool power_norm,
                        std::uint64_t seed);

struct AdamState {
    struct Slot {
        Matrix m_weights, v_weights;
        std::vector<double> m_bias, v_bias;
    };

    std::vector<Slot> slots;  // parallel to layer list
    long t = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam_state(const MlpNetwork& net, double learning_rate);
void adam_step(MlpNetwork& net, const MlpGradients& grads, AdamState& state);

// Scalar functional of the network output, with its analytic gradient.
struct ScalarLoss {
    std::function<double(const Matrix&)> value;
    std::function<Matrix(const Matrix&)> grad;
};

// Central finite differences over every parameter and every input entry
// against the analytic gradients. Returns the worst relative error
// (absolute error below 1e-8 magnitude).
double grad_check(const MlpNetwork& net, const Matrix& input, const ScalarLoss& loss,
                  double step = 1e-5);

// Smallest |pre-activation| feeding any ReLU. Finite differences are invalid
// near the kink; callers resample inputs when this margin is < 10 * step.
double relu_kink_margin(const MlpNetwork& net, const Matrix& input);

// Textual weight files, versioned, 17 significant digits; round-trips
// bit-exactly.
void save_weights(const MlpNetwork& net, const std::string& path);
MlpNetwork load_weights(const std::string& path);

}  // namespace pnclab
