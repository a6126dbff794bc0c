#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pnclab/channel.hpp"
#include "pnclab/matrix.hpp"
#include "pnclab/nn.hpp"

namespace pnclab {

enum class CsiMode { NoCsi, PerfectCsi, IdealRelay };
enum class ChannelKind { Awgn, BlockRayleigh };

const char* csi_mode_name(CsiMode m);
CsiMode csi_mode_from_name(const std::string& name);
const char* channel_kind_name(ChannelKind k);
ChannelKind channel_kind_from_name(const std::string& name);

// Full experiment description. Defaults follow the training protocol:
// mini-batches of 128, a 128 x 1000-bit dataset, 30 epochs, Adam at 1e-3.
struct SystemConfig {
    int k_bits = 2;
    int n_dims = 2;  // in-phase and quadrature; fixed
    std::vector<int> hidden_sizes = {100, 100};
    Activation activation = Activation::Relu;
    CsiMode csi_mode = CsiMode::NoCsi;
    ChannelKind channel_kind = ChannelKind::Awgn;
    double train_snr_db = 0.0;
    int minibatch = 128;
    int num_minibatches = 1000;
    int epochs = 30;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;

    void validate() const;
};

// Feature widths of the relay and demodulator inputs per CSI mode.
int relay_feature_width(CsiMode mode, int k_bits);
int demod_feature_width(CsiMode mode, int k_bits);

// The three jointly trained networks. One modulator and one demodulator
// parameter set serve both terminals.
struct TwoWaySystem {
    MlpNetwork terminal_mod;  // bits -> symbol, power-norm tail
    MlpNetwork relay_mod;     // relay features -> symbol, power-norm tail
    MlpNetwork demod;         // demod features -> per-bit logits, sigmoid head
    SystemConfig config;

    bool calibrated() const;
};

// Fresh Glorot-initialized system for the config (deterministic in the seed).
TwoWaySystem make_system(const SystemConfig& config);

// One mini-batch of source bits with its block-fading draw and noises.
struct Batch {
    Matrix bits_a, bits_b;  // rows x k_bits, entries in {0,1}
    ComplexCoef h_a, h_b;   // one pair for the whole batch
    Matrix z_r, z_a, z_b;   // rows x 2 each
};

// Random bits, channel draw and noises for one batch. Fading draws whose
// gain falls below the inversion floor are resampled when the CSI mode
// needs 1/H features.
Batch sample_batch(const SystemConfig& config, double sigma2, int rows, Rng& rng);

Matrix random_bits(int rows, int k_bits, Rng& rng);

// Network input encoding: bit 0 -> +1, bit 1 -> -1.
Matrix bits_to_levels(const Matrix& bits);

// Side information available to the relay in the ideal benchmark.
struct RelaySideInfo {
    const Matrix* levels_a = nullptr;   // +-1-encoded source bits
    const Matrix* symbols_a = nullptr;
    const Matrix* levels_b = nullptr;
    const Matrix* symbols_b = nullptr;
};

// Relay input per CSI mode:
//   NoCsi      (Y_R)
//   PerfectCsi (Y_R, H_A, H_A Y_R, H_B, H_B Y_R,
//               H_A* Y_R, H_B* Y_R, H_A^-1 Y_R, H_B^-1 Y_R)
//   IdealRelay PerfectCsi ++ (S_A, X_A, S_B, X_B)
// Complex quantities flatten to (re, im) pairs; scalar gains broadcast
// per row.
Matrix relay_features(const Matrix& y_r, const ComplexCoef& h_a,
                      const ComplexCoef& h_b, CsiMode mode,
                      const RelaySideInfo* side = nullptr);

struct RelayFeatureGrads {
    Matrix d_y_r;
    Matrix d_x_a, d_x_b;  // populated only in IdealRelay mode
};
RelayFeatureGrads relay_features_backward(const Matrix& feature_grad,
                                          const ComplexCoef& h_a,
                                          const ComplexCoef& h_b, CsiMode mode,
                                          int k_bits);

// Demodulator input: (own levels, own symbols, received y), plus
// (H, H* y, H^-1 y) when CSI is available.
Matrix demod_features(const Matrix& own_levels, const Matrix& own_symbols,
                      const Matrix& y, const ComplexCoef& h_own, CsiMode mode);

struct DemodFeatureGrads {
    Matrix d_y;
    Matrix d_own_symbols;
};
DemodFeatureGrads demod_features_backward(const Matrix& feature_grad,
                                          const ComplexCoef& h_own, CsiMode mode,
                                          int k_bits);

// Mean over all entries of log2(1 + exp(-(-1)^b L)) for pre-sigmoid logits
// L, evaluated in log1p-exp form (safe for |L| up to 1e4 and beyond).
double bce_loss(const Matrix& logits, const Matrix& bits);
// Gradient of the mean above w.r.t. the logits.
Matrix bce_loss_grad(const Matrix& logits, const Matrix& bits);

// Everything one end-to-end pass produces, kept for the backward pass.
struct SystemTrace {
    ForwardTrace mod_a, mod_b, relay, demod_a, demod_b;
    Matrix levels_a, levels_b;
    Matrix x_a, x_b, y_r, f_r, x_r, y_a, y_b, f_a, f_b;
    Matrix logits_b_at_a;  // terminal A's estimate of S_B
    Matrix logits_a_at_b;
    double loss_at_a = 0.0, loss_at_b = 0.0, loss = 0.0;
    bool valid = false;
};

// Runs X = M(S), Y_R = H_A X_A + H_B X_B + Z_R, X_R = M_R(features),
// Y = H X_R + Z, logits = D(own bits, own symbol, Y), and the combined
// cross entropy over both directions. Thread-safe on a frozen system.
SystemTrace forward_end_to_end(const TwoWaySystem& system, const Batch& batch);

struct SystemGradients {
    MlpGradients terminal_mod, relay_mod, demod;
};

// Chains gradients demodulator -> BC hop -> relay -> MA hop -> modulator.
// The shared modulator and demodulator accumulate both directions'
// contributions, including the side-input paths (own symbols into D, ideal
// side info into the relay).
SystemGradients backward_end_to_end(const TwoWaySystem& system, const Batch& batch,
                                    const SystemTrace& trace);

// Convenience single-step wrappers.
Matrix terminal_modulate(const TwoWaySystem& system, const Matrix& bits);
Matrix relay_modulate(const TwoWaySystem& system, const Matrix& features);

struct TrainResult {
    TwoWaySystem system;
    std::vector<double> loss_history;  // one mean loss per epoch
};

// Full training run: the bit dataset is generated once and fixed across
// epochs; each mini-batch gets a fresh channel draw and fresh symbol-wise
// noise; one Adam step per mini-batch.
TrainResult train(const SystemConfig& config);

// Central finite differences of the end-to-end loss over every parameter
// of all three networks. Returns the worst relative error.
double system_grad_check(const TwoWaySystem& system, const Batch& batch,
                         double step = 1e-5);

// Freezes every power norm to a fixed scale measured on one large batch
// covering all bit patterns (2^(2K) pairs, tiled 1000x), run at the
// training SNR. Deterministic given the system's seed.
void calibrate(TwoWaySystem& system);

// Model directory layout: three weight files plus a config manifest.
void save_system(const TwoWaySystem& system, const std::string& dir);
TwoWaySystem load_system(const std::string& dir);

}  // namespace pnclab
