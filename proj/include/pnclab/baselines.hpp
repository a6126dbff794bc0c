#pragma once

#include <array>
#include <vector>

#include "pnclab/channel.hpp"
#include "pnclab/matrix.hpp"
#include "pnclab/relay_system.hpp"
#include "pnclab/rng.hpp"

namespace pnclab {

// Square QAM with independent binary-reflected Gray coding per axis and
// unit average energy: the first k/2 label bits pick the in-phase level,
// the rest the quadrature level. k = 1 is BPSK on the in-phase axis.
struct QamConstellation {
    int k_bits = 2;
    std::vector<std::array<double, 2>> points;  // indexed by label value, MSB first

    static QamConstellation make(int k_bits);

    const std::array<double, 2>& point_for_label(int label) const {
        return points[static_cast<size_t>(label)];
    }
};

// Gray-mapped point for one bit row.
std::array<double, 2> qam_modulate(const std::vector<int>& bits,
                                   const QamConstellation& constellation);
// Batch variant on a {0,1} matrix.
Matrix qam_modulate_bits(const Matrix& bits, const QamConstellation& constellation);

// Amplify-and-forward link state: the relay rescales its received signal by
// beta, chosen so the average relay transmit power is 1.
struct AfLink {
    double beta = 1.0;
    double sigma2_relay = 1.0;
    double sigma2_terminal = 1.0;
    ComplexCoef h_a, h_b;
};

// beta = 1 / sqrt(|h_a|^2 + |h_b|^2 + sigma2_relay) for unit-power inputs.
double af_gain(const ComplexCoef& h_a, const ComplexCoef& h_b, double sigma2_relay);

enum class Terminal { A, B };

// Exact bitwise LLRs at one terminal: cancels the known self-interference,
// then log-sum-exps the Gaussian metric over all candidate symbols of the
// other terminal. Clamped to +-1e4.
std::vector<double> af_bitwise_llr(const std::array<double, 2>& y,
                                   const std::array<double, 2>& own_symbol,
                                   const AfLink& link, Terminal me,
                                   const QamConstellation& constellation);

struct AfRatePoint {
    double mean_loss = 1.0;
    double sum_rate = 0.0;
};

// Monte Carlo sum rate of the AF reference: MA hop, linear relay, BC hop,
// exact LLRs both directions, 2K * (1 - loss) clamped to [0, 2K]. Fading
// draws are held for `block_size` symbols.
AfRatePoint af_sum_rate(const QamConstellation& constellation, ChannelKind channel,
                        double snr_db, long n_symbols, int block_size, Rng& rng);

// Denoising map for the noiseless BPSK illustration: the relay sends +1
// when it saw an unambiguous superposition (|y_r| > 1), else -1.
double dnf_bpsk_map(double y_r);

}  // namespace pnclab
