#include "pnclab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pnclab/errors.hpp"

namespace pnclab {

namespace {

constexpr double kLlrClamp = 1e4;

int gray_to_binary(int g) {
    int b = 0;
    for (; g; g >>= 1) b ^= g;
    return b;
}

// Descending odd levels (+3, +1, -1, -3, ...) indexed by the Gray-decoded
// axis bits, scaled to unit per-axis energy by the caller.
double axis_level(int axis_bits, int bits_per_axis) {
    const int n_levels = 1 << bits_per_axis;
    const int index = gray_to_binary(axis_bits);
    return static_cast<double>(n_levels - 1 - 2 * index);
}

}  // namespace

QamConstellation QamConstellation::make(int k_bits) {
    if (k_bits != 1 && k_bits != 2 && k_bits != 4) {
        throw ConfigError("QAM constellation supports k_bits of 1, 2 or 4");
    }
    QamConstellation c;
    c.k_bits = k_bits;
    const int n_points = 1 << k_bits;
    c.points.resize(n_points);

    if (k_bits == 1) {
        c.points[0] = {1.0, 0.0};
        c.points[1] = {-1.0, 0.0};
        return c;
    }

    const int bits_per_axis = k_bits / 2;
    const int n_levels = 1 << bits_per_axis;
    // Mean squared level of the odd-level grid is (n^2 - 1) / 3 per axis.
    const double axis_energy = (static_cast<double>(n_levels) * n_levels - 1.0) / 3.0;
    const double norm = 1.0 / std::sqrt(2.0 * axis_energy);
    for (int label = 0; label < n_points; ++label) {
        const int i_bits = label >> bits_per_axis;
        const int q_bits = label & (n_levels - 1);
        c.points[label] = {axis_level(i_bits, bits_per_axis) * norm,
                           axis_level(q_bits, bits_per_axis) * norm};
    }
    return c;
}

std::array<double, 2> qam_modulate(const std::vector<int>& bits,
                                   const QamConstellation& constellation) {
    if (static_cast<int>(bits.size()) != constellation.k_bits) {
        throw InputError("bit count does not match the constellation order");
    }
    int label = 0;
    for (int b : bits) {
        if (b != 0 && b != 1) throw InputError("bits must be 0 or 1");
        label = (label << 1) | b;
    }
    return constellation.point_for_label(label);
}

Matrix qam_modulate_bits(const Matrix& bits, const QamConstellation& constellation) {
    if (bits.cols != constellation.k_bits) {
        throw InputError("bit width does not match the constellation order");
    }
    Matrix symbols(bits.rows, 2);
    std::vector<int> row(constellation.k_bits);
    for (int r = 0; r < bits.rows; ++r) {
        for (int c = 0; c < bits.cols; ++c) {
            const double b = bits.at(r, c);
            if (b != 0.0 && b != 1.0) throw InputError("bits must be 0 or 1");
            row[c] = static_cast<int>(b);
        }
        const auto p = qam_modulate(row, constellation);
        symbols.at(r, 0) = p[0];
        symbols.at(r, 1) = p[1];
    }
    return symbols;
}

double af_gain(const ComplexCoef& h_a, const ComplexCoef& h_b, double sigma2_relay) {
    return 1.0 / std::sqrt(h_a.abs2() + h_b.abs2() + sigma2_relay);
}

std::vector<double> af_bitwise_llr(const std::array<double, 2>& y,
                                   const std::array<double, 2>& own_symbol,
                                   const AfLink& link, Terminal me,
                                   const QamConstellation& constellation) {
    const ComplexCoef h_own = me == Terminal::A ? link.h_a : link.h_b;
    const ComplexCoef h_peer = me == Terminal::A ? link.h_b : link.h_a;

    // y = h_own beta (h_own x_own + h_peer x_peer + z_r) + z_t; the own-signal
    // term is known and removed, leaving h_eff x_peer plus Gaussian noise of
    // total variance |h_own beta|^2 sigma_r^2 + sigma_t^2.
    const ComplexCoef relay_to_me{link.beta * h_own.re, link.beta * h_own.im};
    const ComplexCoef self_gain = relay_to_me * h_own;
    const ComplexCoef h_eff = relay_to_me * h_peer;
    const double y_tilde_i =
        y[0] - (self_gain.re * own_symbol[0] - self_gain.im * own_symbol[1]);
    const double y_tilde_q =
        y[1] - (self_gain.re * own_symbol[1] + self_gain.im * own_symbol[0]);
    const double sigma2_eff =
        relay_to_me.abs2() * link.sigma2_relay + link.sigma2_terminal;

    const int k = constellation.k_bits;
    const int n_points = 1 << k;
    std::vector<double> metric(n_points);
    for (int label = 0; label < n_points; ++label) {
        const auto& p = constellation.point_for_label(label);
        const double si = h_eff.re * p[0] - h_eff.im * p[1];
        const double sq = h_eff.re * p[1] + h_eff.im * p[0];
        const double di = y_tilde_i - si;
        const double dq = y_tilde_q - sq;
        metric[label] = -(di * di + dq * dq) / sigma2_eff;
    }

    auto log_sum_exp = [&](int bit_index, int bit_value) {
        double best = -std::numeric_limits<double>::infinity();
        for (int label = 0; label < n_points; ++label) {
            if (((label >> (k - 1 - bit_index)) & 1) == bit_value) {
                best = std::max(best, metric[label]);
            }
        }
        double acc = 0.0;
        for (int label = 0; label < n_points; ++label) {
            if (((label >> (k - 1 - bit_index)) & 1) == bit_value) {
                acc += std::exp(metric[label] - best);
            }
        }
        return best + std::log(acc);
    };

    std::vector<double> llrs(k);
    for (int i = 0; i < k; ++i) {
        const double llr = log_sum_exp(i, 0) - log_sum_exp(i, 1);
        llrs[i] = std::clamp(llr, -kLlrClamp, kLlrClamp);
    }
    return llrs;
}

AfRatePoint af_sum_rate(const QamConstellation& constellation, ChannelKind channel,
                        double snr_db, long n_symbols, int block_size, Rng& rng) {
    if (n_symbols < 1 || block_size < 1) {
        throw ConfigError("af_sum_rate needs positive symbol and block counts");
    }
    const int k = constellation.k_bits;
    const double sigma2 = snr_db_to_sigma2(snr_db);
    const NoiseSpec noise{sigma2};

    double loss_sum = 0.0;
    long done = 0;
    while (done < n_symbols) {
        const int rows = static_cast<int>(std::min<long>(block_size, n_symbols - done));
        AfLink link;
        link.sigma2_relay = sigma2;
        link.sigma2_terminal = sigma2;
        if (channel == ChannelKind::BlockRayleigh) {
            sample_rayleigh_pair(rng, link.h_a, link.h_b);
        } else {
            link.h_a = {1.0, 0.0};
            link.h_b = {1.0, 0.0};
        }
        link.beta = af_gain(link.h_a, link.h_b, sigma2);

        Matrix bits_a = random_bits(rows, k, rng);
        Matrix bits_b = random_bits(rows, k, rng);
        const Matrix x_a = qam_modulate_bits(bits_a, constellation);
        const Matrix x_b = qam_modulate_bits(bits_b, constellation);
        const Matrix z_r = sample_awgn(noise, rows, rng);
        const Matrix z_a = sample_awgn(noise, rows, rng);
        const Matrix z_b = sample_awgn(noise, rows, rng);

        const Matrix y_r = apply_ma(x_a, x_b, link.h_a, link.h_b, z_r);
        const Matrix x_r = scale(y_r, link.beta);
        const Matrix y_a = apply_bc(x_r, link.h_a, z_a);
        const Matrix y_b = apply_bc(x_r, link.h_b, z_b);

        Matrix llrs_at_a(rows, k), llrs_at_b(rows, k);
        for (int r = 0; r < rows; ++r) {
            const auto la = af_bitwise_llr({y_a.at(r, 0), y_a.at(r, 1)},
                                           {x_a.at(r, 0), x_a.at(r, 1)}, link,
                                           Terminal::A, constellation);
            const auto lb = af_bitwise_llr({y_b.at(r, 0), y_b.at(r, 1)},
                                           {x_b.at(r, 0), x_b.at(r, 1)}, link,
                                           Terminal::B, constellation);
            for (int c = 0; c < k; ++c) {
                llrs_at_a.at(r, c) = la[c];
                llrs_at_b.at(r, c) = lb[c];
            }
        }
        // A decodes B's bits and vice versa.
        const double block_loss =
            0.5 * (bce_loss(llrs_at_a, bits_b) + bce_loss(llrs_at_b, bits_a));
        loss_sum += block_loss * rows;
        done += rows;
    }

    AfRatePoint out;
    out.mean_loss = loss_sum / static_cast<double>(n_symbols);
    out.sum_rate = std::clamp(2.0 * k * (1.0 - out.mean_loss), 0.0, 2.0 * k);
    return out;
}

double dnf_bpsk_map(double y_r) { return std::fabs(y_r) > 1.0 ? 1.0 : -1.0; }

}  // namespace pnclab
