#pragma once

#include "pnclab/matrix.hpp"
#include "pnclab/rng.hpp"

namespace pnclab {

// Complex channel gain acting on 2-column (in-phase, quadrature) symbol
// batches.
struct ComplexCoef {
    double re = 1.0;
    double im = 0.0;

    double abs2() const { return re * re + im * im; }
    ComplexCoef conj() const { return {re, -im}; }
    ComplexCoef inverse() const;
    ComplexCoef operator*(const ComplexCoef& o) const {
        return {re * o.re - im * o.im, re * o.im + im * o.re};
    }
};

// Total complex noise variance; each real dimension carries sigma2 / 2.
struct NoiseSpec {
    double sigma2 = 1.0;
};

// Average SNR is E[|H_A|^2 + |H_B|^2] / (2 sigma^2); solving for sigma^2
// with the scenario's average channel power and unit signal power.
double snr_db_to_sigma2(double snr_db, double avg_channel_power = 1.0,
                        double signal_power = 1.0);

// count x 2 matrix of zero-mean Gaussian noise, per-symbol power sigma2.
Matrix sample_awgn(const NoiseSpec& spec, int count, Rng& rng);

// One block-fading draw: each gain is circular Gaussian with E|H|^2 = 1,
// links independent.
void sample_rayleigh_pair(Rng& rng, ComplexCoef& h_a, ComplexCoef& h_b);

// Rowwise complex product h * x on (I, Q) pairs. Linear in x; the matching
// gradient transport multiplies the upstream gradient by conj(h).
Matrix complex_mul(const ComplexCoef& h, const Matrix& x);

// Multiple-access hop: y_r = h_a x_a + h_b x_b + z_r.
Matrix apply_ma(const Matrix& x_a, const Matrix& x_b, const ComplexCoef& h_a,
                const ComplexCoef& h_b, const Matrix& z_r);

// Broadcast hop: y = h x_r + z. The same per-link gain serves both hops
// (reciprocal channel).
Matrix apply_bc(const Matrix& x_r, const ComplexCoef& h, const Matrix& z);

}  // namespace pnclab
