#include "pnclab/channel.hpp"

#include <cmath>

#include "pnclab/errors.hpp"

namespace pnclab {

ComplexCoef ComplexCoef::inverse() const {
    const double a2 = abs2();
    if (a2 < 1e-12) {
        throw DegenerateChannelError("|H|^2 below inversion floor");
    }
    return {re / a2, -im / a2};
}

double snr_db_to_sigma2(double snr_db, double avg_channel_power, double signal_power) {
    if (signal_power <= 0.0 || avg_channel_power <= 0.0) {
        throw ConfigError("SNR conversion needs positive powers");
    }
    return avg_channel_power * signal_power / std::pow(10.0, snr_db / 10.0);
}

Matrix sample_awgn(const NoiseSpec& spec, int count, Rng& rng) {
    if (spec.sigma2 <= 0.0) throw ConfigError("noise variance must be positive");
    if (count < 1) throw ConfigError("noise sample count must be >= 1");
    const double per_dim = std::sqrt(spec.sigma2 / 2.0);
    Matrix z(count, 2);
    for (double& v : z.data) v = per_dim * rng.normal();
    return z;
}

void sample_rayleigh_pair(Rng& rng, ComplexCoef& h_a, ComplexCoef& h_b) {
    const double s = std::sqrt(0.5);  // E|H|^2 = 1 per link
    h_a = {s * rng.normal(), s * rng.normal()};
    h_b = {s * rng.normal(), s * rng.normal()};
}

Matrix complex_mul(const ComplexCoef& h, const Matrix& x) {
    if (x.cols != 2) throw ConfigError("complex_mul expects 2-column symbols");
    Matrix y(x.rows, 2);
    for (int r = 0; r < x.rows; ++r) {
        const double i = x.at(r, 0);
        const double q = x.at(r, 1);
        y.at(r, 0) = h.re * i - h.im * q;
        y.at(r, 1) = h.re * q + h.im * i;
    }
    return y;
}

Matrix apply_ma(const Matrix& x_a, const Matrix& x_b, const ComplexCoef& h_a,
                const ComplexCoef& h_b, const Matrix& z_r) {
    if (!x_a.same_shape(x_b) || !x_a.same_shape(z_r)) {
        throw ConfigError("apply_ma: shape mismatch");
    }
    Matrix y = complex_mul(h_a, x_a);
    add_in_place(y, complex_mul(h_b, x_b));
    add_in_place(y, z_r);
    return y;
}

Matrix apply_bc(const Matrix& x_r, const ComplexCoef& h, const Matrix& z) {
    if (!x_r.same_shape(z)) throw ConfigError("apply_bc: shape mismatch");
    Matrix y = complex_mul(h, x_r);
    add_in_place(y, z);
    return y;
}

}  // namespace pnclab
