#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pnclab/channel.hpp"
#include "pnclab/errors.hpp"

using namespace pnclab;

TEST_CASE("snr to sigma2 conversion") {
    CHECK(snr_db_to_sigma2(0.0) == doctest::Approx(1.0));
    CHECK(snr_db_to_sigma2(10.0) == doctest::Approx(0.1));
    CHECK(snr_db_to_sigma2(-5.0) == doctest::Approx(std::pow(10.0, 0.5)).epsilon(1e-9));
}

TEST_CASE("awgn sample statistics") {
    Rng rng(12345);
    const int n = 1'000'000;

    SUBCASE("per-symbol power matches sigma2 within 1 percent") {
        const Matrix z = sample_awgn({0.5}, n, rng);
        double power = 0.0;
        for (int r = 0; r < n; ++r) {
            power += z.at(r, 0) * z.at(r, 0) + z.at(r, 1) * z.at(r, 1);
        }
        CHECK(power / n == doctest::Approx(0.5).epsilon(0.01));
    }

    SUBCASE("per-dimension variance is sigma2/2") {
        const Matrix z = sample_awgn({2.0}, n, rng);
        double var = 0.0;
        for (double v : z.data) var += v * v;
        var /= z.data.size();
        CHECK(var == doctest::Approx(1.0).epsilon(0.01));
    }

    SUBCASE("fixed seed reproduces the stream") {
        Rng r1(777), r2(777);
        const Matrix z1 = sample_awgn({1.0}, 64, r1);
        const Matrix z2 = sample_awgn({1.0}, 64, r2);
        CHECK(z1.data == z2.data);
    }
}

TEST_CASE("rayleigh pair statistics") {
    Rng rng(2024);
    const int n = 1'000'000;
    double pa = 0.0, pb = 0.0;
    std::vector<double> ratio_db(n);
    for (int i = 0; i < n; ++i) {
        ComplexCoef h_a, h_b;
        sample_rayleigh_pair(rng, h_a, h_b);
        pa += h_a.abs2();
        pb += h_b.abs2();
        ratio_db[i] = 10.0 * std::log10(h_b.abs2() / h_a.abs2());
    }
    CHECK(pa / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(pb / n == doctest::Approx(1.0).epsilon(0.01));

    std::nth_element(ratio_db.begin(), ratio_db.begin() + n / 2, ratio_db.end());
    CHECK(std::fabs(ratio_db[n / 2]) < 0.05);  // 0 dB median power ratio

    Rng r1(5), r2(5);
    ComplexCoef a1, b1, a2, b2;
    sample_rayleigh_pair(r1, a1, b1);
    sample_rayleigh_pair(r2, a2, b2);
    CHECK(a1.re == a2.re);
    CHECK(b1.im == b2.im);
}

TEST_CASE("complex_mul on rows") {
    Matrix x(1, 2);
    x.at(0, 0) = 1.0;
    x.at(0, 1) = 0.0;

    const Matrix unit = complex_mul({1.0, 0.0}, x);
    CHECK(unit.at(0, 0) == 1.0);
    CHECK(unit.at(0, 1) == 0.0);

    const Matrix rot = complex_mul({0.0, 1.0}, x);
    CHECK(rot.at(0, 0) == 0.0);
    CHECK(rot.at(0, 1) == 1.0);

    Matrix xy(1, 2);
    xy.at(0, 0) = 1.0;
    xy.at(0, 1) = 1.0;
    const Matrix p = complex_mul({2.0, -1.0}, xy);  // (2 - j)(1 + j) = 3 + j
    CHECK(p.at(0, 0) == doctest::Approx(3.0));
    CHECK(p.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("multiple-access superpositions for unit channels") {
    Matrix plus(1, 2), minus(1, 2), zero(1, 2);
    plus.at(0, 0) = 1.0;
    minus.at(0, 0) = -1.0;
    const ComplexCoef one{1.0, 0.0};

    const Matrix ambiguous = apply_ma(plus, minus, one, one, zero);
    CHECK(ambiguous.at(0, 0) == 0.0);
    CHECK(ambiguous.at(0, 1) == 0.0);

    const Matrix aligned = apply_ma(plus, plus, one, one, zero);
    CHECK(aligned.at(0, 0) == 2.0);

    Matrix z(1, 2);
    z.at(0, 0) = 0.3;
    z.at(0, 1) = -0.2;
    const Matrix noise_only = apply_ma(zero, zero, one, one, z);
    CHECK(noise_only.at(0, 0) == 0.3);
    CHECK(noise_only.at(0, 1) == -0.2);
}

TEST_CASE("broadcast hop basics") {
    Matrix x(1, 2), zero(1, 2);
    x.at(0, 0) = 1.0;
    CHECK(apply_bc(x, {1.0, 0.0}, zero).at(0, 0) == 1.0);
    CHECK(apply_bc(x, {0.0, 1.0}, zero).at(0, 1) == 1.0);

    Matrix z(1, 2);
    z.at(0, 1) = 0.4;
    const Matrix y = apply_bc(Matrix(1, 2), {0.7, 0.2}, z);
    CHECK(y.at(0, 0) == 0.0);
    CHECK(y.at(0, 1) == 0.4);
}

TEST_CASE("channel hops are exactly linear in the symbols") {
    Rng rng(31);
    const ComplexCoef h_a{0.3, -1.1}, h_b{-0.8, 0.5};
    Matrix x1(4, 2), x2(4, 2), zero(4, 2);
    for (double& v : x1.data) v = rng.uniform(-2.0, 2.0);
    for (double& v : x2.data) v = rng.uniform(-2.0, 2.0);

    const Matrix sum = apply_ma(add(x1, x2), scale(x1, 2.0), h_a, h_b, zero);
    Matrix parts = apply_ma(x1, x1, h_a, h_b, zero);
    add_in_place(parts, apply_ma(x2, x1, h_a, h_b, zero));
    for (size_t i = 0; i < sum.data.size(); ++i) {
        CHECK(sum.data[i] == doctest::Approx(parts.data[i]).epsilon(1e-15));
    }
}

TEST_CASE("conj transport through complex_mul matches finite differences") {
    const ComplexCoef h{0.6, -1.3};
    Matrix x(3, 2);
    Matrix weights(3, 2);
    Rng rng(67);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : weights.data) v = rng.uniform(-1.0, 1.0);

    auto loss = [&](const Matrix& in) { return dot(weights, complex_mul(h, in)); };
    const Matrix analytic = complex_mul(h.conj(), weights);

    const double step = 1e-6;
    for (size_t i = 0; i < x.data.size(); ++i) {
        Matrix probe = x;
        probe.data[i] += step;
        const double up = loss(probe);
        probe.data[i] -= 2.0 * step;
        const double down = loss(probe);
        const double fd = (up - down) / (2.0 * step);
        CHECK(fd == doctest::Approx(analytic.data[i]).epsilon(1e-6));
    }
}

TEST_CASE("degenerate gains refuse inversion") {
    const ComplexCoef tiny{1e-8, 0.0};
    CHECK_THROWS_AS(tiny.inverse(), DegenerateChannelError);
    const ComplexCoef ok{3.0, -4.0};
    const ComplexCoef inv = ok.inverse();
    CHECK(inv.re == doctest::Approx(3.0 / 25.0));
    CHECK(inv.im == doctest::Approx(4.0 / 25.0));
}
