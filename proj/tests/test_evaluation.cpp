#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "pnclab/errors.hpp"
#include "pnclab/evaluation.hpp"

using namespace pnclab;

namespace {

SystemConfig fast_config() {
    SystemConfig cfg;
    cfg.k_bits = 2;
    cfg.hidden_sizes = {8};
    cfg.activation = Activation::Tanh;
    cfg.minibatch = 32;
    cfg.num_minibatches = 3;
    cfg.epochs = 2;
    cfg.seed = 7;
    return cfg;
}

TwoWaySystem calibrated_system(const SystemConfig& cfg) {
    TwoWaySystem system = make_system(cfg);
    calibrate(system);
    return system;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("perfect llrs reach unit GMI") {
    Matrix bits(4, 2);
    bits.at(0, 0) = 1;
    bits.at(2, 1) = 1;
    bits.at(3, 0) = 1;
    bits.at(3, 1) = 1;
    Matrix llrs(4, 2);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 2; ++c) {
            llrs.at(r, c) = bits.at(r, c) == 0.0 ? 1e4 : -1e4;
        }
    }
    CHECK(gmi_from_llrs(llrs, bits) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(gmi_from_llrs(Matrix(4, 2), bits) == doctest::Approx(0.0));
}

TEST_CASE("estimate_sum_rate enforces calibration and the rate identity") {
    const SystemConfig cfg = fast_config();
    TwoWaySystem uncalibrated = make_system(cfg);
    Rng rng(3);
    CHECK_THROWS_AS(estimate_sum_rate(uncalibrated, 5.0, 100, rng), StateError);

    const TwoWaySystem system = calibrated_system(cfg);
    Rng rng2(4);
    const EvalResult r = estimate_sum_rate(system, 5.0, 2000, rng2);
    const double expected =
        std::clamp(2.0 * cfg.k_bits * (1.0 - r.mean_loss), 0.0, 2.0 * cfg.k_bits);
    CHECK(r.sum_rate == expected);  // exact, same ensemble
    CHECK(r.sum_rate >= 0.0);
    CHECK(r.sum_rate <= 4.0);
}

TEST_CASE("zeroed demodulator head gives zero sum rate") {
    const SystemConfig cfg = fast_config();
    TwoWaySystem system = make_system(cfg);
    for (auto it = system.demod.layers().rbegin(); it != system.demod.layers().rend();
         ++it) {
        if (auto* d = std::get_if<DenseLayer>(&*it)) {
            d->weights = Matrix(d->in_dim(), d->out_dim());
            d->bias.assign(d->bias.size(), 0.0);
            break;
        }
    }
    calibrate(system);
    Rng rng(8);
    const EvalResult r = estimate_sum_rate(system, 0.0, 500, rng);
    CHECK(r.mean_loss == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.sum_rate == doctest::Approx(0.0).epsilon(1e-11));
}

TEST_CASE("terminal constellation enumerates every bit pattern") {
    for (int k : {2, 4}) {
        SystemConfig cfg = fast_config();
        cfg.k_bits = k;
        const TwoWaySystem system = calibrated_system(cfg);
        const ConstellationDump dump = extract_terminal_constellation(system);
        CHECK(dump.points.size() == (1u << k));

        std::set<std::string> labels;
        double power = 0.0;
        for (const auto& p : dump.points) {
            labels.insert(p.label_bits);
            CHECK(p.label_bits.size() == static_cast<size_t>(k));
            power += p.i * p.i + p.q * p.q;
        }
        CHECK(labels.size() == dump.points.size());
        CHECK(power / dump.points.size() == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("relay constellation enumerates every superposition") {
    SystemConfig cfg = fast_config();
    cfg.csi_mode = CsiMode::PerfectCsi;
    const TwoWaySystem system = calibrated_system(cfg);
    const ComplexCoef h_a{0.8, 0.1}, h_b{-0.2, 0.9};
    const ConstellationDump dump = extract_relay_constellation(system, h_a, h_b);
    CHECK(dump.points.size() == 16);  // 2^(2k) labelled points
    for (const auto& p : dump.points) CHECK(p.label_bits.size() == 4);
}

TEST_CASE("rotating both gains rotates the noiseless superpositions") {
    // the relay INPUT obeys the rotation; checked at the superposition level
    const SystemConfig cfg = fast_config();
    const TwoWaySystem system = calibrated_system(cfg);
    Matrix bits(4, 2);
    bits.at(1, 1) = 1;
    bits.at(2, 0) = 1;
    bits.at(3, 0) = 1;
    bits.at(3, 1) = 1;
    const Matrix x = terminal_modulate(system, bits);

    const ComplexCoef h_a{0.9, -0.2}, h_b{0.3, 0.7};
    const ComplexCoef rot{std::cos(0.4), std::sin(0.4)};
    const Matrix zero(4, 2);
    const Matrix y = apply_ma(x, x, h_a, h_b, zero);
    const Matrix y_rot = apply_ma(x, x, rot * h_a, rot * h_b, zero);
    const Matrix y_expected = complex_mul(rot, y);
    for (size_t i = 0; i < y.data.size(); ++i) {
        CHECK(y_rot.data[i] == doctest::Approx(y_expected.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("degenerate sweep reduces to a single evaluation") {
    const SystemConfig cfg = fast_config();
    const SweepResult result = sweep(cfg, {0.0}, {0.0, 5.0}, {cfg.seed}, 500, 1);
    REQUIRE(result.models.size() == 1);
    REQUIRE(result.envelope.entries.size() == 2);
    for (size_t e = 0; e < 2; ++e) {
        CHECK(result.envelope.entries[e].sum_rate ==
              result.models[0].curve.entries[e].sum_rate);
    }
}

TEST_CASE("sweep envelope dominates every model pointwise") {
    const SystemConfig cfg = fast_config();
    const SweepResult result = sweep(cfg, {0.0, 5.0}, {0.0, 5.0}, {1, 2}, 400, 2);
    CHECK(result.models.size() == 4);
    for (const auto& model : result.models) {
        for (size_t e = 0; e < model.curve.entries.size(); ++e) {
            CHECK(result.envelope.entries[e].sum_rate >=
                  model.curve.entries[e].sum_rate);
        }
    }
    // deterministic regardless of worker count
    const SweepResult serial = sweep(cfg, {0.0, 5.0}, {0.0, 5.0}, {1, 2}, 400, 1);
    for (size_t e = 0; e < result.envelope.entries.size(); ++e) {
        CHECK(serial.envelope.entries[e].sum_rate ==
              result.envelope.entries[e].sum_rate);
        CHECK(serial.envelope.entries[e].best_train_snr_db ==
              result.envelope.entries[e].best_train_snr_db);
    }
}

TEST_CASE("sum-rate CSV round trips through the repo reader") {
    SumRateCurve curve;
    curve.entries.push_back({0.0, 0.0, 0.43219, 2.27124});
    curve.entries.push_back({5.0, std::nan(""), 0.21, 3.16});
    const auto path =
        (std::filesystem::temp_directory_path() / "pnclab_curve_test.csv").string();
    write_sum_rate_csv(curve, path);

    const SumRateCurve back = read_sum_rate_csv(path);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].eval_snr_db == 0.0);
    CHECK(back.entries[0].mean_loss == doctest::Approx(0.43219).epsilon(1e-9));
    CHECK(std::isnan(back.entries[1].best_train_snr_db));
    CHECK(back.entries[1].sum_rate == doctest::Approx(3.16));

    // identical bytes on rewrite
    const auto path2 =
        (std::filesystem::temp_directory_path() / "pnclab_curve_test2.csv").string();
    write_sum_rate_csv(back, path2);
    CHECK(slurp(path) == slurp(path2));
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("constellation CSV round trips") {
    ConstellationDump dump;
    dump.points.push_back({"0110", 0.125, -0.5});
    dump.points.push_back({"10", 1.0, 0.0});
    const auto path =
        (std::filesystem::temp_directory_path() / "pnclab_conste_test.csv").string();
    write_constellation_csv(dump, path);
    const ConstellationDump back = read_constellation_csv(path);
    REQUIRE(back.points.size() == 2);
    CHECK(back.points[0].label_bits == "0110");
    CHECK(back.points[0].i == doctest::Approx(0.125));
    CHECK(back.points[1].q == doctest::Approx(0.0));
    std::filesystem::remove(path);
}
