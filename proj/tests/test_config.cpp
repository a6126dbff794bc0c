#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pnclab/errors.hpp"
#include "pnclab/experiment_config.hpp"

using namespace pnclab;

namespace {

const char* kGoodConfig =
    "# two-way relay experiment\n"
    "version = 1\n"
    "k_bits = 2\n"
    "hidden_sizes = 100,100\n"
    "activation = relu\n"
    "csi_mode = nocsi\n"
    "channel = awgn\n"
    "train_snr_db = 5\n"
    "minibatch = 128\n"
    "num_minibatches = 200\n"
    "epochs = 30\n"
    "learning_rate = 0.001\n"
    "seed = 42\n"
    "train_snr_grid_db = 0,5,10\n"
    "eval_snr_grid_db = 0,5,10,15,20\n"
    "seeds = 1,2,3\n"
    "eval_symbols = 100000\n";

}  // namespace

TEST_CASE("experiment file parses every field") {
    const ExperimentFile ex = parse_experiment_text(kGoodConfig, "test.cfg");
    CHECK(ex.config.k_bits == 2);
    CHECK(ex.config.hidden_sizes == std::vector<int>{100, 100});
    CHECK(ex.config.activation == Activation::Relu);
    CHECK(ex.config.csi_mode == CsiMode::NoCsi);
    CHECK(ex.config.channel_kind == ChannelKind::Awgn);
    CHECK(ex.config.train_snr_db == 5.0);
    CHECK(ex.config.num_minibatches == 200);
    CHECK(ex.config.seed == 42);
    CHECK(ex.train_snr_grid_db == std::vector<double>{0, 5, 10});
    CHECK(ex.eval_snr_grid_db.size() == 5);
    CHECK(ex.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(ex.eval_symbols == 100000);
}

TEST_CASE("unknown keys are rejected with the offending line") {
    const std::string text = "version = 1\nk_bits = 2\nfrobnicate = yes\n";
    try {
        parse_experiment_text(text, "bad.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad.cfg:3") != std::string::npos);
        CHECK(msg.find("frobnicate") != std::string::npos);
    }
}

TEST_CASE("version key is mandatory") {
    CHECK_THROWS_WITH_AS(parse_experiment_text("k_bits = 2\n", "v.cfg"),
                         doctest::Contains("version"), ConfigError);
}

TEST_CASE("invalid values carry their line number") {
    const std::string text = "version = 1\nk_bits = 2\ntrain_snr_db = soup\n";
    try {
        parse_experiment_text(text, "val.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("val.cfg:3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_experiment_text("version = 1\nk_bits = 3\n", "k.cfg"),
                    ConfigError);
}

TEST_CASE("manifest text round trips through the parser") {
    SystemConfig cfg;
    cfg.k_bits = 4;
    cfg.hidden_sizes = {64, 32};
    cfg.activation = Activation::Tanh;
    cfg.csi_mode = CsiMode::IdealRelay;
    cfg.channel_kind = ChannelKind::BlockRayleigh;
    cfg.train_snr_db = 12.5;
    cfg.minibatch = 96;
    cfg.num_minibatches = 11;
    cfg.epochs = 3;
    cfg.learning_rate = 0.00025;
    cfg.seed = 1234567;

    const std::string text = config_manifest_text(cfg);
    const ExperimentFile back = parse_experiment_text(text, "manifest");
    CHECK(back.config.k_bits == cfg.k_bits);
    CHECK(back.config.hidden_sizes == cfg.hidden_sizes);
    CHECK(back.config.activation == cfg.activation);
    CHECK(back.config.csi_mode == cfg.csi_mode);
    CHECK(back.config.channel_kind == cfg.channel_kind);
    CHECK(back.config.train_snr_db == cfg.train_snr_db);
    CHECK(back.config.learning_rate == cfg.learning_rate);
    CHECK(back.config.seed == cfg.seed);

    CHECK(config_hash(cfg) == config_hash(back.config));
    SystemConfig other = cfg;
    other.seed = 8;
    CHECK(config_hash(cfg) != config_hash(other));
}

TEST_CASE("system save/load round trips exactly") {
    SystemConfig cfg;
    cfg.k_bits = 2;
    cfg.hidden_sizes = {6};
    cfg.activation = Activation::Tanh;
    cfg.csi_mode = CsiMode::PerfectCsi;
    cfg.channel_kind = ChannelKind::BlockRayleigh;
    cfg.minibatch = 16;
    cfg.num_minibatches = 2;
    cfg.epochs = 1;
    cfg.seed = 5;
    TwoWaySystem system = make_system(cfg);
    calibrate(system);

    const auto dir =
        (std::filesystem::temp_directory_path() / "pnclab_sys_test").string();
    save_system(system, dir);
    const TwoWaySystem loaded = load_system(dir);
    CHECK(loaded.config.seed == cfg.seed);
    CHECK(loaded.calibrated());

    for (size_t i = 0; i < system.terminal_mod.layers().size(); ++i) {
        const auto* d = std::get_if<DenseLayer>(&system.terminal_mod.layers()[i]);
        if (!d) continue;
        const auto& l = std::get<DenseLayer>(loaded.terminal_mod.layers()[i]);
        CHECK(d->weights.data == l.weights.data);
    }
    std::filesystem::remove_all(dir);
}
