#include "pnclab/relay_system.hpp"

#include <cmath>

#include "pnclab/errors.hpp"

namespace pnclab {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Seed-stream layout for one training run.
enum Stream : std::uint64_t {
    kStreamInitTerminal = 1,
    kStreamInitRelay = 2,
    kStreamInitDemod = 3,
    kStreamDataset = 4,
    kStreamTraining = 5,
    kStreamCalibration = 6,
};

void put_block(Matrix& f, int col, const Matrix& src) { copy_block(f, col, src); }

void put_broadcast(Matrix& f, int col, const ComplexCoef& c) {
    for (int r = 0; r < f.rows; ++r) {
        f.at(r, col) = c.re;
        f.at(r, col + 1) = c.im;
    }
}

void put_complex_product(Matrix& f, int col, const ComplexCoef& c, const Matrix& y) {
    for (int r = 0; r < y.rows; ++r) {
        const double i = y.at(r, 0);
        const double q = y.at(r, 1);
        f.at(r, col) = c.re * i - c.im * q;
        f.at(r, col + 1) = c.re * q + c.im * i;
    }
}

// acc += conj(c) * g[:, col..col+2), the transport matching y -> c*y.
void add_conj_block(Matrix& acc, const Matrix& g, int col, const ComplexCoef& c) {
    for (int r = 0; r < acc.rows; ++r) {
        const double gi = g.at(r, col);
        const double gq = g.at(r, col + 1);
        acc.at(r, 0) += c.re * gi + c.im * gq;
        acc.at(r, 1) += c.re * gq - c.im * gi;
    }
}

void require_binary(const Matrix& bits) {
    for (double b : bits.data) {
        if (b != 0.0 && b != 1.0) {
            throw InputError("bit matrix entries must be exactly 0 or 1");
        }
    }
}

void draw_channel_pair(const SystemConfig& cfg, Rng& rng, ComplexCoef& h_a,
                       ComplexCoef& h_b) {
    if (cfg.channel_kind == ChannelKind::Awgn) {
        h_a = {1.0, 0.0};
        h_b = {1.0, 0.0};
        return;
    }
    const bool needs_inverse = cfg.csi_mode != CsiMode::NoCsi;
    do {
        sample_rayleigh_pair(rng, h_a, h_b);
    } while (needs_inverse && (h_a.abs2() < 1e-12 || h_b.abs2() < 1e-12));
}

Matrix take_rows(const Matrix& m, int start, int count) {
    Matrix out(count, m.cols);
    std::copy(m.data.begin() + static_cast<long>(start) * m.cols,
              m.data.begin() + static_cast<long>(start + count) * m.cols,
              out.data.begin());
    return out;
}

// Freezes the trailing power norm to the given scale.
void freeze_power_norm(MlpNetwork& net, double scale) {
    for (auto& layer : net.layers()) {
        if (auto* p = std::get_if<PowerNorm>(&layer)) {
            p->mode = PowerNorm::Mode::Calibrated;
            p->calibrated_scale = scale;
        }
    }
}

// Mean pre-norm symbol power of a forward pass whose last layer is the
// power norm.
void accumulate_prenorm_power(const MlpNetwork& net, const Matrix& input,
                              double& power_sum, long& row_count) {
    ForwardTrace trace;
    net.forward(input, trace);
    const Matrix& pre = trace.acts[trace.acts.size() - 2];
    for (double v : pre.data) power_sum += v * v;
    row_count += pre.rows;
}

}  // namespace

const char* csi_mode_name(CsiMode m) {
    switch (m) {
        case CsiMode::NoCsi: return "nocsi";
        case CsiMode::PerfectCsi: return "perfect";
        case CsiMode::IdealRelay: return "ideal";
    }
    return "?";
}

CsiMode csi_mode_from_name(const std::string& name) {
    if (name == "nocsi") return CsiMode::NoCsi;
    if (name == "perfect") return CsiMode::PerfectCsi;
    if (name == "ideal") return CsiMode::IdealRelay;
    throw ConfigError("unknown csi mode '" + name + "' (expected nocsi, perfect or ideal)");
}

const char* channel_kind_name(ChannelKind k) {
    switch (k) {
        case ChannelKind::Awgn: return "awgn";
        case ChannelKind::BlockRayleigh: return "rayleigh";
    }
    return "?";
}

ChannelKind channel_kind_from_name(const std::string& name) {
    if (name == "awgn") return ChannelKind::Awgn;
    if (name == "rayleigh") return ChannelKind::BlockRayleigh;
    throw ConfigError("unknown channel '" + name + "' (expected awgn or rayleigh)");
}

void SystemConfig::validate() const {
    if (k_bits != 1 && k_bits != 2 && k_bits != 4) {
        throw ConfigError("k_bits must be 1, 2 or 4");
    }
    if (n_dims != 2) throw ConfigError("n_dims is fixed at 2");
    if (hidden_sizes.empty()) throw ConfigError("hidden_sizes must be non-empty");
    for (int h : hidden_sizes) {
        if (h < 1) throw ConfigError("hidden sizes must be positive");
    }
    if (activation != Activation::Relu && activation != Activation::Tanh) {
        throw ConfigError("hidden activation must be relu or tanh");
    }
    if (minibatch < 1 || num_minibatches < 1 || epochs < 1) {
        throw ConfigError("minibatch, num_minibatches and epochs must be >= 1");
    }
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
}

int relay_feature_width(CsiMode mode, int k_bits) {
    switch (mode) {
        case CsiMode::NoCsi: return 2;
        case CsiMode::PerfectCsi: return 18;
        case CsiMode::IdealRelay: return 18 + 2 * k_bits + 4;
    }
    return 0;
}

int demod_feature_width(CsiMode mode, int k_bits) {
    return mode == CsiMode::NoCsi ? k_bits + 4 : k_bits + 10;
}

bool TwoWaySystem::calibrated() const {
    return terminal_mod.fully_calibrated() && relay_mod.fully_calibrated() &&
           demod.fully_calibrated();
}

TwoWaySystem make_system(const SystemConfig& config) {
    config.validate();
    TwoWaySystem system;
    system.config = config;

    std::vector<int> mod_dims{config.k_bits};
    mod_dims.insert(mod_dims.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
    mod_dims.push_back(2);
    system.terminal_mod =
        init_network(mod_dims, config.activation, Activation::Linear, true,
                     derive_seed(config.seed, kStreamInitTerminal));

    std::vector<int> relay_dims{relay_feature_width(config.csi_mode, config.k_bits)};
    relay_dims.insert(relay_dims.end(), config.hidden_sizes.begin(),
                      config.hidden_sizes.end());
    relay_dims.push_back(2);
    system.relay_mod = init_network(relay_dims, config.activation, Activation::Linear,
                                    true, derive_seed(config.seed, kStreamInitRelay));

    std::vector<int> demod_dims{demod_feature_width(config.csi_mode, config.k_bits)};
    demod_dims.insert(demod_dims.end(), config.hidden_sizes.begin(),
                      config.hidden_sizes.end());
    demod_dims.push_back(config.k_bits);
    system.demod = init_network(demod_dims, config.activation, Activation::Sigmoid,
                                false, derive_seed(config.seed, kStreamInitDemod));
    return system;
}

Matrix random_bits(int rows, int k_bits, Rng& rng) {
    Matrix bits(rows, k_bits);
    for (double& b : bits.data) b = static_cast<double>(rng.bit());
    return bits;
}

Matrix bits_to_levels(const Matrix& bits) {
    require_binary(bits);
    Matrix levels = bits;
    for (double& v : levels.data) v = v == 0.0 ? 1.0 : -1.0;
    return levels;
}

Batch sample_batch(const SystemConfig& config, double sigma2, int rows, Rng& rng) {
    Batch batch;
    batch.bits_a = random_bits(rows, config.k_bits, rng);
    batch.bits_b = random_bits(rows, config.k_bits, rng);
    draw_channel_pair(config, rng, batch.h_a, batch.h_b);
    const NoiseSpec noise{sigma2};
    batch.z_r = sample_awgn(noise, rows, rng);
    batch.z_a = sample_awgn(noise, rows, rng);
    batch.z_b = sample_awgn(noise, rows, rng);
    return batch;
}

Matrix relay_features(const Matrix& y_r, const ComplexCoef& h_a, const ComplexCoef& h_b,
                      CsiMode mode, const RelaySideInfo* side) {
    if (y_r.cols != 2) throw ConfigError("relay features expect 2-column y_r");
    if (mode == CsiMode::NoCsi) return y_r;

    if (h_a.abs2() < 1e-12 || h_b.abs2() < 1e-12) {
        throw DegenerateChannelError("channel gain too small for 1/H relay features");
    }

    int k_bits = 0;
    if (mode == CsiMode::IdealRelay) {
        if (!side || !side->levels_a || !side->symbols_a || !side->levels_b ||
            !side->symbols_b) {
            throw ConfigError("ideal relay features need terminal side information");
        }
        k_bits = side->levels_a->cols;
    }

    Matrix f(y_r.rows, relay_feature_width(mode, k_bits));
    put_block(f, 0, y_r);
    put_broadcast(f, 2, h_a);
    put_complex_product(f, 4, h_a, y_r);
    put_broadcast(f, 6, h_b);
    put_complex_product(f, 8, h_b, y_r);
    put_complex_product(f, 10, h_a.conj(), y_r);
    put_complex_product(f, 12, h_b.conj(), y_r);
    put_complex_product(f, 14, h_a.inverse(), y_r);
    put_complex_product(f, 16, h_b.inverse(), y_r);
    if (mode == CsiMode::IdealRelay) {
        put_block(f, 18, *side->levels_a);
        put_block(f, 18 + k_bits, *side->symbols_a);
        put_block(f, 20 + k_bits, *side->levels_b);
        put_block(f, 20 + 2 * k_bits, *side->symbols_b);
    }
    return f;
}

RelayFeatureGrads relay_features_backward(const Matrix& g, const ComplexCoef& h_a,
                                          const ComplexCoef& h_b, CsiMode mode,
                                          int k_bits) {
    RelayFeatureGrads out;
    out.d_y_r = Matrix(g.rows, 2);
    if (mode == CsiMode::NoCsi) {
        out.d_y_r = g;
        return out;
    }
    add_conj_block(out.d_y_r, g, 0, {1.0, 0.0});
    add_conj_block(out.d_y_r, g, 4, h_a);
    add_conj_block(out.d_y_r, g, 8, h_b);
    add_conj_block(out.d_y_r, g, 10, h_a.conj());
    add_conj_block(out.d_y_r, g, 12, h_b.conj());
    add_conj_block(out.d_y_r, g, 14, h_a.inverse());
    add_conj_block(out.d_y_r, g, 16, h_b.inverse());
    if (mode == CsiMode::IdealRelay) {
        out.d_x_a = take_block(g, 18 + k_bits, 2);
        out.d_x_b = take_block(g, 20 + 2 * k_bits, 2);
    }
    return out;
}

Matrix demod_features(const Matrix& own_levels, const Matrix& own_symbols,
                      const Matrix& y, const ComplexCoef& h_own, CsiMode mode) {
    const int k_bits = own_levels.cols;
    if (own_symbols.cols != 2 || y.cols != 2 || own_symbols.rows != own_levels.rows ||
        y.rows != own_levels.rows) {
        throw ConfigError("demod features: inconsistent shapes");
    }
    Matrix f(y.rows, demod_feature_width(mode, k_bits));
    put_block(f, 0, own_levels);
    put_block(f, k_bits, own_symbols);
    put_block(f, k_bits + 2, y);
    if (mode != CsiMode::NoCsi) {
        if (h_own.abs2() < 1e-12) {
            throw DegenerateChannelError("channel gain too small for 1/H demod features");
        }
        put_broadcast(f, k_bits + 4, h_own);
        put_complex_product(f, k_bits + 6, h_own.conj(), y);
        put_complex_product(f, k_bits + 8, h_own.inverse(), y);
    }
    return f;
}

DemodFeatureGrads demod_features_backward(const Matrix& g, const ComplexCoef& h_own,
                                          CsiMode mode, int k_bits) {
    DemodFeatureGrads out;
    out.d_y = Matrix(g.rows, 2);
    out.d_own_symbols = take_block(g, k_bits, 2);
    add_conj_block(out.d_y, g, k_bits + 2, {1.0, 0.0});
    if (mode != CsiMode::NoCsi) {
        add_conj_block(out.d_y, g, k_bits + 6, h_own.conj());
        add_conj_block(out.d_y, g, k_bits + 8, h_own.inverse());
    }
    return out;
}

double bce_loss(const Matrix& logits, const Matrix& bits) {
    if (!logits.same_shape(bits)) throw ConfigError("bce_loss: shape mismatch");
    require_binary(bits);
    double acc = 0.0;
    for (size_t i = 0; i < logits.data.size(); ++i) {
        const double a = bits.data[i] == 0.0 ? 1.0 : -1.0;
        const double z = -a * logits.data[i];
        // softplus(z) = max(z, 0) + log1p(exp(-|z|))
        acc += std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
    }
    return acc / (kLn2 * static_cast<double>(logits.data.size()));
}

Matrix bce_loss_grad(const Matrix& logits, const Matrix& bits) {
    if (!logits.same_shape(bits)) throw ConfigError("bce_loss_grad: shape mismatch");
    require_binary(bits);
    Matrix g(logits.rows, logits.cols);
    const double norm = 1.0 / (kLn2 * static_cast<double>(logits.data.size()));
    for (size_t i = 0; i < logits.data.size(); ++i) {
        const double a = bits.data[i] == 0.0 ? 1.0 : -1.0;
        const double z = -a * logits.data[i];
        // d softplus(z)/dz = sigmoid(z), chained with dz/dL = -a
        const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                    : std::exp(z) / (1.0 + std::exp(z));
        g.data[i] = -a * sig * norm;
    }
    return g;
}

SystemTrace forward_end_to_end(const TwoWaySystem& system, const Batch& batch) {
    const SystemConfig& cfg = system.config;
    if (batch.bits_a.cols != cfg.k_bits || !batch.bits_a.same_shape(batch.bits_b)) {
        throw ConfigError("batch bits do not match the configured k_bits");
    }
    SystemTrace t;
    t.levels_a = bits_to_levels(batch.bits_a);
    t.levels_b = bits_to_levels(batch.bits_b);

    t.x_a = system.terminal_mod.forward(t.levels_a, t.mod_a);
    t.x_b = system.terminal_mod.forward(t.levels_b, t.mod_b);
    t.y_r = apply_ma(t.x_a, t.x_b, batch.h_a, batch.h_b, batch.z_r);

    RelaySideInfo side{&t.levels_a, &t.x_a, &t.levels_b, &t.x_b};
    t.f_r = relay_features(t.y_r, batch.h_a, batch.h_b, cfg.csi_mode, &side);
    t.x_r = system.relay_mod.forward(t.f_r, t.relay);

    t.y_a = apply_bc(t.x_r, batch.h_a, batch.z_a);
    t.y_b = apply_bc(t.x_r, batch.h_b, batch.z_b);

    t.f_a = demod_features(t.levels_a, t.x_a, t.y_a, batch.h_a, cfg.csi_mode);
    t.f_b = demod_features(t.levels_b, t.x_b, t.y_b, batch.h_b, cfg.csi_mode);
    t.logits_b_at_a = system.demod.forward_logits(t.f_a, t.demod_a);
    t.logits_a_at_b = system.demod.forward_logits(t.f_b, t.demod_b);

    t.loss_at_a = bce_loss(t.logits_b_at_a, batch.bits_b);
    t.loss_at_b = bce_loss(t.logits_a_at_b, batch.bits_a);
    t.loss = 0.5 * (t.loss_at_a + t.loss_at_b);
    t.valid = true;
    return t;
}

SystemGradients backward_end_to_end(const TwoWaySystem& system, const Batch& batch,
                                    const SystemTrace& t) {
    if (!t.valid) throw StateError("backward_end_to_end needs a fresh forward trace");
    const SystemConfig& cfg = system.config;

    // Combined loss averages the two directions.
    Matrix g_logits_a = scale(bce_loss_grad(t.logits_b_at_a, batch.bits_b), 0.5);
    Matrix g_logits_b = scale(bce_loss_grad(t.logits_a_at_b, batch.bits_a), 0.5);

    SystemGradients grads;
    Matrix g_f_a, g_f_b;
    grads.demod = system.demod.backward_logits(t.demod_a, g_logits_a, &g_f_a);
    grads.demod.accumulate(system.demod.backward_logits(t.demod_b, g_logits_b, &g_f_b));

    DemodFeatureGrads dfa = demod_features_backward(g_f_a, batch.h_a, cfg.csi_mode, cfg.k_bits);
    DemodFeatureGrads dfb = demod_features_backward(g_f_b, batch.h_b, cfg.csi_mode, cfg.k_bits);

    // Both broadcast hops feed the relay output.
    Matrix g_x_r = complex_mul(batch.h_a.conj(), dfa.d_y);
    add_in_place(g_x_r, complex_mul(batch.h_b.conj(), dfb.d_y));

    Matrix g_f_r;
    grads.relay_mod = system.relay_mod.backward(t.relay, g_x_r, &g_f_r);
    RelayFeatureGrads rf =
        relay_features_backward(g_f_r, batch.h_a, batch.h_b, cfg.csi_mode, cfg.k_bits);

    // Terminal symbols collect the MA-hop path, the demodulator's own-symbol
    // path, and (ideal mode) the relay side-info path.
    Matrix g_x_a = complex_mul(batch.h_a.conj(), rf.d_y_r);
    add_in_place(g_x_a, dfa.d_own_symbols);
    Matrix g_x_b = complex_mul(batch.h_b.conj(), rf.d_y_r);
    add_in_place(g_x_b, dfb.d_own_symbols);
    if (cfg.csi_mode == CsiMode::IdealRelay) {
        add_in_place(g_x_a, rf.d_x_a);
        add_in_place(g_x_b, rf.d_x_b);
    }

    grads.terminal_mod = system.terminal_mod.backward(t.mod_a, g_x_a, nullptr);
    grads.terminal_mod.accumulate(
        system.terminal_mod.backward(t.mod_b, g_x_b, nullptr));
    return grads;
}

Matrix terminal_modulate(const TwoWaySystem& system, const Matrix& bits) {
    ForwardTrace trace;
    return system.terminal_mod.forward(bits_to_levels(bits), trace);
}

Matrix relay_modulate(const TwoWaySystem& system, const Matrix& features) {
    ForwardTrace trace;
    return system.relay_mod.forward(features, trace);
}

TrainResult train(const SystemConfig& config) {
    config.validate();
    TwoWaySystem system = make_system(config);
    const double sigma2 = snr_db_to_sigma2(config.train_snr_db);
    const int rows_total = config.minibatch * config.num_minibatches;

    Rng data_rng(derive_seed(config.seed, kStreamDataset));
    const Matrix bits_a = random_bits(rows_total, config.k_bits, data_rng);
    const Matrix bits_b = random_bits(rows_total, config.k_bits, data_rng);

    Rng step_rng(derive_seed(config.seed, kStreamTraining));
    AdamState adam_terminal = make_adam_state(system.terminal_mod, config.learning_rate);
    AdamState adam_relay = make_adam_state(system.relay_mod, config.learning_rate);
    AdamState adam_demod = make_adam_state(system.demod, config.learning_rate);

    TrainResult result;
    result.loss_history.reserve(config.epochs);
    const NoiseSpec noise{sigma2};
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (int mb = 0; mb < config.num_minibatches; ++mb) {
            Batch batch;
            batch.bits_a = take_rows(bits_a, mb * config.minibatch, config.minibatch);
            batch.bits_b = take_rows(bits_b, mb * config.minibatch, config.minibatch);
            draw_channel_pair(config, step_rng, batch.h_a, batch.h_b);
            batch.z_r = sample_awgn(noise, config.minibatch, step_rng);
            batch.z_a = sample_awgn(noise, config.minibatch, step_rng);
            batch.z_b = sample_awgn(noise, config.minibatch, step_rng);

            const SystemTrace trace = forward_end_to_end(system, batch);
            const SystemGradients grads = backward_end_to_end(system, batch, trace);
            adam_step(system.terminal_mod, grads.terminal_mod, adam_terminal);
            adam_step(system.relay_mod, grads.relay_mod, adam_relay);
            adam_step(system.demod, grads.demod, adam_demod);
            loss_sum += trace.loss;
        }
        result.loss_history.push_back(loss_sum / config.num_minibatches);
    }
    result.system = std::move(system);
    return result;
}

double system_grad_check(const TwoWaySystem& system, const Batch& batch, double step) {
    if (step <= 0.0) throw ConfigError("system_grad_check step must be positive");
    TwoWaySystem work = system;
    const SystemTrace trace = forward_end_to_end(work, batch);
    const SystemGradients analytic = backward_end_to_end(work, batch, trace);

    double worst = 0.0;
    auto compare = [&](double fd, double an) {
        const double denom = std::max(std::fabs(fd), std::fabs(an));
        const double err = denom < 1e-8 ? std::fabs(fd - an) : std::fabs(fd - an) / denom;
        worst = std::max(worst, err);
    };
    auto probe = [&](double& param, double an) {
        const double saved = param;
        param = saved + step;
        const double up = forward_end_to_end(work, batch).loss;
        param = saved - step;
        const double down = forward_end_to_end(work, batch).loss;
        param = saved;
        compare((up - down) / (2.0 * step), an);
    };
    auto check_net = [&](MlpNetwork& net, const MlpGradients& grads) {
        for (size_t i = 0; i < net.layers().size(); ++i) {
            auto* d = std::get_if<DenseLayer>(&net.layers()[i]);
            if (!d) continue;
            const auto& g = grads.dense[i];
            for (size_t j = 0; j < d->weights.data.size(); ++j) {
                probe(d->weights.data[j], g.d_weights.data[j]);
            }
            for (size_t j = 0; j < d->bias.size(); ++j) {
                probe(d->bias[j], g.d_bias[j]);
            }
        }
    };
    check_net(work.terminal_mod, analytic.terminal_mod);
    check_net(work.relay_mod, analytic.relay_mod);
    check_net(work.demod, analytic.demod);
    return worst;
}

void calibrate(TwoWaySystem& system) {
    const SystemConfig& cfg = system.config;
    const int k = cfg.k_bits;
    const int n_pairs = 1 << (2 * k);
    const int tile = 1000;
    const int rows = n_pairs * tile;

    // All (s_a, s_b) pattern pairs, tiled so every constellation point gets
    // equal weight in the statistic.
    Matrix bits_a(rows, k), bits_b(rows, k);
    for (int r = 0; r < rows; ++r) {
        const int pair = r % n_pairs;
        const int pa = pair >> k;
        const int pb = pair & ((1 << k) - 1);
        for (int j = 0; j < k; ++j) {
            bits_a.at(r, j) = (pa >> (k - 1 - j)) & 1;
            bits_b.at(r, j) = (pb >> (k - 1 - j)) & 1;
        }
    }

    // Terminal scale first, from the stacked two-terminal batch.
    {
        const Matrix stacked = vstack(bits_to_levels(bits_a), bits_to_levels(bits_b));
        double power_sum = 0.0;
        long row_count = 0;
        accumulate_prenorm_power(system.terminal_mod, stacked, power_sum, row_count);
        freeze_power_norm(system.terminal_mod, 1.0 / std::sqrt(power_sum / row_count));
    }

    // Relay scale from the calibrated terminal's transmissions through the
    // MA hop at the training SNR, block fading intact.
    Rng rng(derive_seed(cfg.seed, kStreamCalibration));
    const double sigma2 = snr_db_to_sigma2(cfg.train_snr_db);
    const NoiseSpec noise{sigma2};
    double power_sum = 0.0;
    long row_count = 0;
    for (int start = 0; start < rows; start += cfg.minibatch) {
        const int count = std::min(cfg.minibatch, rows - start);
        const Matrix levels_a = bits_to_levels(take_rows(bits_a, start, count));
        const Matrix levels_b = bits_to_levels(take_rows(bits_b, start, count));
        ForwardTrace ta, tb;
        const Matrix x_a = system.terminal_mod.forward(levels_a, ta);
        const Matrix x_b = system.terminal_mod.forward(levels_b, tb);
        ComplexCoef h_a, h_b;
        draw_channel_pair(cfg, rng, h_a, h_b);
        const Matrix z_r = sample_awgn(noise, count, rng);
        const Matrix y_r = apply_ma(x_a, x_b, h_a, h_b, z_r);
        RelaySideInfo side{&levels_a, &x_a, &levels_b, &x_b};
        const Matrix f = relay_features(y_r, h_a, h_b, cfg.csi_mode, &side);
        accumulate_prenorm_power(system.relay_mod, f, power_sum, row_count);
    }
    freeze_power_norm(system.relay_mod, 1.0 / std::sqrt(power_sum / row_count));
}

}  // namespace pnclab
