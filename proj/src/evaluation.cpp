#include "pnclab/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "pnclab/errors.hpp"

namespace pnclab {

namespace {

constexpr std::uint64_t kStreamEvalBase = 100;

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string bit_label(int pattern, int width) {
    std::string s(width, '0');
    for (int j = 0; j < width; ++j) {
        if ((pattern >> (width - 1 - j)) & 1) s[j] = '1';
    }
    return s;
}

Matrix pattern_matrix(int k_bits) {
    const int n = 1 << k_bits;
    Matrix bits(n, k_bits);
    for (int p = 0; p < n; ++p) {
        for (int j = 0; j < k_bits; ++j) bits.at(p, j) = (p >> (k_bits - 1 - j)) & 1;
    }
    return bits;
}

}  // namespace

double gmi_from_llrs(const Matrix& llrs, const Matrix& bits) {
    return 1.0 - bce_loss(llrs, bits);
}

EvalResult estimate_sum_rate(const TwoWaySystem& system, double eval_snr_db,
                             long n_symbols, Rng& rng) {
    if (!system.calibrated()) {
        throw StateError("estimate_sum_rate needs a calibrated system");
    }
    if (n_symbols < 1) throw ConfigError("n_symbols must be >= 1");
    const SystemConfig& cfg = system.config;
    const double sigma2 = snr_db_to_sigma2(eval_snr_db);

    double loss_sum = 0.0;
    long done = 0;
    while (done < n_symbols) {
        const int rows =
            static_cast<int>(std::min<long>(cfg.minibatch, n_symbols - done));
        const Batch batch = sample_batch(cfg, sigma2, rows, rng);
        const SystemTrace trace = forward_end_to_end(system, batch);
        loss_sum += trace.loss * rows;
        done += rows;
    }

    EvalResult out;
    out.mean_loss = loss_sum / static_cast<double>(n_symbols);
    out.sum_rate =
        std::clamp(2.0 * cfg.k_bits * (1.0 - out.mean_loss), 0.0, 2.0 * cfg.k_bits);
    return out;
}

SweepResult sweep(const SystemConfig& base_config,
                  const std::vector<double>& train_grid_db,
                  const std::vector<double>& eval_grid_db,
                  const std::vector<std::uint64_t>& seeds, long eval_symbols,
                  int jobs) {
    if (train_grid_db.empty() || eval_grid_db.empty() || seeds.empty()) {
        throw ConfigError("sweep needs non-empty train grid, eval grid and seeds");
    }
    if (jobs < 1) jobs = 1;

    struct Cell {
        double train_snr_db;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (double t : train_grid_db) {
        for (std::uint64_t s : seeds) cells.push_back({t, s});
    }
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        if (a.train_snr_db != b.train_snr_db) return a.train_snr_db < b.train_snr_db;
        return a.seed < b.seed;
    });

    std::vector<SweepModelCurve> models(cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            SystemConfig cfg = base_config;
            cfg.train_snr_db = cells[i].train_snr_db;
            cfg.seed = cells[i].seed;
            TrainResult trained = train(cfg);
            calibrate(trained.system);

            SweepModelCurve model;
            model.train_snr_db = cfg.train_snr_db;
            model.seed = cfg.seed;
            for (size_t e = 0; e < eval_grid_db.size(); ++e) {
                Rng rng(derive_seed(cfg.seed, kStreamEvalBase + e));
                const EvalResult r =
                    estimate_sum_rate(trained.system, eval_grid_db[e], eval_symbols, rng);
                model.curve.entries.push_back(
                    {eval_grid_db[e], cfg.train_snr_db, r.mean_loss, r.sum_rate});
            }
            models[i] = std::move(model);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(cells.size()));
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    SweepResult result;
    result.models = std::move(models);
    for (size_t e = 0; e < eval_grid_db.size(); ++e) {
        SumRateCurve::Entry best;
        bool have = false;
        // Cells are ordered by (train SNR, seed); strict comparison keeps the
        // lowest train SNR on ties.
        for (const auto& model : result.models) {
            const auto& entry = model.curve.entries[e];
            if (!have || entry.sum_rate > best.sum_rate) {
                best = entry;
                have = true;
            }
        }
        result.envelope.entries.push_back(best);
    }
    return result;
}

ConstellationDump extract_terminal_constellation(const TwoWaySystem& system) {
    if (!system.calibrated()) {
        throw StateError("constellation extraction needs a calibrated system");
    }
    const int k = system.config.k_bits;
    const Matrix bits = pattern_matrix(k);
    const Matrix symbols = terminal_modulate(system, bits);
    ConstellationDump dump;
    for (int p = 0; p < symbols.rows; ++p) {
        dump.points.push_back({bit_label(p, k), symbols.at(p, 0), symbols.at(p, 1)});
    }
    return dump;
}

ConstellationDump extract_relay_constellation(const TwoWaySystem& system,
                                              const ComplexCoef& h_a,
                                              const ComplexCoef& h_b) {
    if (!system.calibrated()) {
        throw StateError("constellation extraction needs a calibrated system");
    }
    const int k = system.config.k_bits;
    const int n = 1 << k;

    // All (s_a, s_b) pairs, noiseless superposition through the MA hop.
    Matrix bits_a(n * n, k), bits_b(n * n, k);
    for (int pa = 0; pa < n; ++pa) {
        for (int pb = 0; pb < n; ++pb) {
            const int r = pa * n + pb;
            for (int j = 0; j < k; ++j) {
                bits_a.at(r, j) = (pa >> (k - 1 - j)) & 1;
                bits_b.at(r, j) = (pb >> (k - 1 - j)) & 1;
            }
        }
    }
    const Matrix levels_a = bits_to_levels(bits_a);
    const Matrix levels_b = bits_to_levels(bits_b);
    ForwardTrace ta, tb, tr;
    const Matrix x_a = system.terminal_mod.forward(levels_a, ta);
    const Matrix x_b = system.terminal_mod.forward(levels_b, tb);
    const Matrix zero(n * n, 2);
    const Matrix y_r = apply_ma(x_a, x_b, h_a, h_b, zero);
    RelaySideInfo side{&levels_a, &x_a, &levels_b, &x_b};
    const Matrix features = relay_features(y_r, h_a, h_b, system.config.csi_mode, &side);
    const Matrix x_r = system.relay_mod.forward(features, tr);

    ConstellationDump dump;
    for (int pa = 0; pa < n; ++pa) {
        for (int pb = 0; pb < n; ++pb) {
            const int r = pa * n + pb;
            dump.points.push_back({bit_label(pa, k) + bit_label(pb, k), x_r.at(r, 0),
                                   x_r.at(r, 1)});
        }
    }
    return dump;
}

std::string sum_rate_csv_text(const SumRateCurve& curve) {
    std::ostringstream out;
    out << "eval_snr_db,best_train_snr_db,mean_loss,sum_rate_bps_hz\n";
    for (const auto& e : curve.entries) {
        out << fmt6(e.eval_snr_db) << ",";
        if (std::isnan(e.best_train_snr_db)) {
            out << "NA";
        } else {
            out << fmt6(e.best_train_snr_db);
        }
        out << "," << fmt6(e.mean_loss) << "," << fmt6(e.sum_rate) << "\n";
    }
    return out.str();
}

void write_sum_rate_csv(const SumRateCurve& curve, const std::string& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << sum_rate_csv_text(curve);
    if (!file.flush()) throw IoError("failed writing '" + path + "'");
}

SumRateCurve read_sum_rate_csv(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path + "'");
    std::string line;
    int line_no = 0;
    if (!std::getline(file, line) ||
        line != "eval_snr_db,best_train_snr_db,mean_loss,sum_rate_bps_hz") {
        throw ArtifactError(path, 1, "bad sum-rate CSV header");
    }
    line_no = 1;
    SumRateCurve curve;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        SumRateCurve::Entry e;
        auto next_field = [&]() {
            if (!std::getline(ss, field, ',')) {
                throw ArtifactError(path, line_no, "missing CSV field");
            }
        };
        try {
            next_field();
            e.eval_snr_db = std::stod(field);
            next_field();
            e.best_train_snr_db =
                field == "NA" ? std::nan("") : std::stod(field);
            next_field();
            e.mean_loss = std::stod(field);
            next_field();
            e.sum_rate = std::stod(field);
        } catch (const std::invalid_argument&) {
            throw ArtifactError(path, line_no, "malformed CSV number '" + field + "'");
        }
        curve.entries.push_back(e);
    }
    return curve;
}

std::string constellation_csv_text(const ConstellationDump& dump) {
    std::ostringstream out;
    out << "label_bits,i,q\n";
    for (const auto& p : dump.points) {
        out << p.label_bits << "," << fmt6(p.i) << "," << fmt6(p.q) << "\n";
    }
    return out.str();
}

void write_constellation_csv(const ConstellationDump& dump, const std::string& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << constellation_csv_text(dump);
    if (!file.flush()) throw IoError("failed writing '" + path + "'");
}

ConstellationDump read_constellation_csv(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(file, line) || line != "label_bits,i,q") {
        throw ArtifactError(path, 1, "bad constellation CSV header");
    }
    int line_no = 1;
    ConstellationDump dump;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        ConstellationDump::Point p;
        std::string field;
        try {
            if (!std::getline(ss, p.label_bits, ',')) throw std::invalid_argument("");
            if (!std::getline(ss, field, ',')) throw std::invalid_argument("");
            p.i = std::stod(field);
            if (!std::getline(ss, field, ',')) throw std::invalid_argument("");
            p.q = std::stod(field);
        } catch (const std::invalid_argument&) {
            throw ArtifactError(path, line_no, "malformed constellation row");
        }
        dump.points.push_back(p);
    }
    return dump;
}

}  // namespace pnclab
