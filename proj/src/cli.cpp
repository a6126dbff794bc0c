#include "pnclab/cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "pnclab/baselines.hpp"
#include "pnclab/errors.hpp"
#include "pnclab/evaluation.hpp"
#include "pnclab/experiment_config.hpp"
#include "pnclab/relay_system.hpp"

namespace pnclab::cli {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kStreamEvalBase = 100;      // matches evaluation::sweep
constexpr std::uint64_t kStreamBaselineBase = 200;

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::optional<std::uint64_t> env_seed_override() {
    const char* raw = std::getenv("PNC_LAB_SEED");
    if (!raw || !*raw) return std::nullopt;
    try {
        size_t used = 0;
        const unsigned long long v = std::stoull(raw, &used);
        if (used != std::string(raw).size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("PNC_LAB_SEED is not an unsigned integer: '") +
                          raw + "'");
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << text;
    if (!file.flush()) throw IoError("failed writing '" + path + "'");
}

ComplexCoef parse_complex_flag(const std::string& text, const std::string& flag) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw ConfigError(flag + " expects RE,IM");
    }
    try {
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        throw ConfigError(flag + " expects RE,IM, got '" + text + "'");
    }
}

std::string loss_history_csv(const std::vector<double>& history) {
    std::ostringstream out;
    out << "epoch,mean_loss\n";
    for (size_t i = 0; i < history.size(); ++i) {
        out << (i + 1) << "," << fmt6(history[i]) << "\n";
    }
    return out.str();
}

int do_train(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
             const std::string& out_dir, std::ostream& out) {
    ExperimentFile ex = parse_experiment_file(config_path);
    SystemConfig cfg = ex.config;
    if (seed_flag) cfg.seed = *seed_flag;
    if (auto env = env_seed_override()) cfg.seed = *env;

    TrainResult result = train(cfg);
    calibrate(result.system);
    save_system(result.system, out_dir);
    write_text_file((fs::path(out_dir) / "loss_history.csv").string(),
                    loss_history_csv(result.loss_history));
    out << "trained " << cfg.epochs << " epochs at " << cfg.train_snr_db
        << " dB, final mean loss " << fmt6(result.loss_history.back()) << "\n";
    return 0;
}

SumRateCurve evaluate_grid(const TwoWaySystem& system,
                           const std::vector<double>& grid, long symbols,
                           std::uint64_t master_seed) {
    SumRateCurve curve;
    for (size_t i = 0; i < grid.size(); ++i) {
        Rng rng(derive_seed(master_seed, kStreamEvalBase + i));
        const EvalResult r = estimate_sum_rate(system, grid[i], symbols, rng);
        curve.entries.push_back(
            {grid[i], system.config.train_snr_db, r.mean_loss, r.sum_rate});
    }
    return curve;
}

int do_eval(const std::string& model_dir, std::vector<double> snr_grid, long symbols,
            std::optional<std::uint64_t> seed_flag, const std::string& out_file,
            std::ostream& out) {
    if (snr_grid.empty()) throw ConfigError("--snr-db needs at least one value");
    if (symbols < 1) throw ConfigError("--symbols must be >= 1");
    std::sort(snr_grid.begin(), snr_grid.end());

    const TwoWaySystem system = load_system(model_dir);
    std::uint64_t master = system.config.seed;
    if (seed_flag) master = *seed_flag;
    if (auto env = env_seed_override()) master = *env;

    write_sum_rate_csv(evaluate_grid(system, snr_grid, symbols, master), out_file);
    out << "evaluated " << snr_grid.size() << " SNR points into " << out_file << "\n";
    return 0;
}

int do_sweep(const std::string& config_path, std::string out_dir, int jobs,
             std::ostream& out, std::ostream& err) {
    ExperimentFile ex = parse_experiment_file(config_path);
    if (auto env = env_seed_override()) ex.config.seed = *env;
    if (ex.train_snr_grid_db.empty() || ex.eval_snr_grid_db.empty() || ex.seeds.empty()) {
        throw ConfigError(config_path +
                          ": sweep needs train_snr_grid_db, eval_snr_grid_db and seeds");
    }
    if (out_dir.empty()) out_dir = ex.out_dir;
    if (out_dir.empty()) {
        throw ConfigError("no output directory: pass --out or set out_dir in the config");
    }
    if (jobs < 1) jobs = 1;
    std::sort(ex.train_snr_grid_db.begin(), ex.train_snr_grid_db.end());
    std::sort(ex.eval_snr_grid_db.begin(), ex.eval_snr_grid_db.end());
    std::sort(ex.seeds.begin(), ex.seeds.end());

    struct Cell {
        SystemConfig config;
        std::string dir;
        bool failed = false;
        std::string error;
    };
    std::vector<Cell> cells;
    for (double t : ex.train_snr_grid_db) {
        for (std::uint64_t s : ex.seeds) {
            Cell cell;
            cell.config = ex.config;
            cell.config.train_snr_db = t;
            cell.config.seed = s;
            cell.dir = (fs::path(out_dir) / "cells" / config_hash(cell.config)).string();
            cells.push_back(std::move(cell));
        }
    }

    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "cells", ec);
    if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());

    // Cell outputs are content-addressed by config hash, so a rerun picks up
    // where it left off.
    auto cell_done = [](const Cell& c) {
        return fs::exists(fs::path(c.dir) / "done") &&
               fs::exists(fs::path(c.dir) / "curve.csv");
    };

    std::atomic<size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            Cell& cell = cells[i];
            if (cell_done(cell)) continue;
            try {
                TrainResult result = train(cell.config);
                calibrate(result.system);
                save_system(result.system, (fs::path(cell.dir) / "model").string());
                write_text_file((fs::path(cell.dir) / "loss_history.csv").string(),
                                loss_history_csv(result.loss_history));
                const SumRateCurve curve =
                    evaluate_grid(result.system, ex.eval_snr_grid_db, ex.eval_symbols,
                                  cell.config.seed);
                write_sum_rate_csv(curve, (fs::path(cell.dir) / "curve.csv").string());
                write_text_file((fs::path(cell.dir) / "done").string(), "ok\n");
                std::lock_guard<std::mutex> lock(log_mutex);
                out << "cell train " << cell.config.train_snr_db << " dB seed "
                    << cell.config.seed << " done\n";
            } catch (const std::exception& e) {
                cell.failed = true;
                cell.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(jobs, static_cast<int>(cells.size()));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // Envelope over the successful cells; cells are already ordered by
    // (train SNR, seed) so ties resolve toward the lower train SNR.
    SumRateCurve envelope;
    bool any_success = false;
    std::vector<SumRateCurve> curves(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].failed || !cell_done(cells[i])) continue;
        curves[i] = read_sum_rate_csv((fs::path(cells[i].dir) / "curve.csv").string());
        any_success = true;
        char name[96];
        std::snprintf(name, sizeof(name), "curve_train%g_seed%llu.csv",
                      cells[i].config.train_snr_db,
                      static_cast<unsigned long long>(cells[i].config.seed));
        write_sum_rate_csv(curves[i], (fs::path(out_dir) / name).string());
    }
    if (any_success) {
        for (size_t e = 0; e < ex.eval_snr_grid_db.size(); ++e) {
            SumRateCurve::Entry best;
            bool have = false;
            for (size_t i = 0; i < cells.size(); ++i) {
                if (curves[i].entries.size() <= e) continue;
                const auto& entry = curves[i].entries[e];
                if (!have || entry.sum_rate > best.sum_rate) {
                    best = entry;
                    have = true;
                }
            }
            if (have) envelope.entries.push_back(best);
        }
        write_sum_rate_csv(envelope, (fs::path(out_dir) / "envelope.csv").string());
    }

    int failures = 0;
    for (const Cell& cell : cells) {
        if (!cell.failed) continue;
        ++failures;
        err << "cell train " << cell.config.train_snr_db << " dB seed "
            << cell.config.seed << " failed: " << cell.error << "\n";
    }
    out << (cells.size() - failures) << "/" << cells.size() << " cells complete\n";
    return failures == 0 ? 0 : 1;
}

int do_baseline_af(const std::string& mod, const std::string& channel,
                   std::vector<double> snr_grid, long symbols, int block,
                   std::uint64_t seed, const std::string& out_file, std::ostream& out) {
    if (snr_grid.empty()) throw ConfigError("--snr-db needs at least one value");
    if (symbols < 1) throw ConfigError("--symbols must be >= 1");
    std::sort(snr_grid.begin(), snr_grid.end());
    const int k = mod == "4qam" ? 2 : 4;
    const QamConstellation constellation = QamConstellation::make(k);
    const ChannelKind kind = channel_kind_from_name(channel);
    std::uint64_t master = seed;
    if (auto env = env_seed_override()) master = *env;

    SumRateCurve curve;
    for (size_t i = 0; i < snr_grid.size(); ++i) {
        Rng rng(derive_seed(master, kStreamBaselineBase + i));
        const AfRatePoint p =
            af_sum_rate(constellation, kind, snr_grid[i], symbols, block, rng);
        curve.entries.push_back({snr_grid[i], std::nan(""), p.mean_loss, p.sum_rate});
    }
    write_sum_rate_csv(curve, out_file);
    out << "AF " << mod << " " << channel << ": " << snr_grid.size()
        << " SNR points into " << out_file << "\n";
    return 0;
}

int do_dump_constellation(const std::string& model_dir, const std::string& mode,
                          const std::string& h_a_flag, const std::string& h_b_flag,
                          const std::string& out_file, std::ostream& out) {
    const TwoWaySystem system = load_system(model_dir);
    ConstellationDump dump;
    if (mode == "terminal") {
        dump = extract_terminal_constellation(system);
    } else {
        ComplexCoef h_a{1.0, 0.0}, h_b{1.0, 0.0};
        const bool flags_given = !h_a_flag.empty() || !h_b_flag.empty();
        if (flags_given) {
            if (h_a_flag.empty() || h_b_flag.empty()) {
                throw ConfigError("--h-a and --h-b must be given together");
            }
            h_a = parse_complex_flag(h_a_flag, "--h-a");
            h_b = parse_complex_flag(h_b_flag, "--h-b");
        } else if (system.config.csi_mode != CsiMode::NoCsi &&
                   system.config.channel_kind != ChannelKind::Awgn) {
            // H = 1 is only a sensible default for AWGN-trained models.
            throw ConfigError(
                "relay dump for a fading CSI model needs explicit --h-a and --h-b");
        }
        dump = extract_relay_constellation(system, h_a, h_b);
    }
    write_constellation_csv(dump, out_file);
    out << dump.points.size() << " constellation points into " << out_file << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"link-level trainer and simulator for learned physical-layer "
                 "network coding in two-way relay networks"};
    app.require_subcommand(1);

    std::string train_config, train_out;
    std::uint64_t train_seed = 0;
    auto* cmd_train = app.add_subcommand("train", "train one system and save it");
    cmd_train->add_option("--config", train_config, "experiment file")->required();
    auto* train_seed_opt =
        cmd_train->add_option("--seed", train_seed, "master seed override");
    cmd_train->add_option("--out", train_out, "model output directory")->required();

    std::string eval_model, eval_out;
    std::vector<double> eval_snrs;
    long eval_symbols = 100000;
    std::uint64_t eval_seed = 0;
    auto* cmd_eval = app.add_subcommand("eval", "sum-rate curve of a trained model");
    cmd_eval->add_option("--model", eval_model, "model directory")->required();
    cmd_eval->add_option("--snr-db", eval_snrs, "evaluation SNRs in dB")
        ->required()
        ->delimiter(',');
    cmd_eval->add_option("--symbols", eval_symbols, "Monte Carlo symbols per point");
    auto* eval_seed_opt =
        cmd_eval->add_option("--seed", eval_seed, "evaluation seed override");
    cmd_eval->add_option("--out", eval_out, "output CSV path")->required();

    std::string sweep_config, sweep_out;
    int sweep_jobs = static_cast<int>(std::thread::hardware_concurrency());
    auto* cmd_sweep =
        app.add_subcommand("sweep", "train the SNR/seed grid and emit the envelope");
    cmd_sweep->add_option("--config", sweep_config, "experiment file")->required();
    cmd_sweep->add_option("--out", sweep_out, "output directory");
    cmd_sweep->add_option("--jobs", sweep_jobs, "worker threads");

    std::string af_mod = "4qam", af_channel = "awgn", af_out;
    std::vector<double> af_snrs;
    long af_symbols = 100000;
    int af_block = 128;
    std::uint64_t af_seed = 1;
    auto* cmd_af =
        app.add_subcommand("baseline-af", "amplify-and-forward reference curve");
    cmd_af->add_option("--mod", af_mod, "modulation")
        ->check(CLI::IsMember({"4qam", "16qam"}));
    cmd_af->add_option("--channel", af_channel, "channel")
        ->check(CLI::IsMember({"awgn", "rayleigh"}));
    cmd_af->add_option("--snr-db", af_snrs, "SNRs in dB")->required()->delimiter(',');
    cmd_af->add_option("--symbols", af_symbols, "Monte Carlo symbols per point");
    cmd_af->add_option("--block", af_block, "fading block length in symbols");
    cmd_af->add_option("--seed", af_seed, "Monte Carlo seed");
    cmd_af->add_option("--out", af_out, "output CSV path")->required();

    std::string dump_model, dump_mode = "terminal", dump_ha, dump_hb, dump_out;
    auto* cmd_dump =
        app.add_subcommand("dump-constellation", "emit learned constellation points");
    cmd_dump->add_option("--model", dump_model, "model directory")->required();
    cmd_dump->add_option("--mode", dump_mode, "terminal or relay")
        ->check(CLI::IsMember({"terminal", "relay"}));
    cmd_dump->add_option("--h-a", dump_ha, "relay-mode channel gain RE,IM");
    cmd_dump->add_option("--h-b", dump_hb, "relay-mode channel gain RE,IM");
    cmd_dump->add_option("--out", dump_out, "output CSV path")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*cmd_train) {
            std::optional<std::uint64_t> seed;
            if (train_seed_opt->count() > 0) seed = train_seed;
            return do_train(train_config, seed, train_out, out);
        }
        if (*cmd_eval) {
            std::optional<std::uint64_t> seed;
            if (eval_seed_opt->count() > 0) seed = eval_seed;
            return do_eval(eval_model, eval_snrs, eval_symbols, seed, eval_out, out);
        }
        if (*cmd_sweep) return do_sweep(sweep_config, sweep_out, sweep_jobs, out, err);
        if (*cmd_af) {
            return do_baseline_af(af_mod, af_channel, af_snrs, af_symbols, af_block,
                                  af_seed, af_out, out);
        }
        if (*cmd_dump) {
            return do_dump_constellation(dump_model, dump_mode, dump_ha, dump_hb,
                                         dump_out, out);
        }
        err << "error: no subcommand\n";
        return 2;
    } catch (const ArtifactError& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace pnclab::cli
