#include "pnclab/experiment_config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pnclab/errors.hpp"

namespace pnclab {

namespace {

namespace fs = std::filesystem;

constexpr int kExperimentFormatVersion = 1;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

struct KeyValue {
    std::string key;
    std::string value;
    int line;
};

// One pass over the text: comments stripped, keys split at '='.
std::vector<KeyValue> scan_lines(const std::string& text, const std::string& name) {
    std::vector<KeyValue> entries;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(name + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        KeyValue kv;
        kv.key = trim(line.substr(0, eq));
        kv.value = trim(line.substr(eq + 1));
        kv.line = line_no;
        if (kv.key.empty()) {
            throw ConfigError(name + ":" + std::to_string(line_no) + ": empty key");
        }
        entries.push_back(std::move(kv));
    }
    return entries;
}

[[noreturn]] void fail_at(const std::string& name, int line, const std::string& msg) {
    throw ConfigError(name + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& name, const KeyValue& kv) {
    try {
        size_t used = 0;
        const double v = std::stod(kv.value, &used);
        if (used != kv.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail_at(name, kv.line, "invalid number for '" + kv.key + "': " + kv.value);
    }
}

long parse_long(const std::string& name, const KeyValue& kv) {
    try {
        size_t used = 0;
        const long v = std::stol(kv.value, &used);
        if (used != kv.value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail_at(name, kv.line, "invalid integer for '" + kv.key + "': " + kv.value);
    }
}

std::uint64_t parse_u64(const std::string& name, const KeyValue& kv,
                        const std::string& text) {
    try {
        size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        fail_at(name, kv.line, "invalid unsigned integer for '" + kv.key + "': " + text);
    }
}

std::vector<std::string> split_commas(const std::string& value) {
    std::vector<std::string> parts;
    std::istringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) parts.push_back(trim(part));
    return parts;
}

ExperimentFile parse_entries(const std::vector<KeyValue>& entries,
                             const std::string& name) {
    ExperimentFile ex;
    bool saw_version = false;
    for (const auto& kv : entries) {
        if (kv.key == "version") {
            if (parse_long(name, kv) != kExperimentFormatVersion) {
                fail_at(name, kv.line, "unsupported version '" + kv.value + "'");
            }
            saw_version = true;
        } else if (kv.key == "k_bits") {
            ex.config.k_bits = static_cast<int>(parse_long(name, kv));
        } else if (kv.key == "hidden_sizes") {
            ex.config.hidden_sizes.clear();
            for (const auto& part : split_commas(kv.value)) {
                ex.config.hidden_sizes.push_back(
                    static_cast<int>(parse_u64(name, kv, part)));
            }
        } else if (kv.key == "activation") {
            try {
                ex.config.activation = activation_from_name(kv.value);
            } catch (const ConfigError& e) {
                fail_at(name, kv.line, e.what());
            }
        } else if (kv.key == "csi_mode") {
            try {
                ex.config.csi_mode = csi_mode_from_name(kv.value);
            } catch (const ConfigError& e) {
                fail_at(name, kv.line, e.what());
            }
        } else if (kv.key == "channel") {
            try {
                ex.config.channel_kind = channel_kind_from_name(kv.value);
            } catch (const ConfigError& e) {
                fail_at(name, kv.line, e.what());
            }
        } else if (kv.key == "train_snr_db") {
            ex.config.train_snr_db = parse_double(name, kv);
        } else if (kv.key == "minibatch") {
            ex.config.minibatch = static_cast<int>(parse_long(name, kv));
        } else if (kv.key == "num_minibatches") {
            ex.config.num_minibatches = static_cast<int>(parse_long(name, kv));
        } else if (kv.key == "epochs") {
            ex.config.epochs = static_cast<int>(parse_long(name, kv));
        } else if (kv.key == "learning_rate") {
            ex.config.learning_rate = parse_double(name, kv);
        } else if (kv.key == "seed") {
            ex.config.seed = parse_u64(name, kv, kv.value);
        } else if (kv.key == "train_snr_grid_db") {
            ex.train_snr_grid_db.clear();
            for (const auto& part : split_commas(kv.value)) {
                KeyValue sub{kv.key, part, kv.line};
                ex.train_snr_grid_db.push_back(parse_double(name, sub));
            }
        } else if (kv.key == "eval_snr_grid_db") {
            ex.eval_snr_grid_db.clear();
            for (const auto& part : split_commas(kv.value)) {
                KeyValue sub{kv.key, part, kv.line};
                ex.eval_snr_grid_db.push_back(parse_double(name, sub));
            }
        } else if (kv.key == "seeds") {
            ex.seeds.clear();
            for (const auto& part : split_commas(kv.value)) {
                ex.seeds.push_back(parse_u64(name, kv, part));
            }
        } else if (kv.key == "eval_symbols") {
            ex.eval_symbols = parse_long(name, kv);
        } else if (kv.key == "out_dir") {
            ex.out_dir = kv.value;
        } else {
            fail_at(name, kv.line, "unknown key '" + kv.key + "'");
        }
    }
    if (!saw_version) {
        throw ConfigError(name + ": missing mandatory 'version' key");
    }
    try {
        ex.config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    }
    if (ex.eval_symbols < 1) {
        throw ConfigError(name + ": eval_symbols must be >= 1");
    }
    return ex;
}

}  // namespace

ExperimentFile parse_experiment_text(const std::string& text, const std::string& name) {
    return parse_entries(scan_lines(text, name), name);
}

ExperimentFile parse_experiment_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << file.rdbuf();
    return parse_experiment_text(buf.str(), path);
}

std::string config_manifest_text(const SystemConfig& config) {
    std::ostringstream out;
    out << "version = " << kExperimentFormatVersion << "\n";
    out << "k_bits = " << config.k_bits << "\n";
    out << "hidden_sizes = ";
    for (size_t i = 0; i < config.hidden_sizes.size(); ++i) {
        out << (i ? "," : "") << config.hidden_sizes[i];
    }
    out << "\n";
    out << "activation = " << activation_name(config.activation) << "\n";
    out << "csi_mode = " << csi_mode_name(config.csi_mode) << "\n";
    out << "channel = " << channel_kind_name(config.channel_kind) << "\n";
    out << "train_snr_db = " << fmt17(config.train_snr_db) << "\n";
    out << "minibatch = " << config.minibatch << "\n";
    out << "num_minibatches = " << config.num_minibatches << "\n";
    out << "epochs = " << config.epochs << "\n";
    out << "learning_rate = " << fmt17(config.learning_rate) << "\n";
    out << "seed = " << config.seed << "\n";
    return out.str();
}

void write_config_manifest(const SystemConfig& config, const std::string& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path + "' for writing");
    file << config_manifest_text(config);
    if (!file.flush()) throw IoError("failed writing '" + path + "'");
}

SystemConfig read_config_manifest(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open manifest '" + path + "'");
    std::ostringstream buf;
    buf << file.rdbuf();
    try {
        return parse_experiment_text(buf.str(), path).config;
    } catch (const ConfigError& e) {
        // A manifest is a persisted artifact: report corruption as such.
        throw ArtifactError(path, 0, e.what());
    }
}

void save_system(const TwoWaySystem& system, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
    write_config_manifest(system.config, (fs::path(dir) / "manifest.txt").string());
    save_weights(system.terminal_mod, (fs::path(dir) / "terminal_mod.txt").string());
    save_weights(system.relay_mod, (fs::path(dir) / "relay_mod.txt").string());
    save_weights(system.demod, (fs::path(dir) / "demod.txt").string());
}

TwoWaySystem load_system(const std::string& dir) {
    TwoWaySystem system;
    system.config = read_config_manifest((fs::path(dir) / "manifest.txt").string());
    system.terminal_mod = load_weights((fs::path(dir) / "terminal_mod.txt").string());
    system.relay_mod = load_weights((fs::path(dir) / "relay_mod.txt").string());
    system.demod = load_weights((fs::path(dir) / "demod.txt").string());

    const auto check = [&](const MlpNetwork& net, int in_dim, int out_dim,
                           const char* which) {
        if (net.input_dim() != in_dim || net.output_dim() != out_dim) {
            throw ArtifactError((fs::path(dir) / which).string(), 0,
                                "network dims do not match the manifest");
        }
    };
    const SystemConfig& cfg = system.config;
    check(system.terminal_mod, cfg.k_bits, 2, "terminal_mod.txt");
    check(system.relay_mod, relay_feature_width(cfg.csi_mode, cfg.k_bits), 2,
          "relay_mod.txt");
    check(system.demod, demod_feature_width(cfg.csi_mode, cfg.k_bits), cfg.k_bits,
          "demod.txt");
    return system;
}

std::string config_hash(const SystemConfig& config) {
    const std::string text = config_manifest_text(config);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace pnclab
