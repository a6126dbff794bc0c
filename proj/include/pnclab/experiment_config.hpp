#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pnclab/relay_system.hpp"

namespace pnclab {

// Flat key = value experiment description shared by every command: the
// system config plus sweep grids, seeds and an optional output directory.
// A `version` key is mandatory; unknown keys are rejected with the
// offending line.
struct ExperimentFile {
    SystemConfig config;
    std::vector<double> train_snr_grid_db;
    std::vector<double> eval_snr_grid_db;
    std::vector<std::uint64_t> seeds;
    long eval_symbols = 100000;
    std::string out_dir;
};

ExperimentFile parse_experiment_text(const std::string& text, const std::string& name);
ExperimentFile parse_experiment_file(const std::string& path);

// Manifest persisted next to the weight files: the system-config subset of
// the experiment schema, deterministic byte-for-byte.
std::string config_manifest_text(const SystemConfig& config);
void write_config_manifest(const SystemConfig& config, const std::string& path);
SystemConfig read_config_manifest(const std::string& path);

// Model directory = manifest.txt + terminal_mod.txt + relay_mod.txt +
// demod.txt.
void save_system(const TwoWaySystem& system, const std::string& dir);
TwoWaySystem load_system(const std::string& dir);

// FNV-1a over the canonical manifest text; names sweep cell directories.
std::string config_hash(const SystemConfig& config);

}  // namespace pnclab
