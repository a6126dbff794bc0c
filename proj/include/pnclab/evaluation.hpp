#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pnclab/matrix.hpp"
#include "pnclab/relay_system.hpp"
#include "pnclab/rng.hpp"

namespace pnclab {

// Achievable-rate identity: GMI = 1 - mean bitwise cross entropy of the
// LLRs, and sum rate = 2 K * GMI across the two terminals.
double gmi_from_llrs(const Matrix& llrs, const Matrix& bits);

struct EvalResult {
    double mean_loss = 1.0;
    double sum_rate = 0.0;
};

// Monte Carlo loss/sum-rate of a frozen (calibrated) system at one SNR.
// Fresh channel draw every `minibatch` symbols, fresh noise per symbol.
EvalResult estimate_sum_rate(const TwoWaySystem& system, double eval_snr_db,
                             long n_symbols, Rng& rng);

struct SumRateCurve {
    struct Entry {
        double eval_snr_db = 0.0;
        double best_train_snr_db = 0.0;  // NaN renders as NA (baselines)
        double mean_loss = 1.0;
        double sum_rate = 0.0;
    };
    std::vector<Entry> entries;  // sorted by eval_snr_db
};

struct SweepModelCurve {
    double train_snr_db = 0.0;
    std::uint64_t seed = 0;
    SumRateCurve curve;
};

struct SweepResult {
    SumRateCurve envelope;  // pointwise best over the trained models
    std::vector<SweepModelCurve> models;
};

// Trains one system per (train SNR, seed), evaluates every model over the
// eval grid, and reports the pointwise best; ties break toward the lower
// train SNR. Cells run on `jobs` worker threads, each with its own RNG
// stream; the merged output is deterministic.
SweepResult sweep(const SystemConfig& base_config,
                  const std::vector<double>& train_grid_db,
                  const std::vector<double>& eval_grid_db,
                  const std::vector<std::uint64_t>& seeds, long eval_symbols,
                  int jobs = 1);

struct ConstellationDump {
    struct Point {
        std::string label_bits;
        double i = 0.0;
        double q = 0.0;
    };
    std::vector<Point> points;
};

// M evaluated on every k-bit pattern.
ConstellationDump extract_terminal_constellation(const TwoWaySystem& system);

// Every noiseless superposition H_A M(s_a) + H_B M(s_b) pushed through the
// relay, labelled by the concatenated (s_a, s_b) bits.
ConstellationDump extract_relay_constellation(const TwoWaySystem& system,
                                              const ComplexCoef& h_a,
                                              const ComplexCoef& h_b);

// CSV formats. Sum-rate files carry the header
// eval_snr_db,best_train_snr_db,mean_loss,sum_rate_bps_hz with fixed
// 6-decimal fields; constellation files carry label_bits,i,q.
std::string sum_rate_csv_text(const SumRateCurve& curve);
void write_sum_rate_csv(const SumRateCurve& curve, const std::string& path);
SumRateCurve read_sum_rate_csv(const std::string& path);

std::string constellation_csv_text(const ConstellationDump& dump);
void write_constellation_csv(const ConstellationDump& dump, const std::string& path);
ConstellationDump read_constellation_csv(const std::string& path);

}  // namespace pnclab
